#pragma once

namespace ioredux {

inline constexpr const char* kVersion = "0.1.0";

}
