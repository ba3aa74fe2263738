#pragma once

#include <stdexcept>
#include <string>

namespace ioredux {

// Error categories map one-to-one onto the CLI exit codes, so library code
// throws the most specific type and the entry point only has to translate.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EvaluationError : std::runtime_error {
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ReductionError : std::runtime_error {
    explicit ReductionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct VerificationError : std::runtime_error {
    explicit VerificationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TargetsError : std::runtime_error {
    explicit TargetsError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProvenanceError : std::runtime_error {
    explicit ProvenanceError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int evaluation = 3;
inline constexpr int reduction = 4;
inline constexpr int verification = 5;
inline constexpr int targets = 6;
inline constexpr int provenance = 7;
}  // namespace exit_code

}  // namespace ioredux
