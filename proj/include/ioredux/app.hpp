#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ioredux/model.hpp"
#include "ioredux/pipeline.hpp"
#include "ioredux/runner.hpp"

namespace ioredux::app {

// ============================================================================
// Command implementations behind the CLI. Each function performs one pipeline
// stage end to end (provenance checks, computation, artifact + manifest
// writes) and throws the typed errors that the entry point maps to exit
// codes. Tests drive the same functions directly.
// ============================================================================

/// Parsed tool configuration (JSON file). The built-in model block and the
/// explicit parameter block are both optional, but every command needs at
/// least one of them to define the parameter space.
struct AppConfig {
    std::optional<ModelConfig> model;
    std::optional<ParameterSpace> parameters;

    int design_level = 2;
    std::size_t max_points = kDefaultPointCap;

    double variance_threshold = 0.95;
    Eigen::VectorXd theta0;     // empty selects the cube center
    int surrogate_degree = -1;  // -1 selects the grid level

    double verify_delta = 1.0;
    double verify_diag_low = 0.9;
    double verify_diag_high = 1.1;
    double verify_offdiag_max = 0.05;

    std::string runner_type = "builtin";  // "builtin" | "external"
    std::string runner_command;
    std::string runner_workdir;
    int jobs = 1;

    std::string path;
    std::string hash;
};

AppConfig load_config(const std::string& path);

/// Parameter space from the explicit block if present, otherwise derived
/// from the built-in model baselines.
ParameterSpace config_space(const AppConfig& config);

/// Model runner selected by the config; IOREDUX_MODEL_COMMAND overrides the
/// external command when set.
std::unique_ptr<ModelRunner> make_runner(const AppConfig& config, int jobs);

struct SampleOptions {
    std::string config_path;
    std::string out_dir;
    int level = -1;  // -1 keeps the config value
};

struct EvaluateOptions {
    std::string config_path;
    std::string design_path;
    std::string out_path;
    int jobs = 0;  // 0 keeps the config value
};

struct ReduceOptions {
    std::string config_path;
    std::string design_path;
    std::string snapshot_path;
    std::string out_path;
    double threshold = 0.0;  // 0 keeps the config value
    int degree = -2;         // -2 keeps the config value
};

struct VerifyOptions {
    std::string config_path;
    std::string rom_path;
    std::string out_path;
    double delta = 0.0;  // 0 keeps the config value
    int jobs = 0;
};

struct PlanOptions {
    std::string config_path;  // may be empty without --evaluate
    std::string rom_path;
    std::string targets_path;
    std::string out_path;
    bool evaluate = false;
    bool strict = false;
    int jobs = 0;
};

struct ReportOptions {
    std::string rom_path;
    std::string out_dir;
};

void cmd_sample(const SampleOptions& opt);
void cmd_evaluate(const EvaluateOptions& opt);
void cmd_reduce(const ReduceOptions& opt);

/// Returns true when the verification matrix meets the configured
/// tolerances; the CLI maps false to the verification exit code.
bool cmd_verify(const VerifyOptions& opt);

/// Returns true when no plan raised a reachability warning; under --strict
/// the CLI maps false to the targets exit code.
bool cmd_plan(const PlanOptions& opt);

void cmd_report(const ReportOptions& opt);

}  // namespace ioredux::app
