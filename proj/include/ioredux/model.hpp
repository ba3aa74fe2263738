#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

namespace ioredux {

// ============================================================================
// Parameterized dynamical model under study: the physical/unit-cube parameter
// bijection, a built-in stratified transmission model, and the outcome
// functionals evaluated on its trajectories.
// ============================================================================

/// Box of physical parameters Gamma = Gamma_1 x ... x Gamma_m with the affine
/// bijection onto [0,1]^m. Only uniform per-coordinate densities are
/// supported; the tag is the extension point for other families.
struct ParameterSpace {
    std::vector<std::string> names;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<std::string> densities;  // empty means all "uniform"

    int dim() const { return static_cast<int>(names.size()); }
};

void validate_space(const ParameterSpace& space);

/// theta_i = (theta_hat_i - lower_i) / (upper_i - lower_i); errors name the
/// offending coordinate.
Eigen::VectorXd to_unit(const ParameterSpace& space, const Eigen::VectorXd& theta_hat);

/// Affine inverse of to_unit; theta must lie in the closed unit cube.
Eigen::VectorXd from_unit(const ParameterSpace& space, const Eigen::VectorXd& theta);

// ----------------------------------------------------------------------------
// Built-in model: four interacting transmission groups, five compartments per
// group (susceptible, on prophylaxis, infected undiagnosed / diagnosed /
// treated), plus cumulative-infection and cumulative-spending accumulators.
// Ten intervention rates: prophylaxis uptake per group, treatment uptake and
// testing rate per group with the two heterosexual groups sharing levers.
// ----------------------------------------------------------------------------

inline constexpr int kGroups = 4;
inline constexpr int kParams = 10;
inline constexpr int kOutputs = 6;

struct CostConstants {
    double prophylaxis_per_person_year = 0.0;
    double care_diagnosed_per_person_year = 0.0;
    double care_treated_per_person_year = 0.0;
    double per_test = 0.0;       // applied to the testing rate over S + P + I_U
    double per_diagnosis = 0.0;  // applied to the diagnosis flow out of I_U
};

struct ModelConfig {
    std::array<std::string, kGroups> groups{{"A", "B", "C", "D"}};
    Eigen::VectorXd population;           // per group
    Eigen::VectorXd initial_undiagnosed;  // I_U at t = 0
    Eigen::VectorXd initial_diagnosed;    // I_D at t = 0
    Eigen::VectorXd initial_treated;      // I_T at t = 0
    Eigen::VectorXd beta;                 // per-group transmission coefficient
    Eigen::MatrixXd mixing;               // 4 x 4, row g weights sources h
    double infectiousness_undiagnosed = 1.0;
    double infectiousness_diagnosed = 0.7;
    double infectiousness_treated = 0.1;
    double prophylaxis_efficacy = 0.99;
    CostConstants costs;
    double horizon_years = 8.0;
    double step_years = 0.01;
    Eigen::VectorXd baselines;  // length kParams, physical rate baselines
    double box_factor = 3.0;    // upper bound = box_factor * baseline
};

void validate_model_config(const ModelConfig& config);

/// Parameter box implied by the config: each rate ranges from its baseline to
/// box_factor * baseline.
ParameterSpace parameter_space(const ModelConfig& config);

/// Fixed order of the intervention parameters.
const std::vector<std::string>& builtin_parameter_names();

/// Fixed order of the outcome vector entries.
const std::vector<std::string>& builtin_output_labels();

// State layout: [S_0..3, P_0..3, IU_0..3, ID_0..3, IT_0..3, Cum_0..3, Cost].
inline constexpr int kStateSize = 5 * kGroups + kGroups + 1;

struct ModelState {
    double t = 0.0;
    Eigen::VectorXd y;  // length kStateSize
};

struct Trajectory {
    std::vector<ModelState> states;  // includes t = 0 and the terminal state
};

namespace state_index {
inline int susceptible(int g) { return g; }
inline int prophylaxis(int g) { return kGroups + g; }
inline int undiagnosed(int g) { return 2 * kGroups + g; }
inline int diagnosed(int g) { return 3 * kGroups + g; }
inline int treated(int g) { return 4 * kGroups + g; }
inline int cumulative(int g) { return 5 * kGroups + g; }
inline constexpr int cost = 6 * kGroups;
}  // namespace state_index

double group_population(const Eigen::VectorXd& state, int g);

/// Classical fixed-step RK4 for dy/dt = f(t, y).
using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
Eigen::VectorXd rk4_step(const OdeRhs& f, double t, const Eigen::VectorXd& y, double dt);

// Compartments this far below zero are integrator round-off and are clipped;
// anything lower aborts the run as a step-size failure.
inline constexpr double kNegativityTol = 1e-9;

/// Integrates the built-in model at physical parameters theta_hat over
/// [0, horizon] with the given fixed step (step must divide horizon).
/// Throws EvaluationError on NaN or a compartment escaping below
/// -kNegativityTol.
Trajectory simulate(const ModelConfig& config, const Eigen::VectorXd& theta_hat,
                    double horizon_years, double step_years);
Trajectory simulate(const ModelConfig& config, const Eigen::VectorXd& theta_hat);

struct OutcomeVector {
    Eigen::VectorXd values;  // length kOutputs
    std::vector<std::string> labels;
};

/// Cumulative new infections per group and in total over the horizon, plus
/// total spending.
OutcomeVector outcomes(const Trajectory& trajectory);

}  // namespace ioredux
