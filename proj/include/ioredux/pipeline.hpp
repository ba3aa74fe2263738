#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ioredux/gpce.hpp"
#include "ioredux/model.hpp"
#include "ioredux/reduction.hpp"
#include "ioredux/runner.hpp"
#include "ioredux/sparsegrid.hpp"

namespace ioredux {

// ============================================================================
// Reduced-order input/output pipeline: standardize and PCA-truncate the
// snapshot matrix, fit the polynomial-chaos surrogate over the reduced
// outputs, and pseudoinvert its Jacobian at theta0 to obtain the reduced
// input directions tau_j. Planning maps an output target straight to an
// input vector through those directions; no iteration involved.
// ============================================================================

/// Pseudoinverse-derived direction bundle for one Jacobian.
struct DirectionSet {
    Eigen::MatrixXd pinv;        // m x p
    Eigen::MatrixXd directions;  // m x p, column j = pinv * e_j
    int rank = 0;                // numerical rank of the Jacobian
    double residual = 0.0;       // max_j |J * tau_j - e_j|_inf
};

DirectionSet directions_from_jacobian(const Eigen::MatrixXd& jacobian);

struct RomDiagnostics {
    int jacobian_rank = 0;
    double eq_residual = 0.0;        // max_j |J tau_j - e_j|_inf
    double fit_residual = 0.0;       // surrogate residual at design points
    std::vector<double> tau_norm2;   // |tau_j|_2
    std::vector<double> tau_norminf; // |tau_j|_inf
    std::vector<std::string> warnings;
};

struct ReducedRom {
    ParameterSpace space;
    std::vector<std::string> row_labels;  // outcome names, snapshot order
    PCABasis basis;
    Surrogate surrogate;
    Eigen::VectorXd theta0;        // in (0,1)^m
    Eigen::MatrixXd jacobian;      // p x m
    Eigen::MatrixXd jacobian_pinv; // m x p
    Eigen::MatrixXd directions;    // m x p, column j = tau_j
    std::string design_hash;
    std::string snapshot_hash;
    RomDiagnostics diagnostics;

    int p() const { return basis.p; }
    int m() const { return static_cast<int>(theta0.size()); }
};

struct RomOptions {
    double variance_threshold = 0.95;
    Eigen::VectorXd theta0;        // empty selects the cube center
    int surrogate_degree = -1;     // -1 selects the grid level
    std::string design_hash;
    std::string snapshot_hash;
};

/// Builds the full reduced-order model from aligned snapshots and design.
/// Throws ReductionError on degenerate snapshots; a rank-deficient Jacobian
/// is reported as a warning and handled by the cutoff pseudoinverse.
ReducedRom build_rom(const ParameterSpace& space, const SnapshotMatrix& snapshots,
                     const SparseGrid& grid, const RomOptions& options);

/// The stored directions tau_1..tau_p as columns of an m x p matrix.
Eigen::MatrixXd reduced_directions(const ReducedRom& rom);

/// Model-based check of the directions: column j holds
/// (project(y(theta0 + delta tau_j)) - project(y(theta0))) / delta.
/// Near-identity confirms the directions. Throws VerificationError when a
/// perturbed point escapes the unit cube (use a smaller delta).
Eigen::MatrixXd verify_directions(const ReducedRom& rom, const ModelRunner& runner,
                                  double delta = 1.0);

struct PlanResult {
    Eigen::VectorXd theta_plan;       // clamped to the closed unit cube
    Eigen::VectorXd theta_unclamped;
    std::vector<bool> clamped;        // per coordinate
    Eigen::VectorXd coefficients;     // a = project(target) - Phi~(theta0)
    Eigen::VectorXd predicted_reduced;
    Eigen::VectorXd target;
    bool reachability_warning = false;
};

// A plan whose unclamped coordinates exceed the cube by more than this is
// flagged as a reachability concern.
inline constexpr double kReachabilityTol = 0.1;

/// theta_plan = clamp(theta0 + sum_i a_i tau_i) with
/// a = project(y_target) - Phi~(theta0). Clamping is flagged, never silent.
PlanResult plan_for_target(const ReducedRom& rom, const Eigen::VectorXd& y_target);

/// Principal component loadings: entry (i,j) = U_ij * sigma_j.
Eigen::MatrixXd export_loadings(const ReducedRom& rom);

/// Runner that reconstructs full outputs from the ROM's own surrogate;
/// feeding it to verify_directions checks the pipeline's internal
/// consistency without touching the model.
class SurrogateReconstructionRunner final : public ModelRunner {
  public:
    explicit SurrogateReconstructionRunner(const ReducedRom& rom) : rom_(rom) {}

    SnapshotMatrix run(const std::vector<Eigen::VectorXd>& unit_points,
                       const std::vector<std::string>& point_ids) const override;

  private:
    const ReducedRom& rom_;
};

// --- ROM artifact (JSON) ------------------------------------------------------

std::string rom_to_json(const ReducedRom& rom);
ReducedRom rom_from_json(const std::string& text);

}  // namespace ioredux
