#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ioredux {

// ============================================================================
// Snapshot handling and the dense linear-algebra kernel: row standardization,
// SVD, variance-threshold PCA truncation, projection, Moore-Penrose
// pseudoinverse.
// ============================================================================

/// d x k matrix of outcome vectors; column j is the output of sample j.
struct SnapshotMatrix {
    Eigen::MatrixXd data;                  // d x k
    std::vector<std::string> row_labels;   // d outcome names
    std::vector<std::string> design_ids;   // k sample identifiers, design order
};

/// Throws std::invalid_argument if the snapshot violates its invariants
/// (k >= min_cols, d >= 1, finite entries, unique design ids, label/id
/// counts). Reduction requires k >= 2; bare evaluation accepts single-column
/// snapshots.
void validate_snapshot(const SnapshotMatrix& y, long min_cols = 2);

/// Per-row affine transform: standardized = (row - mean) / scale.
struct Standardization {
    Eigen::VectorXd means;   // length d
    Eigen::VectorXd scales;  // length d, strictly positive
};

// Rows whose population std falls below this floor (relative to the mean
// magnitude) are treated as constant and get scale 1, mapping them to zeros.
inline constexpr double kDegenerateRowTol = 1e-12;

/// Returns the standardized matrix (each row mean 0, non-degenerate rows
/// population-std 1) together with the transform that produced it.
std::pair<Eigen::MatrixXd, Standardization> standardize_rows(const SnapshotMatrix& y);

Eigen::MatrixXd unstandardize_rows(const Eigen::MatrixXd& ystd, const Standardization& st);
Eigen::VectorXd unstandardize(const Eigen::VectorXd& ystd, const Standardization& st);
Eigen::VectorXd standardize(const Eigen::VectorXd& y, const Standardization& st);

/// Thin SVD a = u * s.asDiagonal() * v^T with s nonincreasing.
struct SvdResult {
    Eigen::MatrixXd u;  // d x r
    Eigen::VectorXd s;  // r = min(d, k), nonincreasing, >= 0
    Eigen::MatrixXd v;  // k x r
};

SvdResult svd(const Eigen::MatrixXd& a);

/// Truncated PCA basis of a standardized snapshot matrix.
struct PCABasis {
    Eigen::MatrixXd u;                // d x p, orthonormal columns
    Eigen::VectorXd singular_values;  // length min(d, k), nonincreasing
    int p = 0;                        // retained dimension
    double retained_variance = 0.0;   // (sum_{i<=p} s_i^2) / (sum_i s_i^2)
    double variance_threshold = 0.0;  // threshold that selected p
    Standardization standardization;  // transform the basis was built under
};

/// Smallest p with retained variance >= variance_threshold. Columns of u are
/// left singular vectors ordered by nonincreasing singular value, each flipped
/// so its largest-magnitude entry is positive (stable artifacts across runs).
/// Throws ReductionError on an all-zero matrix.
PCABasis truncated_pca(const Eigen::MatrixXd& ystd, double variance_threshold,
                       const Standardization& st);

/// U_{1:p}^T * standardize(y).
Eigen::VectorXd project(const PCABasis& basis, const Eigen::VectorXd& y);

/// Inverse of project up to truncation: means + scales .* (U * reduced).
Eigen::VectorXd reconstruct(const PCABasis& basis, const Eigen::VectorXd& reduced);

// Singular values below kPinvRankTol * sigma_max are treated as zero when
// inverting, which extends the full-row-rank pseudoinverse formula to
// rank-deficient matrices.
inline constexpr double kPinvRankTol = 1e-10;

/// Moore-Penrose pseudoinverse (m x p result for a p x m input). A zero
/// matrix yields the zero transpose-shaped matrix.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& j);

/// Number of singular values above kPinvRankTol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& j);

}  // namespace ioredux
