#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ioredux/sparsegrid.hpp"

namespace ioredux {

// ============================================================================
// Polynomial chaos surrogate over [0,1]^m in the orthonormal shifted Legendre
// basis (uniform density): basis recurrences, total-degree index sets,
// discrete-projection fitting, evaluation and Jacobian assembly.
// ============================================================================

inline constexpr int kMaxLegendreDegree = 64;

/// Orthonormal shifted Legendre polynomial L~_n on [0,1]:
/// L~_0 = 1, L~_1(x) = sqrt(3)*(2x-1), int_0^1 L~_i L~_j = delta_ij.
double legendre_eval(int n, double x);

/// d/dx L~_n via the derivative recurrence in polynomial form, valid on the
/// closed interval including both endpoints.
double legendre_deriv(int n, double x);

/// Values of L~_0..L~_nmax at x (single recurrence pass).
std::vector<double> legendre_all(int nmax, double x);

/// Derivatives of L~_0..L~_nmax at x.
std::vector<double> legendre_deriv_all(int nmax, double x);

struct MultiIndexSet {
    int dim = 0;
    std::vector<std::vector<int>> indices;  // distinct, downward closed
    int max_total_degree = 0;
};

inline constexpr std::size_t kDefaultIndexCap = 100000;

/// All alpha in N^dim with |alpha|_1 <= degree, graded lexicographic order.
/// Size is binomial(dim + degree, degree); throws above max_indices.
MultiIndexSet total_degree_set(int dim, int degree, std::size_t max_indices = kDefaultIndexCap);

struct SurrogateInfo {
    std::string design_hash;   // provenance link, set by the caller
    double fit_residual = 0.0; // max |eval - training| over design points
    int grid_dim = 0;
    int grid_level = 0;
    int index_degree = 0;
};

/// Vector-valued polynomial chaos expansion: row i of coeffs holds the
/// coefficients of the i-th output component over index_set.
struct Surrogate {
    MultiIndexSet index_set;
    Eigen::MatrixXd coeffs;  // p x s
    int p = 0;
    SurrogateInfo provenance;
};

// Coefficients below kCoeffPruneTol * max|c| are stored as exact zeros so
// artifacts diff cleanly.
inline constexpr double kCoeffPruneTol = 1e-14;

/// Discrete projection: c_{i,alpha} = sum_q w_q * y_i(theta_q) * L~_alpha(theta_q).
/// reduced_outputs is p x k with columns aligned to grid points.
Surrogate fit_gpce(const SparseGrid& grid, const Eigen::MatrixXd& reduced_outputs,
                   const MultiIndexSet& index_set);

/// Phi~(theta); theta must lie in the closed unit cube.
Eigen::VectorXd eval_surrogate(const Surrogate& s, const Eigen::VectorXd& theta);

/// Jacobian of Phi~ at theta: entry (i,j) = d Phi~_i / d theta_j.
Eigen::MatrixXd grad_surrogate(const Surrogate& s, const Eigen::VectorXd& theta);

}  // namespace ioredux
