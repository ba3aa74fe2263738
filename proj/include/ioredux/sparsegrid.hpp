#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ioredux {

// ============================================================================
// Smolyak sparse grids on [0,1]^m from nested 1-D Clenshaw-Curtis rules.
// ============================================================================

/// Nested 1-D quadrature rule on [0,1] with unit measure. Level 0 is the
/// midpoint rule; level l >= 1 has 2^l + 1 nodes (doubling rule), so the
/// nodes of level l are a subset of those of level l+1.
struct Rule1D {
    int level = 0;
    std::vector<double> nodes;    // sorted, in [0,1]
    std::vector<double> weights;  // sum to 1
};

inline constexpr int kMaxRuleLevel = 12;

/// Clenshaw-Curtis rule (extrema of Chebyshev polynomials mapped to [0,1]).
/// Exact for polynomials of degree <= node_count - 1. Throws on level above
/// kMaxRuleLevel.
Rule1D clenshaw_curtis_1d(int level);

struct SparseGrid {
    int dim = 0;
    int level = 0;
    std::vector<Eigen::VectorXd> points;  // pairwise distinct, lexicographic
    std::vector<double> weights;          // signed combination weights, sum to 1
    std::vector<std::string> point_ids;   // stable identifiers, design order
};

inline constexpr std::size_t kDefaultPointCap = 100000;

/// Smolyak combination of tensorized Clenshaw-Curtis rules over all
/// multi-indices i in N^dim with |i|_1 <= level. Coinciding points are merged
/// with summed weights. Throws if the point count exceeds max_points.
SparseGrid smolyak_grid(int dim, int level, std::size_t max_points = kDefaultPointCap);

/// sum_i weights[i] * values[i]; throws on length mismatch.
double grid_quadrature(const SparseGrid& grid, const std::vector<double>& values);

}  // namespace ioredux
