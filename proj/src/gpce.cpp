#include "ioredux/gpce.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace ioredux {

namespace {

void check_domain(int n, double x) {
    if (n < 0 || n > kMaxLegendreDegree) {
        std::ostringstream os;
        os << "legendre degree " << n << " outside [0, " << kMaxLegendreDegree << "]";
        throw std::invalid_argument(os.str());
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "legendre argument " << x << " outside [0,1]";
        throw std::invalid_argument(os.str());
    }
}

void check_cube(const Eigen::VectorXd& theta, int dim) {
    if (theta.size() != dim)
        throw std::invalid_argument("theta dimension does not match surrogate dimension");
    for (long i = 0; i < theta.size(); ++i) {
        if (!(theta(i) >= 0.0 && theta(i) <= 1.0)) {
            std::ostringstream os;
            os << "theta_" << (i + 1) << " = " << theta(i) << " outside the unit cube";
            throw std::invalid_argument(os.str());
        }
    }
}

long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::vector<double> legendre_all(int nmax, double x) {
    check_domain(nmax, x);
    const double t = 2.0 * x - 1.0;
    std::vector<double> out(nmax + 1);
    double pm1 = 1.0, p = t;
    out[0] = 1.0;
    if (nmax >= 1) out[1] = std::sqrt(3.0) * t;
    for (int n = 2; n <= nmax; ++n) {
        const double pn = ((2.0 * n - 1.0) * t * p - (n - 1.0) * pm1) / n;
        out[n] = std::sqrt(2.0 * n + 1.0) * pn;
        pm1 = p;
        p = pn;
    }
    return out;
}

std::vector<double> legendre_deriv_all(int nmax, double x) {
    check_domain(nmax, x);
    const double t = 2.0 * x - 1.0;
    std::vector<double> out(nmax + 1);
    // P'_{n+1}(t) = P'_{n-1}(t) + (2n+1) P_n(t); chain rule gives the extra
    // factor 2 from t = 2x - 1.
    double pm1 = 1.0, p = t;
    double dpm1 = 0.0, dp = 1.0;
    out[0] = 0.0;
    if (nmax >= 1) out[1] = std::sqrt(3.0) * 2.0;
    for (int n = 2; n <= nmax; ++n) {
        const double pn = ((2.0 * n - 1.0) * t * p - (n - 1.0) * pm1) / n;
        const double dpn = dpm1 + (2.0 * n - 1.0) * p;
        out[n] = std::sqrt(2.0 * n + 1.0) * 2.0 * dpn;
        pm1 = p;
        p = pn;
        dpm1 = dp;
        dp = dpn;
    }
    return out;
}

double legendre_eval(int n, double x) { return legendre_all(n, x)[n]; }

double legendre_deriv(int n, double x) { return legendre_deriv_all(n, x)[n]; }

MultiIndexSet total_degree_set(int dim, int degree, std::size_t max_indices) {
    if (dim < 1) throw std::invalid_argument("total_degree_set: dim must be >= 1");
    if (degree < 0) throw std::invalid_argument("total_degree_set: degree must be >= 0");
    const long long size = binomial(dim + degree, degree);
    if (size < 0 || static_cast<std::size_t>(size) > max_indices) {
        std::ostringstream os;
        os << "total_degree_set: size " << size << " exceeds cap " << max_indices;
        throw std::invalid_argument(os.str());
    }

    MultiIndexSet set;
    set.dim = dim;
    set.max_total_degree = degree;
    set.indices.reserve(static_cast<std::size_t>(size));

    std::vector<int> alpha(dim, 0);
    // Graded order: total degree ascending, lexicographic within a degree.
    std::function<void(int, int)> recurse = [&](int pos, int remaining) {
        if (pos == dim - 1) {
            alpha[pos] = remaining;
            set.indices.push_back(alpha);
            alpha[pos] = 0;
            return;
        }
        for (int a = remaining; a >= 0; --a) {
            alpha[pos] = a;
            recurse(pos + 1, remaining - a);
        }
        alpha[pos] = 0;
    };
    for (int total = 0; total <= degree; ++total) recurse(0, total);
    return set;
}

namespace {

// Basis values for every index in the set at one point, from per-dimension
// recurrence tables.
Eigen::VectorXd basis_row(const MultiIndexSet& set, const Eigen::VectorXd& theta) {
    std::vector<std::vector<double>> tables(set.dim);
    for (int d = 0; d < set.dim; ++d)
        tables[d] = legendre_all(set.max_total_degree, theta(d));
    Eigen::VectorXd row(static_cast<long>(set.indices.size()));
    for (std::size_t s = 0; s < set.indices.size(); ++s) {
        double v = 1.0;
        for (int d = 0; d < set.dim; ++d) v *= tables[d][set.indices[s][d]];
        row(static_cast<long>(s)) = v;
    }
    return row;
}

}  // namespace

Surrogate fit_gpce(const SparseGrid& grid, const Eigen::MatrixXd& reduced_outputs,
                   const MultiIndexSet& index_set) {
    if (index_set.dim != grid.dim)
        throw std::invalid_argument("fit_gpce: index set dimension does not match grid");
    const long k = static_cast<long>(grid.points.size());
    if (reduced_outputs.cols() != k)
        throw std::invalid_argument("fit_gpce: output columns do not match grid point count");
    if (!reduced_outputs.allFinite())
        throw std::invalid_argument("fit_gpce: non-finite training data");

    const long p = reduced_outputs.rows();
    const long s = static_cast<long>(index_set.indices.size());

    Eigen::MatrixXd basis(k, s);  // row q: all basis values at theta_q
    for (long q = 0; q < k; ++q) basis.row(q) = basis_row(index_set, grid.points[q]);

    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), k);
    Eigen::MatrixXd coeffs = reduced_outputs * w.asDiagonal() * basis;  // p x s

    if (!coeffs.allFinite()) throw std::invalid_argument("fit_gpce: non-finite coefficients");

    const double cmax = coeffs.cwiseAbs().maxCoeff();
    coeffs = (coeffs.cwiseAbs().array() < kCoeffPruneTol * cmax).select(0.0, coeffs);

    Surrogate out;
    out.index_set = index_set;
    out.coeffs = coeffs;
    out.p = static_cast<int>(p);
    out.provenance.grid_dim = grid.dim;
    out.provenance.grid_level = grid.level;
    out.provenance.index_degree = index_set.max_total_degree;

    // Residual against the training data at the design points.
    double res = 0.0;
    for (long q = 0; q < k; ++q) {
        const Eigen::VectorXd pred = coeffs * basis.row(q).transpose();
        res = std::max(res, (pred - reduced_outputs.col(q)).cwiseAbs().maxCoeff());
    }
    out.provenance.fit_residual = res;
    return out;
}

Eigen::VectorXd eval_surrogate(const Surrogate& s, const Eigen::VectorXd& theta) {
    check_cube(theta, s.index_set.dim);
    return s.coeffs * basis_row(s.index_set, theta);
}

Eigen::MatrixXd grad_surrogate(const Surrogate& s, const Eigen::VectorXd& theta) {
    check_cube(theta, s.index_set.dim);
    const MultiIndexSet& set = s.index_set;
    const int m = set.dim;
    const long ns = static_cast<long>(set.indices.size());

    std::vector<std::vector<double>> vals(m), ders(m);
    for (int d = 0; d < m; ++d) {
        vals[d] = legendre_all(set.max_total_degree, theta(d));
        ders[d] = legendre_deriv_all(set.max_total_degree, theta(d));
    }

    // Column j of the term-derivative matrix substitutes the derivative for
    // the j-th factor of each tensor-product term.
    Eigen::MatrixXd dterm(ns, m);
    for (long t = 0; t < ns; ++t) {
        const std::vector<int>& alpha = set.indices[static_cast<std::size_t>(t)];
        for (int j = 0; j < m; ++j) {
            double v = 1.0;
            for (int d = 0; d < m; ++d)
                v *= (d == j) ? ders[d][alpha[d]] : vals[d][alpha[d]];
            dterm(t, j) = v;
        }
    }
    return s.coeffs * dterm;  // p x m
}

}  // namespace ioredux
