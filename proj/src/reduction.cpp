#include "ioredux/reduction.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <set>
#include <sstream>

#include "ioredux/errors.hpp"

namespace ioredux {

void validate_snapshot(const SnapshotMatrix& y, long min_cols) {
    const auto d = y.data.rows();
    const auto k = y.data.cols();
    if (d < 1) throw std::invalid_argument("snapshot matrix needs at least one output row");
    if (k < min_cols) throw std::invalid_argument("snapshot matrix has too few sample columns");
    if (static_cast<long>(y.row_labels.size()) != d)
        throw std::invalid_argument("snapshot row_labels count does not match row count");
    if (static_cast<long>(y.design_ids.size()) != k)
        throw std::invalid_argument("snapshot design_ids count does not match column count");
    for (long i = 0; i < d; ++i) {
        for (long j = 0; j < k; ++j) {
            if (!std::isfinite(y.data(i, j))) {
                std::ostringstream os;
                os << "non-finite snapshot entry at row " << i << " (" << y.row_labels[i]
                   << "), column " << j << " (" << y.design_ids[j] << ")";
                throw std::invalid_argument(os.str());
            }
        }
    }
    std::set<std::string> seen(y.design_ids.begin(), y.design_ids.end());
    if (seen.size() != y.design_ids.size())
        throw std::invalid_argument("snapshot design_ids are not unique");
}

std::pair<Eigen::MatrixXd, Standardization> standardize_rows(const SnapshotMatrix& y) {
    validate_snapshot(y);
    const auto d = y.data.rows();
    const auto k = y.data.cols();

    Standardization st;
    st.means.resize(d);
    st.scales.resize(d);
    Eigen::MatrixXd out(d, k);

    for (long i = 0; i < d; ++i) {
        const double mean = y.data.row(i).mean();
        // Population standard deviation: the snapshot columns are a fixed
        // design, not an i.i.d. sample.
        const double var = (y.data.row(i).array() - mean).square().sum() / static_cast<double>(k);
        double scale = std::sqrt(var);
        if (scale < kDegenerateRowTol * std::max(1.0, std::abs(mean))) scale = 1.0;
        st.means(i) = mean;
        st.scales(i) = scale;
        out.row(i) = (y.data.row(i).array() - mean) / scale;
    }
    return {out, st};
}

Eigen::MatrixXd unstandardize_rows(const Eigen::MatrixXd& ystd, const Standardization& st) {
    if (ystd.rows() != st.means.size())
        throw std::invalid_argument("unstandardize_rows: row count does not match standardization");
    return (ystd.array().colwise() * st.scales.array()).colwise() + st.means.array();
}

Eigen::VectorXd unstandardize(const Eigen::VectorXd& ystd, const Standardization& st) {
    if (ystd.size() != st.means.size())
        throw std::invalid_argument("unstandardize: length does not match standardization");
    return st.means.array() + st.scales.array() * ystd.array();
}

Eigen::VectorXd standardize(const Eigen::VectorXd& y, const Standardization& st) {
    if (y.size() != st.means.size())
        throw std::invalid_argument("standardize: length does not match standardization");
    return (y.array() - st.means.array()) / st.scales.array();
}

SvdResult svd(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

namespace {

// SVD sign ambiguity must not change persisted artifacts: flip each column so
// its largest-magnitude entry is positive.
void fix_column_signs(Eigen::MatrixXd& u) {
    for (long j = 0; j < u.cols(); ++j) {
        long imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < 0.0) u.col(j) = -u.col(j);
    }
}

}  // namespace

PCABasis truncated_pca(const Eigen::MatrixXd& ystd, double variance_threshold,
                       const Standardization& st) {
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
        throw std::invalid_argument("variance threshold must lie in (0, 1]");
    if (!ystd.allFinite()) throw std::invalid_argument("truncated_pca: non-finite input");

    SvdResult f = svd(ystd);
    const double total = f.s.squaredNorm();
    if (total <= 0.0) throw ReductionError("degenerate snapshot matrix");

    int p = 0;
    double cum = 0.0;
    for (long i = 0; i < f.s.size(); ++i) {
        cum += f.s(i) * f.s(i);
        p = static_cast<int>(i) + 1;
        if (cum >= variance_threshold * total) break;
    }

    PCABasis basis;
    basis.u = f.u.leftCols(p);
    fix_column_signs(basis.u);
    basis.singular_values = f.s;
    basis.p = p;
    basis.retained_variance = f.s.head(p).squaredNorm() / total;
    basis.variance_threshold = variance_threshold;
    basis.standardization = st;
    return basis;
}

Eigen::VectorXd project(const PCABasis& basis, const Eigen::VectorXd& y) {
    if (y.size() != basis.u.rows())
        throw std::invalid_argument("project: vector length does not match basis dimension");
    if (!y.allFinite()) throw std::invalid_argument("project: non-finite input");
    return basis.u.transpose() * standardize(y, basis.standardization);
}

Eigen::VectorXd reconstruct(const PCABasis& basis, const Eigen::VectorXd& reduced) {
    if (reduced.size() != basis.p)
        throw std::invalid_argument("reconstruct: vector length does not match retained dimension");
    return unstandardize(basis.u * reduced, basis.standardization);
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& j) {
    if (!j.allFinite()) throw std::invalid_argument("pseudoinverse: non-finite input");
    SvdResult f = svd(j);
    const double smax = f.s.size() > 0 ? f.s(0) : 0.0;
    const double cutoff = kPinvRankTol * smax;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(f.s.size());
    for (long i = 0; i < f.s.size(); ++i)
        if (f.s(i) > cutoff && f.s(i) > 0.0) inv(i) = 1.0 / f.s(i);
    return f.v * inv.asDiagonal() * f.u.transpose();
}

int numerical_rank(const Eigen::MatrixXd& j) {
    SvdResult f = svd(j);
    const double smax = f.s.size() > 0 ? f.s(0) : 0.0;
    const double cutoff = kPinvRankTol * smax;
    int rank = 0;
    for (long i = 0; i < f.s.size(); ++i)
        if (f.s(i) > cutoff && f.s(i) > 0.0) ++rank;
    return rank;
}

}  // namespace ioredux
