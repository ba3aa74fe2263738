#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ioredux/errors.hpp"
#include "ioredux/reduction.hpp"

using namespace ioredux;

namespace {

SnapshotMatrix make_snapshot(const Eigen::MatrixXd& data) {
    SnapshotMatrix snap;
    snap.data = data;
    for (long i = 0; i < data.rows(); ++i) snap.row_labels.push_back("y_" + std::to_string(i + 1));
    for (long j = 0; j < data.cols(); ++j) snap.design_ids.push_back("p" + std::to_string(j));
    return snap;
}

Eigen::MatrixXd random_matrix(long rows, long cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Independent eigendecomposition oracle for the PCA basis: left singular
// vectors of Y are eigenvectors of Y*Y^T.
Eigen::MatrixXd gram_eigvec_oracle(const Eigen::MatrixXd& y, int p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(y * y.transpose());
    Eigen::MatrixXd vec = es.eigenvectors();  // ascending eigenvalues
    Eigen::MatrixXd out(y.rows(), p);
    for (int j = 0; j < p; ++j) out.col(j) = vec.col(vec.cols() - 1 - j);
    return out;
}

void check_penrose(const Eigen::MatrixXd& j) {
    const Eigen::MatrixXd pinv = pseudoinverse(j);
    const double smax = svd(j).s.size() ? svd(j).s(0) : 0.0;
    const double tol = 1e-10 * std::max(smax, 1e-30);
    CHECK((j * pinv * j - j).cwiseAbs().maxCoeff() <= tol);
    CHECK((pinv * j * pinv - pinv).cwiseAbs().maxCoeff() <= tol);
    CHECK(((j * pinv).transpose() - j * pinv).cwiseAbs().maxCoeff() <= tol);
    CHECK(((pinv * j).transpose() - pinv * j).cwiseAbs().maxCoeff() <= tol);
}

}  // namespace

TEST_CASE("standardize_rows matches hand-computed means and scales") {
    Eigen::MatrixXd data(2, 2);
    data << 1, 3, 2, 2;
    auto [ystd, st] = standardize_rows(make_snapshot(data));

    CHECK(st.means(0) == doctest::Approx(2.0));
    CHECK(st.means(1) == doctest::Approx(2.0));
    CHECK(st.scales(0) == doctest::Approx(1.0));
    CHECK(st.scales(1) == doctest::Approx(1.0));  // constant row floored
    CHECK(ystd(0, 0) == doctest::Approx(-1.0));
    CHECK(ystd(0, 1) == doctest::Approx(1.0));
    CHECK(ystd(1, 0) == doctest::Approx(0.0));
    CHECK(ystd(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("standardize_rows maps a constant row to zeros") {
    Eigen::MatrixXd data(1, 4);
    data << 5, 5, 5, 5;
    auto [ystd, st] = standardize_rows(make_snapshot(data));
    CHECK(ystd.cwiseAbs().maxCoeff() == 0.0);
    CHECK(st.scales(0) == 1.0);
}

TEST_CASE("standardization round-trips a random 6x221 matrix") {
    const Eigen::MatrixXd y = random_matrix(6, 221, 42).array() * 13.0 + 7.0;
    auto [ystd, st] = standardize_rows(make_snapshot(y));
    const Eigen::MatrixXd back = unstandardize_rows(ystd, st);
    CHECK((back - y).cwiseAbs().maxCoeff() <= 1e-12 * y.cwiseAbs().maxCoeff());
}

TEST_CASE("standardize_rows rejects non-finite input with its location") {
    Eigen::MatrixXd data = Eigen::MatrixXd::Zero(2, 3);
    data(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(standardize_rows(make_snapshot(data)),
                         doctest::Contains("row 1"), std::invalid_argument);
}

TEST_CASE("truncated_pca on a rank-1 matrix retains one component") {
    Eigen::MatrixXd ystd(2, 2);
    ystd << 1, -1, 0, 0;
    Standardization st{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
    const PCABasis basis = truncated_pca(ystd, 0.95, st);
    CHECK(basis.p == 1);
    CHECK(basis.retained_variance == doctest::Approx(1.0));
    // Sign convention: largest-magnitude entry positive.
    CHECK(basis.u(0, 0) == doctest::Approx(1.0));
    CHECK(basis.u(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("truncated_pca with threshold 1 keeps min(d,k) on a full-rank matrix") {
    const Eigen::MatrixXd ystd = random_matrix(4, 9, 7);
    Standardization st{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
    const PCABasis basis = truncated_pca(ystd, 1.0, st);
    CHECK(basis.p == 4);
    CHECK(basis.retained_variance == doctest::Approx(1.0));
}

TEST_CASE("truncated_pca rejects an all-zero matrix") {
    Standardization st{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
    CHECK_THROWS_AS(truncated_pca(Eigen::MatrixXd::Zero(3, 5), 0.95, st), ReductionError);
}

TEST_CASE("truncated_pca recovers a 4-factor structure against the Gram oracle") {
    // 6x221 matrix built from 4 random orthogonal factors plus 1e-6 noise.
    std::mt19937 rng(123);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd factors = random_matrix(6, 4, 11);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(factors);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(6, 4);
    Eigen::MatrixXd loadings(4, 221);
    // Distinct factor strengths keep the spectrum well separated while the
    // first three fall short of the 95% threshold.
    const double strength[4] = {4.0, 3.0, 2.2, 1.8};
    for (long i = 0; i < 4; ++i)
        for (long j = 0; j < 221; ++j) loadings(i, j) = strength[i] * dist(rng);
    Eigen::MatrixXd ystd = q * loadings + 1e-6 * random_matrix(6, 221, 99);

    Standardization st{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)};
    const PCABasis basis = truncated_pca(ystd, 0.95, st);
    CHECK(basis.p == 4);
    CHECK(basis.retained_variance >= 0.95);

    const Eigen::MatrixXd oracle = gram_eigvec_oracle(ystd, 4);
    for (int j = 0; j < 4; ++j) {
        const double align = std::abs(basis.u.col(j).dot(oracle.col(j)));
        CHECK(align == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK((basis.u.transpose() * basis.u - Eigen::MatrixXd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
}

TEST_CASE("truncation dimension is monotone in the threshold") {
    const Eigen::MatrixXd ystd = random_matrix(6, 40, 5);
    Standardization st{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)};
    int prev = 0;
    for (double t : {0.2, 0.5, 0.8, 0.95, 0.999, 1.0}) {
        const int p = truncated_pca(ystd, t, st).p;
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("project applies standardization before the basis") {
    Eigen::MatrixXd data(3, 4);
    data << 1, 2, 3, 4, 10, 10, 11, 11, 0, 1, 0, 1;
    auto [ystd, st] = standardize_rows(make_snapshot(data));
    const PCABasis basis = truncated_pca(ystd, 1.0, st);

    // The means vector standardizes to zero, hence projects to zero.
    const Eigen::VectorXd zero = project(basis, st.means);
    CHECK(zero.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("project with an identity basis picks leading entries") {
    PCABasis basis;
    basis.p = 2;
    basis.u = Eigen::MatrixXd::Identity(4, 2);
    basis.singular_values = Eigen::VectorXd::Ones(4);
    basis.standardization = {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4)};
    Eigen::VectorXd y(4);
    y << 3, -1, 7, 2;
    const Eigen::VectorXd r = project(basis, y);
    CHECK(r(0) == doctest::Approx(3.0));
    CHECK(r(1) == doctest::Approx(-1.0));
}

TEST_CASE("project equals the explicit matrix-vector product") {
    const Eigen::MatrixXd ystd = random_matrix(5, 30, 21);
    Standardization st{Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(5)};
    const PCABasis basis = truncated_pca(ystd, 1.0, st);
    const Eigen::VectorXd y = random_matrix(5, 1, 22).col(0);

    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(basis.p);
    for (int j = 0; j < basis.p; ++j)
        for (int i = 0; i < 5; ++i) oracle(j) += basis.u(i, j) * y(i);
    CHECK((project(basis, y) - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("project is linear under identity standardization") {
    const Eigen::MatrixXd ystd = random_matrix(6, 25, 31);
    Standardization st{Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6)};
    const PCABasis basis = truncated_pca(ystd, 0.9, st);
    std::mt19937 rng(77);
    std::normal_distribution<double> dist;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd y1 = random_matrix(6, 1, 100 + rep).col(0);
        const Eigen::VectorXd y2 = random_matrix(6, 1, 200 + rep).col(0);
        const double a = dist(rng), b = dist(rng);
        const Eigen::VectorXd lhs = project(basis, (a * y1 + b * y2).eval());
        const Eigen::VectorXd rhs = a * project(basis, y1) + b * project(basis, y2);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("svd reconstructs random inputs") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const Eigen::MatrixXd y = random_matrix(6, 15, seed);
        const SvdResult f = svd(y);
        const Eigen::MatrixXd back = f.u * f.s.asDiagonal() * f.v.transpose();
        CHECK((back - y).norm() <= 1e-10 * y.norm());
    }
}

TEST_CASE("pseudoinverse of a diagonal rectangular matrix") {
    Eigen::MatrixXd j(2, 3);
    j << 2, 0, 0, 0, 4, 0;
    const Eigen::MatrixXd pinv = pseudoinverse(j);
    CHECK(pinv(0, 0) == doctest::Approx(0.5));
    CHECK(pinv(1, 1) == doctest::Approx(0.25));
    CHECK(pinv(2, 0) == doctest::Approx(0.0));
    CHECK(pinv(2, 1) == doctest::Approx(0.0));
    CHECK(pinv(0, 1) == doctest::Approx(0.0));
    CHECK(pinv(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("pseudoinverse of the identity is the identity") {
    const Eigen::MatrixXd pinv = pseudoinverse(Eigen::MatrixXd::Identity(3, 3));
    CHECK((pinv - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("pseudoinverse of a zero matrix is the zero transpose") {
    const Eigen::MatrixXd pinv = pseudoinverse(Eigen::MatrixXd::Zero(2, 5));
    CHECK(pinv.rows() == 5);
    CHECK(pinv.cols() == 2);
    CHECK(pinv.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pseudoinverse matches the normal-equations oracle on full row rank") {
    const Eigen::MatrixXd j = random_matrix(4, 10, 17);
    const Eigen::MatrixXd pinv = pseudoinverse(j);
    // Independent route: J^T (J J^T)^{-1} via an LU solve.
    const Eigen::MatrixXd oracle =
        j.transpose() * (j * j.transpose()).partialPivLu().solve(Eigen::MatrixXd::Identity(4, 4));
    CHECK((pinv - oracle).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Penrose conditions hold over randomized shapes including rank-deficient") {
    std::mt19937 rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const unsigned seed = static_cast<unsigned>(rng());
        Eigen::MatrixXd j;
        switch (rep % 4) {
            case 0: j = random_matrix(4, 10, seed); break;
            case 1: j = random_matrix(10, 4, seed); break;
            case 2: j = random_matrix(6, 6, seed); break;
            default: {
                // rank 2 by construction
                j = random_matrix(5, 2, seed) * random_matrix(2, 7, seed + 1);
                break;
            }
        }
        check_penrose(j);
    }
}
