#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <functional>

#include "ndkf/linalg.hpp"
#include "ndkf/rng.hpp"

using namespace ndkf;

namespace {

Matrix random_matrix(Rng &rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix random_spd(Rng &rng, int n) {
    const Matrix a = random_matrix(rng, n, n);
    return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

void expect_kind(ErrorKind kind, const std::function<void()> &fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(kind);
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

} // namespace

TEST(Cholesky, KnownFactor) {
    Matrix m(2, 2);
    m << 4, 2, 2, 3;
    Matrix expected(2, 2);
    expected << 2, 0, 1, std::sqrt(2.0);
    EXPECT_LT((linalg::cholesky_lower(m) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cholesky, ReconstructsRandomSpd) {
    Rng rng(1);
    for (int n = 1; n <= 6; ++n) {
        const Matrix m = random_spd(rng, n);
        const Matrix l = linalg::cholesky_lower(m);
        EXPECT_LT((l * l.transpose() - m).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Cholesky, RejectsIndefiniteAndAsymmetric) {
    Matrix indef(2, 2);
    indef << 1, 2, 2, 1;
    expect_kind(ErrorKind::NotSPD, [&] { linalg::cholesky_lower(indef); });
    Matrix asym(2, 2);
    asym << 1, 0.5, 0, 1;
    expect_kind(ErrorKind::NotSPD, [&] { linalg::cholesky_lower(asym); });
    expect_kind(ErrorKind::NotSPD, [&] { linalg::cholesky_lower(Matrix::Zero(2, 2)); });
    expect_kind(ErrorKind::DimensionMismatch, [&] { linalg::cholesky_lower(Matrix::Ones(2, 3)); });
}

TEST(InvertSpd, MatchesIdentity) {
    Rng rng(2);
    for (int n = 1; n <= 5; ++n) {
        const Matrix m = random_spd(rng, n);
        const Matrix inv = linalg::invert_spd(m);
        EXPECT_LT((m * inv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ((inv - inv.transpose()).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(InvertSpd, ScalarAndFailure) {
    EXPECT_DOUBLE_EQ(linalg::invert_spd(Matrix::Constant(1, 1, 4.0))(0, 0), 0.25);
    expect_kind(ErrorKind::NotSPD, [] { linalg::invert_spd(Matrix::Constant(1, 1, 0.0)); });
    expect_kind(ErrorKind::NotSPD, [] { linalg::invert_spd(-Matrix::Identity(2, 2)); });
}

TEST(SpectralNorm, DiagonalAndZero) {
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 0.5, -3.0, 2.0;
    EXPECT_NEAR(linalg::spectral_norm(d), 3.0, 1e-12);
    EXPECT_EQ(linalg::spectral_norm(Matrix::Zero(2, 2)), 0.0);
    EXPECT_NEAR(linalg::spectral_norm(Matrix::Identity(2, 2) * 0.9), 0.9, 1e-12);
}

// Oracle: largest singular value from Eigen's SVD.
TEST(SpectralNorm, MatchesSvdOnRandomMatrices) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + static_cast<int>(rng.below(5));
        const int cols = 1 + static_cast<int>(rng.below(5));
        const Matrix m = random_matrix(rng, rows, cols) * std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double sigma = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
        EXPECT_NEAR(linalg::spectral_norm(m), sigma, 1e-9 * std::max(1.0, sigma)) << m;
    }
}

TEST(SpectralNorm, NearlyEqualSingularValues) {
    Matrix m(2, 2);
    m << 1.0, 1e-7, 0.0, 1.0 - 1e-9;
    const double sigma = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    EXPECT_NEAR(linalg::spectral_norm(m), sigma, 1e-12);
}

TEST(SpectralNorm, NonFiniteThrows) {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = std::nan("");
    expect_kind(ErrorKind::NoConvergence, [&] { linalg::spectral_norm(m); });
}

TEST(Symmetrize, AveragesTranspose) {
    Matrix m(2, 2);
    m << 1, 2, 4, 3;
    Matrix expected(2, 2);
    expected << 1, 3, 3, 3;
    EXPECT_EQ(linalg::symmetrize(m), expected);
}
