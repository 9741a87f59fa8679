#include <gtest/gtest.h>

#include <set>

#include "ndkf/rng.hpp"

using namespace ndkf;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.normal(), b.normal());
        EXPECT_EQ(a.uniform(), b.uniform());
    }
}

TEST(Rng, DeriveSeedSeparatesStreams) {
    std::set<std::uint64_t> seen;
    for (const char *tag : {"truth-train", "meas-train", "truth-test", "meas-test", "node"}) {
        for (std::uint64_t i = 0; i < 10; ++i) {
            seen.insert(derive_seed(2025, tag, i));
        }
    }
    EXPECT_EQ(seen.size(), 50u);
    EXPECT_EQ(derive_seed(7, "node", 1), derive_seed(7, "node", 1));
    EXPECT_NE(derive_seed(7, "node", 1), derive_seed(8, "node", 1));
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

// Oracle: sample mean within 4σ/√n and variance within 5% for n = 100000.
TEST(Rng, NormalMoments) {
    Rng rng(9);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.05);
}

TEST(Rng, GaussianCovariance) {
    Matrix cov(2, 2);
    cov << 0.04, 0.01, 0.01, 0.09;
    Rng rng(4);
    const int n = 50000;
    Matrix acc = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        const Vector x = rng.gaussian(cov);
        acc += x * x.transpose();
    }
    EXPECT_LT((acc / n - cov).cwiseAbs().maxCoeff(), 0.004);
    EXPECT_EQ(rng.gaussian(Matrix::Zero(2, 2)), Vector::Zero(2));
}

TEST(Rng, BelowIsInRange) {
    Rng rng(5);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits) EXPECT_GT(h, 800);
}
