#include "ndkf/rng.hpp"

#include <cmath>
#include <numbers>

namespace ndkf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index) {
    // FNV-1a over the tag keeps stream names stable across builds.
    std::uint64_t tag = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        tag ^= c;
        tag *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(base ^ tag) + index);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Vector Rng::normal_vector(Eigen::Index dim) {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        v(i) = normal();
    }
    return v;
}

Vector Rng::gaussian(const Matrix &cov) {
    const Vector draw = normal_vector(cov.rows());
    if (cov.cwiseAbs().maxCoeff() == 0.0) {
        return Vector::Zero(cov.rows());
    }
    if (cov.isDiagonal()) {
        return cov.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(draw);
    }
    return linalg::cholesky_lower(cov) * draw;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling avoids modulo bias and stays portable.
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

} // namespace ndkf
