// Seeded random streams. Every random draw in a run traces back to one base seed.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ndkf/linalg.hpp"

namespace ndkf {

/// Mixes a base seed with a stream tag and an index into an independent seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

/**
 * 64-bit Mersenne Twister with portable uniform and Gaussian draws.
 *
 * std::normal_distribution is implementation-defined, so normals come from
 * Box–Muller on our own 53-bit uniforms; the results are identical across
 * standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    Vector normal_vector(Eigen::Index dim);
    /// Draw from N(0, cov) using the Cholesky factor of cov; zero cov gives zeros.
    Vector gaussian(const Matrix &cov);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ndkf
