// Per-node predict and local measurement update over arbitrary Models.
#pragma once

#include <vector>

#include "ndkf/linalg.hpp"
#include "ndkf/models.hpp"

namespace ndkf::filter {

enum class Stage { Predicted, Updated, Fused };

/// A node's Gaussian state estimate (x̂, P) at a filtering stage and time index.
struct Belief {
    Vector mean;
    Matrix cov;
    Stage stage = Stage::Updated;
    long time = 0;
};

struct NoiseModel {
    Matrix q;              ///< process noise covariance, PSD
    std::vector<Matrix> r; ///< per-node measurement noise covariance, PD
};

struct InnovationRecord {
    int node = 0;
    long time = 0;
    Vector innovation;    ///< y − h(x̂)
    Matrix innovation_cov; ///< S
    double gain_norm = 0.0; ///< spectral norm of K
};

struct UpdateResult {
    Belief belief;
    InnovationRecord record;
    Matrix gain;     ///< K
    Matrix jacobian; ///< H at the predicted mean
};

/**
 * Propagate an updated or fused belief through `dynamics` at time k.
 *
 * mean ← f(x̂, k), cov ← F P Fᵀ + Q with F the Jacobian at x̂; the result is
 * symmetrized, tagged Predicted, and stamped with time k + 1.
 */
Belief predict(const Belief &belief, const models::Model &dynamics, const Matrix &q, long k);

/// Same as predict, also returning the Jacobian used.
Belief predict(const Belief &belief, const models::Model &dynamics, const Matrix &q, long k,
               Matrix &jacobian_out);

/**
 * Kalman update of a predicted belief with measurement y.
 *
 * S = H P Hᵀ + R, K = P Hᵀ S⁻¹, x̂ += K (y − h(x̂)), P = (I − K H) P, symmetrized.
 * Throws SingularInnovation when S is not SPD.
 */
UpdateResult update(const Belief &belief, const Vector &y, const models::Model &meas, const Matrix &r,
                    int node = 0);

} // namespace ndkf::filter
