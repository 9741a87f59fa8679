// Small dense linear algebra used across the filter: SPD inversion and spectral norm.
#pragma once

#include <Eigen/Dense>

#include "ndkf/error.hpp"

namespace ndkf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr double kSymmetryTolerance = 1e-9;

/// (A + Aᵀ) / 2.
Matrix symmetrize(const Matrix &m);

bool all_finite(const Matrix &m);

/// Lower Cholesky factor L with m = L·Lᵀ. Throws NotSPD on a non-positive pivot.
Matrix cholesky_lower(const Matrix &m);

/**
 * Inverse of a symmetric positive definite matrix via Cholesky.
 *
 * The input must be square and symmetric within 1e-9 (relative to its largest
 * entry). The result is symmetrized before returning. 1×1 inputs take a scalar
 * fast path with the same error semantics.
 */
Matrix invert_spd(const Matrix &m);

/**
 * Largest singular value by power iteration on mᵀm.
 *
 * Converges to relative tolerance 1e-10 within 10,000 iterations or throws
 * NoConvergence. A start vector orthogonal to the dominant singular direction
 * is handled by restarting from a deterministically perturbed vector.
 */
double spectral_norm(const Matrix &m);

} // namespace linalg
} // namespace ndkf
