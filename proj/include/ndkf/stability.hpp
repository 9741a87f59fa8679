// Contraction diagnostics and the inductive error bound for the local filter error.
#pragma once

#include <span>

#include "ndkf/linalg.hpp"

namespace ndkf::stability {

struct ContractionReport {
    long time = 0;
    int node = 0;
    double alpha = 0.0; ///< ‖F‖
    double beta = 0.0;  ///< ‖I − K H‖
    double gamma = 0.0; ///< alpha · beta
    bool conditions_met = false; ///< alpha < 1 and beta < 1
};

struct NoiseBounds {
    double w_bound = 0.0;
    double v_bound = 0.0;
    double gain_bound = 0.0;
};

ContractionReport contraction_report(const Matrix &f, const Matrix &k, const Matrix &h, long time, int node);

/// γᴺ·e0 + Σ_{j<N} γ^{N−1−j}·ν_j. Throws LengthMismatch if fewer than N terms are given.
double error_bound(double gamma, double e0, std::span<const double> nu, std::size_t n);

/// ν = β‖w‖ + ‖K‖‖v‖ for one step.
double noise_term(double beta, double w_norm, double gain_norm, double v_norm);

/// Worst-case per-step noise term from NoiseBounds.
double noise_term(double beta, const NoiseBounds &bounds);

} // namespace ndkf::stability
