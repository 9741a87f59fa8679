#include "ndkf/stability.hpp"

#include <string>

namespace ndkf::stability {

ContractionReport contraction_report(const Matrix &f, const Matrix &k, const Matrix &h, long time, int node) {
    if (f.rows() != f.cols() || k.rows() != f.rows() || h.cols() != f.cols() || k.cols() != h.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "contraction_report: F, K, H shapes are incompatible");
    }
    ContractionReport rep;
    rep.time = time;
    rep.node = node;
    rep.alpha = linalg::spectral_norm(f);
    rep.beta = linalg::spectral_norm(Matrix::Identity(f.rows(), f.cols()) - k * h);
    rep.gamma = rep.alpha * rep.beta;
    rep.conditions_met = rep.alpha < 1.0 && rep.beta < 1.0;
    return rep;
}

double error_bound(double gamma, double e0, std::span<const double> nu, std::size_t n) {
    if (nu.size() < n) {
        throw Error(ErrorKind::LengthMismatch,
                    "error_bound: need " + std::to_string(n) + " noise terms, got " + std::to_string(nu.size()));
    }
    // Horner form of the induction: b_{j+1} = γ b_j + ν_j.
    double bound = e0;
    for (std::size_t j = 0; j < n; ++j) {
        bound = gamma * bound + nu[j];
    }
    return bound;
}

double noise_term(double beta, double w_norm, double gain_norm, double v_norm) {
    return beta * w_norm + gain_norm * v_norm;
}

double noise_term(double beta, const NoiseBounds &bounds) {
    return noise_term(beta, bounds.w_bound, bounds.gain_bound, bounds.v_bound);
}

} // namespace ndkf::stability
