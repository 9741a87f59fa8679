#include "ndkf/filter.hpp"

#include <string>

namespace ndkf::filter {

namespace {

void require_finite(const Matrix &m, const std::string &what, long k) {
    if (!m.allFinite()) {
        throw Error(ErrorKind::NonFiniteState, what + " is not finite at k=" + std::to_string(k));
    }
}

} // namespace

Belief predict(const Belief &belief, const models::Model &dynamics, const Matrix &q, long k,
               Matrix &jacobian_out) {
    if (belief.stage == Stage::Predicted) {
        throw Error(ErrorKind::InvalidStage, "predict requires an updated or fused belief");
    }
    const Eigen::Index n = belief.mean.size();
    if (q.rows() != n || q.cols() != n || dynamics.output_dim() != n) {
        throw Error(ErrorKind::DimensionMismatch, "predict: Q or dynamics output does not match state dim");
    }
    Belief out;
    out.mean = dynamics.eval(belief.mean, k);
    require_finite(out.mean, "predicted mean", k);
    jacobian_out = dynamics.jacobian(belief.mean, k);
    require_finite(jacobian_out, "dynamics Jacobian", k);
    out.cov = linalg::symmetrize(jacobian_out * belief.cov * jacobian_out.transpose() + q);
    require_finite(out.cov, "predicted covariance", k);
    out.stage = Stage::Predicted;
    out.time = k + 1;
    return out;
}

Belief predict(const Belief &belief, const models::Model &dynamics, const Matrix &q, long k) {
    Matrix jac;
    return predict(belief, dynamics, q, k, jac);
}

UpdateResult update(const Belief &belief, const Vector &y, const models::Model &meas, const Matrix &r,
                    int node) {
    if (belief.stage != Stage::Predicted) {
        throw Error(ErrorKind::InvalidStage, "update requires a predicted belief");
    }
    if (y.size() != meas.output_dim() || r.rows() != y.size() || r.cols() != y.size()) {
        throw Error(ErrorKind::DimensionMismatch, "update: measurement, model, and R dims disagree");
    }
    const long k = belief.time;
    const Matrix h = meas.jacobian(belief.mean, k);
    require_finite(h, "measurement Jacobian", k);
    const Vector predicted_y = meas.eval(belief.mean, k);
    require_finite(predicted_y, "predicted measurement", k);

    const Matrix pht = belief.cov * h.transpose();
    const Matrix s = linalg::symmetrize(h * pht + r);
    Matrix s_inv;
    try {
        s_inv = linalg::invert_spd(s);
    } catch (const Error &e) {
        throw Error(ErrorKind::SingularInnovation,
                    "node " + std::to_string(node) + " k=" + std::to_string(k) + ": " + e.what());
    }

    UpdateResult res;
    res.gain = pht * s_inv;
    res.jacobian = h;
    const Vector innovation = y - predicted_y;
    const Eigen::Index n = belief.mean.size();

    res.belief.mean = belief.mean + res.gain * innovation;
    res.belief.cov = linalg::symmetrize((Matrix::Identity(n, n) - res.gain * h) * belief.cov);
    require_finite(res.belief.mean, "updated mean", k);
    require_finite(res.belief.cov, "updated covariance", k);
    res.belief.stage = Stage::Updated;
    res.belief.time = k;

    res.record.node = node;
    res.record.time = k;
    res.record.innovation = innovation;
    res.record.innovation_cov = s;
    res.record.gain_norm = linalg::spectral_norm(res.gain);
    return res;
}

} // namespace ndkf::filter
