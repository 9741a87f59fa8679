// Uniform (value, state-Jacobian) interface over learned networks and analytic formulas,
// plus the ground-truth 2D system and the mis-specified baseline.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ndkf/linalg.hpp"
#include "ndkf/neural.hpp"

namespace ndkf::models {

using EvalFn = std::function<Vector(const Vector &, long)>;
using JacobianFn = std::function<Matrix(const Vector &, long)>;

/// A dynamics or measurement function of the state and time index, with its state-Jacobian.
class Model {
public:
    Model(std::string name, int state_dim, int output_dim, EvalFn eval, JacobianFn jacobian,
          int eval_passes = 0, int jacobian_passes = 0);

    Vector eval(const Vector &state, long k) const;
    /// output_dim × state_dim.
    Matrix jacobian(const Vector &state, long k) const;

    int state_dim() const { return state_dim_; }
    int output_dim() const { return output_dim_; }
    const std::string &name() const { return name_; }
    /// Network forward passes spent by one eval / one jacobian; 0 for formulas.
    int eval_passes() const { return eval_passes_; }
    int jacobian_passes() const { return jacobian_passes_; }

private:
    std::string name_;
    int state_dim_;
    int output_dim_;
    EvalFn eval_;
    JacobianFn jacobian_;
    int eval_passes_;
    int jacobian_passes_;
};

/// Time encoding appended to the state for the dynamics network.
Vector time_features(long k);

/// x + [0.05 cos(k/10), 0.05 sin(k/10)] + noise.
Vector true_dynamics(const Vector &state, long k, const Vector &noise);

/// Node 1..4 scalar reading of the 2D state plus noise. Throws UnknownNode.
double true_measurement(int node, const Vector &state, double noise);

/// Noise-free drift map as a Model (Jacobian I₂).
Model nominal_dynamics_model();
/// Noise-free node reading as a Model with closed-form Jacobian.
Model true_measurement_model(int node);

/// x + net([x; time_features(k)]); the net must map 4 → 2.
Model learned_dynamics_model(std::shared_ptr<const neural::MlpParams> net,
                             neural::JacobianMethod method = neural::JacobianMethod::Analytic);

/// net(x); the net must map 2 → 1.
Model learned_measurement_model(std::shared_ptr<const neural::MlpParams> net,
                                neural::JacobianMethod method = neural::JacobianMethod::Analytic);

/// How the baseline's node 1 and node 2 formulas depart from the truth.
enum class Misspecification {
    DropTerms,         ///< node1 sin(2pₓ), node2 cos(2p_y)
    UnitCoefficients,  ///< node1 sin(2pₓ)+p_y, node2 cos(2p_y)−pₓ
    DropScaleAndTerms, ///< node1 sin(pₓ), node2 cos(p_y)
};

struct BaselineModels {
    Model dynamics;
    std::vector<Model> measurements;
};

BaselineModels ekf_baseline_models(Misspecification mode = Misspecification::DropTerms);

/// x ↦ A·x.
Model linear_model(const Matrix &a, std::string name = "linear");

} // namespace ndkf::models
