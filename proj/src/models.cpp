#include "ndkf/models.hpp"

#include <cmath>

namespace ndkf::models {

namespace {

constexpr double kDriftStep = 0.05;
constexpr double kTimeScale = 10.0;

void require_dim(const Vector &v, int dim, const std::string &who) {
    if (v.size() != dim) {
        throw Error(ErrorKind::DimensionMismatch,
                    who + " expects dim " + std::to_string(dim) + ", got " + std::to_string(v.size()));
    }
}

Vector drift(long k) {
    const double t = static_cast<double>(k) / kTimeScale;
    Vector d(2);
    d << kDriftStep * std::cos(t), kDriftStep * std::sin(t);
    return d;
}

Model scalar_formula(std::string name, std::function<double(double, double)> value,
                     std::function<Matrix(double, double)> gradient) {
    return Model(
        std::move(name), 2, 1,
        [value](const Vector &x, long) { return Vector::Constant(1, value(x(0), x(1))); },
        [gradient](const Vector &x, long) { return gradient(x(0), x(1)); });
}

int jacobian_passes(neural::JacobianMethod method, int input_dim) {
    return method == neural::JacobianMethod::Analytic ? 1 : 2 * input_dim;
}

Matrix row2(double a, double b) {
    Matrix m(1, 2);
    m << a, b;
    return m;
}

} // namespace

Model::Model(std::string name, int state_dim, int output_dim, EvalFn eval, JacobianFn jacobian,
             int eval_passes, int jacobian_passes)
    : name_(std::move(name)), state_dim_(state_dim), output_dim_(output_dim), eval_(std::move(eval)),
      jacobian_(std::move(jacobian)), eval_passes_(eval_passes), jacobian_passes_(jacobian_passes) {}

Vector Model::eval(const Vector &state, long k) const {
    require_dim(state, state_dim_, name_);
    return eval_(state, k);
}

Matrix Model::jacobian(const Vector &state, long k) const {
    require_dim(state, state_dim_, name_);
    return jacobian_(state, k);
}

Vector time_features(long k) {
    const double t = static_cast<double>(k) / kTimeScale;
    Vector f(2);
    f << std::sin(t), std::cos(t);
    return f;
}

Vector true_dynamics(const Vector &state, long k, const Vector &noise) {
    require_dim(state, 2, "true_dynamics state");
    require_dim(noise, 2, "true_dynamics noise");
    return state + drift(k) + noise;
}

double true_measurement(int node, const Vector &state, double noise) {
    require_dim(state, 2, "true_measurement state");
    const double px = state(0);
    const double py = state(1);
    switch (node) {
    case 1: return std::sin(2.0 * px) + 0.5 * py + noise;
    case 2: return std::cos(2.0 * py) - 0.4 * px + noise;
    case 3: return std::sin(2.0 * px) + std::cos(2.0 * py) + noise;
    case 4: return std::sin(2.0 * px) - std::cos(2.0 * py) + noise;
    default: throw Error(ErrorKind::UnknownNode, "node " + std::to_string(node) + " is not in 1..4");
    }
}

Model nominal_dynamics_model() {
    return Model(
        "nominal-dynamics", 2, 2, [](const Vector &x, long k) { return Vector(x + drift(k)); },
        [](const Vector &, long) { return Matrix(Matrix::Identity(2, 2)); });
}

Model true_measurement_model(int node) {
    if (node < 1 || node > 4) {
        throw Error(ErrorKind::UnknownNode, "node " + std::to_string(node) + " is not in 1..4");
    }
    auto value = [node](double px, double py) {
        Vector x(2);
        x << px, py;
        return true_measurement(node, x, 0.0);
    };
    std::function<Matrix(double, double)> grad;
    switch (node) {
    case 1: grad = [](double px, double) { return row2(2.0 * std::cos(2.0 * px), 0.5); }; break;
    case 2: grad = [](double, double py) { return row2(-0.4, -2.0 * std::sin(2.0 * py)); }; break;
    case 3:
        grad = [](double px, double py) { return row2(2.0 * std::cos(2.0 * px), -2.0 * std::sin(2.0 * py)); };
        break;
    default:
        grad = [](double px, double py) { return row2(2.0 * std::cos(2.0 * px), 2.0 * std::sin(2.0 * py)); };
        break;
    }
    return scalar_formula("true-node" + std::to_string(node), value, grad);
}

Model learned_dynamics_model(std::shared_ptr<const neural::MlpParams> net, neural::JacobianMethod method) {
    if (!net || net->spec.input_dim != 4 || net->spec.output_dim != 2) {
        throw Error(ErrorKind::DimensionMismatch, "dynamics network must map 4 inputs to 2 outputs");
    }
    auto augment = [](const Vector &x, long k) {
        Vector in(4);
        in << x, time_features(k);
        return in;
    };
    return Model(
        "learned-dynamics", 2, 2,
        [net, augment](const Vector &x, long k) { return Vector(x + neural::mlp_forward(*net, augment(x, k))); },
        [net, augment, method](const Vector &x, long k) {
            const Matrix full = neural::mlp_jacobian(*net, augment(x, k), method);
            return Matrix(Matrix::Identity(2, 2) + full.leftCols(2));
        },
        1, jacobian_passes(method, 4));
}

Model learned_measurement_model(std::shared_ptr<const neural::MlpParams> net, neural::JacobianMethod method) {
    if (!net || net->spec.input_dim != 2 || net->spec.output_dim != 1) {
        throw Error(ErrorKind::DimensionMismatch, "measurement network must map 2 inputs to 1 output");
    }
    return Model(
        "learned-measurement", 2, 1, [net](const Vector &x, long) { return neural::mlp_forward(*net, x); },
        [net, method](const Vector &x, long) { return neural::mlp_jacobian(*net, x, method); }, 1,
        jacobian_passes(method, 2));
}

BaselineModels ekf_baseline_models(Misspecification mode) {
    if (mode == Misspecification::DropScaleAndTerms) {
        std::vector<Model> meas;
        meas.push_back(scalar_formula(
            "baseline-node1", [](double px, double) { return std::sin(px); },
            [](double px, double) { return row2(std::cos(px), 0.0); }));
        meas.push_back(scalar_formula(
            "baseline-node2", [](double, double py) { return std::cos(py); },
            [](double, double py) { return row2(0.0, -std::sin(py)); }));
        meas.push_back(true_measurement_model(3));
        meas.push_back(true_measurement_model(4));
        return BaselineModels{nominal_dynamics_model(), std::move(meas)};
    }
    const double c1 = mode == Misspecification::DropTerms ? 0.0 : 1.0;
    const double c2 = mode == Misspecification::DropTerms ? 0.0 : -1.0;
    std::vector<Model> meas;
    meas.push_back(scalar_formula(
        "baseline-node1", [c1](double px, double py) { return std::sin(2.0 * px) + c1 * py; },
        [c1](double px, double) { return row2(2.0 * std::cos(2.0 * px), c1); }));
    meas.push_back(scalar_formula(
        "baseline-node2", [c2](double px, double py) { return std::cos(2.0 * py) + c2 * px; },
        [c2](double, double py) { return row2(c2, -2.0 * std::sin(2.0 * py)); }));
    meas.push_back(true_measurement_model(3));
    meas.push_back(true_measurement_model(4));
    return BaselineModels{nominal_dynamics_model(), std::move(meas)};
}

Model linear_model(const Matrix &a, std::string name) {
    return Model(
        std::move(name), static_cast<int>(a.cols()), static_cast<int>(a.rows()),
        [a](const Vector &x, long) { return Vector(a * x); }, [a](const Vector &, long) { return a; });
}

} // namespace ndkf::models
