#include "ndkf/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "ndkf/filter.hpp"
#include "ndkf/fusion.hpp"
#include "ndkf/models.hpp"
#include "ndkf/neural.hpp"
#include "ndkf/rng.hpp"
#include "ndkf/sim.hpp"

namespace ndkf::selfcheck {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

// Perturb the freshly initialized net so normalization and batch-norm stats are non-trivial.
void roughen(neural::MlpParams &p, Rng &rng) {
    for (Eigen::Index i = 0; i < p.input_mean.size(); ++i) {
        p.input_mean(i) = rng.uniform(-0.5, 0.5);
        p.input_std(i) = rng.uniform(0.5, 2.0);
    }
    for (Eigen::Index i = 0; i < p.output_mean.size(); ++i) {
        p.output_mean(i) = rng.uniform(-0.5, 0.5);
        p.output_std(i) = rng.uniform(0.5, 2.0);
    }
    for (auto &bn : p.norms) {
        for (Eigen::Index i = 0; i < bn.scale.size(); ++i) {
            bn.running_mean(i) = rng.uniform(-0.2, 0.2);
            bn.running_var(i) = rng.uniform(0.5, 1.5);
            bn.scale(i) = rng.uniform(0.8, 1.2);
            bn.shift(i) = rng.uniform(-0.1, 0.1);
        }
    }
}

CheckResult jacobian_check(const std::string &name, const neural::MlpSpec &spec, std::uint64_t seed) {
    Rng rng(seed);
    neural::MlpParams p = neural::mlp_init(spec, rng);
    roughen(p, rng);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        Vector x(spec.input_dim);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = rng.uniform(-2.0, 2.0);
        }
        const Matrix a = neural::mlp_jacobian(p, x, neural::JacobianMethod::Analytic);
        const Matrix f = neural::mlp_jacobian(p, x, neural::JacobianMethod::FiniteDiff);
        worst = std::max(worst, (a - f).cwiseAbs().maxCoeff());
    }
    return {name, worst <= 1e-4, "max |analytic - finite diff| = " + num(worst)};
}

CheckResult formula_jacobians() {
    double worst = 0.0;
    std::vector<models::Model> all;
    for (int node = 1; node <= 4; ++node) {
        all.push_back(models::true_measurement_model(node));
    }
    for (auto mode : {models::Misspecification::DropTerms, models::Misspecification::UnitCoefficients,
                      models::Misspecification::DropScaleAndTerms}) {
        for (auto &m : models::ekf_baseline_models(mode).measurements) {
            all.push_back(m);
        }
    }
    Rng rng(11);
    const double h = 1e-6;
    for (const auto &m : all) {
        for (int s = 0; s < 20; ++s) {
            Vector x(2);
            x << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
            const Matrix j = m.jacobian(x, 0);
            for (int c = 0; c < 2; ++c) {
                Vector xp = x, xm = x;
                xp(c) += h;
                xm(c) -= h;
                const double fd = (m.eval(xp, 0)(0) - m.eval(xm, 0)(0)) / (2.0 * h);
                worst = std::max(worst, std::abs(fd - j(0, c)));
            }
        }
    }
    return {"formula-jacobians", worst <= 1e-6, "max deviation " + num(worst)};
}

filter::Belief belief(const Vector &mean, const Matrix &cov) {
    return filter::Belief{mean, cov, filter::Stage::Updated, 0};
}

CheckResult fusion_identities() {
    Matrix p(2, 2);
    p << 0.3, 0.1, 0.1, 0.2;
    Vector x(2);
    x << 1.0, -0.5;
    const auto msg = fusion::info_contribution(belief(x, p));

    const auto single = fusion::fuse({msg});
    double dev = std::max((single.mean - x).cwiseAbs().maxCoeff(), (single.cov - p).cwiseAbs().maxCoeff());
    const auto dup = fusion::fuse({msg, msg});
    dev = std::max(dev, (dup.cov - 0.5 * p).cwiseAbs().maxCoeff());
    dev = std::max(dev, (dup.mean - x).cwiseAbs().maxCoeff());

    Vector y(2);
    y << -0.2, 0.7;
    const auto equal = fusion::fuse({msg, fusion::info_contribution(belief(y, p))});
    dev = std::max(dev, (equal.mean - 0.5 * (x + y)).cwiseAbs().maxCoeff());

    Matrix p2(2, 2);
    p2 << 0.5, -0.05, -0.05, 0.4;
    const auto mixed = fusion::fuse({msg, fusion::info_contribution(belief(y, p2))});
    const Matrix w = linalg::invert_spd(p) + linalg::invert_spd(p2);
    dev = std::max(dev, (linalg::invert_spd(mixed.cov) - w).cwiseAbs().maxCoeff());
    return {"fusion-identities", dev <= 1e-10, "max deviation " + num(dev)};
}

// Reference filter written directly from the linear Kalman recursions.
CheckResult linear_oracle() {
    const Matrix a = Matrix::Identity(2, 2) * 0.9;
    Matrix h(1, 2);
    h << 1.0, 0.5;
    const Matrix q = Matrix::Identity(2, 2) * 0.01;
    const Matrix r = Matrix::Constant(1, 1, 0.04);
    const auto dyn = models::linear_model(a, "A");
    const auto meas = models::linear_model(h, "H");

    Rng rng(5);
    Vector truth = Vector::Constant(2, 1.0);
    filter::Belief b = belief(Vector::Zero(2), Matrix::Identity(2, 2));
    Vector xr = Vector::Zero(2);
    Matrix pr = Matrix::Identity(2, 2);
    double dev = 0.0;
    for (int k = 0; k < 100; ++k) {
        truth = a * truth + rng.gaussian(q);
        const Vector y = h * truth + rng.gaussian(r);

        b = filter::update(filter::predict(b, dyn, q, k), y, meas, r, 1).belief;

        xr = a * xr;
        pr = a * pr * a.transpose() + q;
        const double s = (h * pr * h.transpose())(0, 0) + r(0, 0);
        const Vector gain = pr * h.transpose() / s;
        xr += gain * (y - h * xr)(0);
        pr = (Matrix::Identity(2, 2) - gain * h) * pr;

        dev = std::max(dev, (b.mean - xr).cwiseAbs().maxCoeff());
        dev = std::max(dev, (b.cov - pr).cwiseAbs().maxCoeff());
    }
    return {"linear-kf-oracle", dev <= 1e-9, "max deviation over 100 steps " + num(dev)};
}

CheckResult params_round_trip() {
    neural::MlpSpec spec{2, {8, 8}, 1, neural::Activation::Tanh, true, 0.1};
    Rng rng(3);
    neural::MlpParams p = neural::mlp_init(spec, rng);
    roughen(p, rng);
    std::stringstream ss;
    neural::save_params(p, ss);
    const neural::MlpParams back = neural::load_params(ss);
    Vector x(2);
    x << 0.3, -1.1;
    const double dev = (neural::mlp_forward(p, x) - neural::mlp_forward(back, x)).cwiseAbs().maxCoeff();
    return {"params-round-trip", dev == 0.0, "output change " + num(dev)};
}

CheckResult counters() {
    ExperimentConfig cfg;
    cfg.horizon_train = 20;
    cfg.horizon_test = 10;
    const auto training = sim::generate_training_data(cfg);
    const auto m = sim::run_experiment(cfg, sim::Variant::Ekf, training, nullptr, 0);
    const long steps = static_cast<long>(m.times.size());
    const bool msgs = m.msg_count == steps * cfg.topology.message_count();
    const bool inv = m.matrix_inversions == 2L * steps * cfg.n_nodes;
    return {"cost-counters", msgs && inv,
            "messages " + std::to_string(m.msg_count) + ", inversions " + std::to_string(m.matrix_inversions) +
                " over " + std::to_string(steps) + " steps"};
}

} // namespace

std::vector<CheckResult> run_self_checks() {
    const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
        {"jacobian-dynamics-net",
         [] {
             return jacobian_check("jacobian-dynamics-net",
                                   neural::MlpSpec{4, {128, 128, 128}, 2, neural::Activation::Tanh, true, 0.2}, 1);
         }},
        {"jacobian-measurement-net",
         [] {
             return jacobian_check("jacobian-measurement-net",
                                   neural::MlpSpec{2, {32, 32}, 1, neural::Activation::Tanh, false, 0.0}, 2);
         }},
        {"formula-jacobians", formula_jacobians},
        {"fusion-identities", fusion_identities},
        {"linear-kf-oracle", linear_oracle},
        {"params-round-trip", params_round_trip},
        {"cost-counters", counters},
    };
    std::vector<CheckResult> out;
    for (const auto &[name, fn] : checks) {
        try {
            out.push_back(fn());
        } catch (const std::exception &e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

} // namespace ndkf::selfcheck
