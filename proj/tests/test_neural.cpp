#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ndkf/neural.hpp"

using namespace ndkf;
using namespace ndkf::neural;

namespace {

MlpSpec dynamics_spec() { return MlpSpec{4, {128, 128, 128}, 2, Activation::Tanh, true, 0.2}; }
MlpSpec measurement_spec() { return MlpSpec{2, {32, 32}, 1, Activation::Tanh, false, 0.0}; }

Vector random_vector(Rng &rng, int n, double scale) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
    return v;
}

// Non-trivial normalization and batch-norm statistics so every chain-rule factor is exercised.
MlpParams roughened(const MlpSpec &spec, std::uint64_t seed) {
    Rng rng(seed);
    MlpParams p = mlp_init(spec, rng);
    for (Eigen::Index i = 0; i < p.input_std.size(); ++i) {
        p.input_mean(i) = rng.uniform(-0.3, 0.3);
        p.input_std(i) = rng.uniform(0.5, 2.0);
    }
    for (Eigen::Index i = 0; i < p.output_std.size(); ++i) {
        p.output_mean(i) = rng.uniform(-0.3, 0.3);
        p.output_std(i) = rng.uniform(0.5, 2.0);
    }
    for (auto &bn : p.norms) {
        bn.running_mean = random_vector(rng, static_cast<int>(bn.running_mean.size()), 0.2);
        bn.running_var = (random_vector(rng, static_cast<int>(bn.running_var.size()), 0.4).array() + 1.0).matrix();
        bn.scale = (random_vector(rng, static_cast<int>(bn.scale.size()), 0.2).array() + 1.0).matrix();
        bn.shift = random_vector(rng, static_cast<int>(bn.shift.size()), 0.1);
    }
    return p;
}

// Independent central difference of mlp_forward, step 1e-5.
Matrix central_difference(const MlpParams &p, const Vector &x) {
    const double h = 1e-5;
    Matrix j(p.spec.output_dim, x.size());
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        Vector xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        j.col(c) = (mlp_forward(p, xp) - mlp_forward(p, xm)) / (2.0 * h);
    }
    return j;
}

} // namespace

TEST(MlpSpec, Validation) {
    EXPECT_THROW((MlpSpec{0, {4}, 1}.validate()), Error);
    EXPECT_THROW((MlpSpec{2, {0}, 1}.validate()), Error);
    EXPECT_THROW((MlpSpec{2, {4}, 1, Activation::Tanh, false, 1.0}.validate()), Error);
    EXPECT_NO_THROW(dynamics_spec().validate());
}

TEST(MlpInit, ShapesAndDeterminism) {
    Rng a(3), b(3);
    const MlpParams p = mlp_init(dynamics_spec(), a);
    const MlpParams q = mlp_init(dynamics_spec(), b);
    ASSERT_EQ(p.layers.size(), 4u);
    EXPECT_EQ(p.layers[0].weight.rows(), 128);
    EXPECT_EQ(p.layers[0].weight.cols(), 4);
    EXPECT_EQ(p.layers[3].weight.rows(), 2);
    EXPECT_EQ(p.norms.size(), 3u);
    EXPECT_EQ(p.layers[1].weight, q.layers[1].weight);
    const double limit = std::sqrt(6.0 / (128 + 128));
    EXPECT_LE(p.layers[1].weight.cwiseAbs().maxCoeff(), limit);
}

TEST(MlpForward, DimensionMismatch) {
    Rng rng(1);
    const MlpParams p = mlp_init(measurement_spec(), rng);
    try {
        mlp_forward(p, Vector::Zero(3));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

// Oracle: one hidden unit, hand-evaluated.
TEST(MlpForward, HandComputedTinyNet) {
    MlpParams p;
    p.spec = MlpSpec{1, {1}, 1};
    p.layers = {DenseLayer{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 0.5)},
                DenseLayer{Matrix::Constant(1, 1, -3.0), Vector::Constant(1, 1.0)}};
    p.input_mean = Vector::Constant(1, 1.0);
    p.input_std = Vector::Constant(1, 2.0);
    p.output_mean = Vector::Constant(1, 0.25);
    p.output_std = Vector::Constant(1, 4.0);
    const double x = 2.0;
    const double expected = 0.25 + 4.0 * (1.0 - 3.0 * std::tanh(2.0 * (x - 1.0) / 2.0 + 0.5));
    EXPECT_NEAR(mlp_forward(p, Vector::Constant(1, x))(0), expected, 1e-15);
    const double slope = 4.0 * -3.0 * (1.0 - std::pow(std::tanh(1.5), 2)) * 2.0 / 2.0;
    EXPECT_NEAR(mlp_jacobian(p, Vector::Constant(1, x))(0, 0), slope, 1e-14);
}

TEST(MlpForward, BatchMatchesSingle) {
    const MlpParams p = roughened(dynamics_spec(), 5);
    Rng rng(6);
    Matrix xs(4, 7);
    for (int c = 0; c < 7; ++c) xs.col(c) = random_vector(rng, 4, 1.5);
    const Matrix out = mlp_forward_batch(p, xs);
    for (int c = 0; c < 7; ++c) {
        EXPECT_LT((out.col(c) - mlp_forward(p, xs.col(c))).cwiseAbs().maxCoeff(), 1e-13);
    }
}

class JacobianFidelity : public ::testing::TestWithParam<int> {};

TEST_P(JacobianFidelity, AnalyticMatchesCentralDifferences) {
    const MlpSpec spec = GetParam() == 0 ? dynamics_spec() : measurement_spec();
    const MlpParams p = roughened(spec, 100 + static_cast<std::uint64_t>(GetParam()));
    Rng rng(200);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const Vector x = random_vector(rng, spec.input_dim, 2.0);
        const Matrix analytic = mlp_jacobian(p, x, JacobianMethod::Analytic);
        worst = std::max(worst, (analytic - central_difference(p, x)).cwiseAbs().maxCoeff());
        worst = std::max(worst, (analytic - mlp_jacobian(p, x, JacobianMethod::FiniteDiff)).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(BothShapes, JacobianFidelity, ::testing::Values(0, 1));

TEST(MlpJacobian, RequiresEvalMode) {
    MlpParams p = roughened(measurement_spec(), 1);
    p.mode = Mode::Train;
    try {
        mlp_jacobian(p, Vector::Zero(2));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidStage);
    }
}

// Oracle: finite differences of the train-mode batch loss with respect to parameters.
TEST(Backprop, GradientsMatchLossDifferences) {
    for (bool bn : {false, true}) {
        MlpSpec spec{3, {5, 4}, 2, Activation::Tanh, bn, 0.0};
        Rng rng(7);
        MlpParams p = mlp_init(spec, rng);
        p.mode = Mode::Train;
        Matrix x(3, 6), y(2, 6);
        for (int c = 0; c < 6; ++c) {
            x.col(c) = random_vector(rng, 3, 1.0);
            y.col(c) = random_vector(rng, 2, 1.0);
        }
        Gradients g;
        train_step_gradients(p, x, y, g, nullptr, false);
        auto loss = [&](MlpParams &q) {
            Gradients unused;
            return train_step_gradients(q, x, y, unused, nullptr, false);
        };
        const double h = 1e-6;
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            for (Eigen::Index i = 0; i < p.layers[l].weight.size(); ++i) {
                MlpParams a = p, b = p;
                a.layers[l].weight.data()[i] += h;
                b.layers[l].weight.data()[i] -= h;
                EXPECT_NEAR(g.weight[l].data()[i], (loss(a) - loss(b)) / (2 * h), 1e-7) << "layer " << l;
            }
            for (Eigen::Index i = 0; i < p.layers[l].bias.size(); ++i) {
                MlpParams a = p, b = p;
                a.layers[l].bias(i) += h;
                b.layers[l].bias(i) -= h;
                EXPECT_NEAR(g.bias[l](i), (loss(a) - loss(b)) / (2 * h), 1e-7);
            }
        }
        for (std::size_t l = 0; l < p.norms.size(); ++l) {
            for (Eigen::Index i = 0; i < p.norms[l].scale.size(); ++i) {
                MlpParams a = p, b = p;
                a.norms[l].scale(i) += h;
                b.norms[l].scale(i) -= h;
                EXPECT_NEAR(g.bn_scale[l](i), (loss(a) - loss(b)) / (2 * h), 1e-7);
                a = p;
                b = p;
                a.norms[l].shift(i) += h;
                b.norms[l].shift(i) -= h;
                EXPECT_NEAR(g.bn_shift[l](i), (loss(a) - loss(b)) / (2 * h), 1e-7);
            }
        }
    }
}

// First Adam step moves each parameter by lr·g/(|g| + ε) since both moments are bias corrected.
TEST(Adam, FirstStepIsSignedLearningRate) {
    Rng rng(8);
    MlpParams p = mlp_init(MlpSpec{2, {3}, 1}, rng);
    const MlpParams before = p;
    Gradients g;
    g.weight = {Matrix::Constant(3, 2, 0.5), Matrix::Constant(1, 3, -2.0)};
    g.bias = {Vector::Constant(3, 1e-3), Vector::Constant(1, 0.0)};
    Adam adam;
    adam.step(p, g, 0.01);
    EXPECT_EQ(adam.steps_taken(), 1);
    EXPECT_NEAR((p.layers[0].weight - before.layers[0].weight)(0, 0), -0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_NEAR((p.layers[1].weight - before.layers[1].weight)(0, 1), 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
    EXPECT_NEAR((p.layers[0].bias - before.layers[0].bias)(2), -0.01 * 1e-3 / (1e-3 + 1e-8), 1e-12);
    EXPECT_EQ(p.layers[1].bias, before.layers[1].bias);
}

TEST(MlpTrain, FitsSmoothFunction) {
    Dataset d;
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        Vector x = random_vector(rng, 2, 1.5);
        d.inputs.push_back(x);
        d.targets.push_back(Vector::Constant(1, std::sin(2.0 * x(0)) + 0.5 * x(1)));
    }
    TrainConfig cfg;
    cfg.epochs = 800;
    cfg.learning_rate = 5e-3;
    cfg.seed = 1;
    TrainLog log;
    const MlpParams p = mlp_train(measurement_spec(), d, cfg, &log);
    EXPECT_EQ(p.mode, Mode::Eval);
    ASSERT_EQ(log.epoch_loss.size(), 800u);
    EXPECT_LT(log.epoch_loss.back(), 0.05 * log.epoch_loss.front());
    EXPECT_LT(dataset_mse(p, d), 5e-3);
}

TEST(MlpTrain, DeterministicAndDecaySchedule) {
    Dataset d;
    for (int i = 0; i < 30; ++i) {
        d.inputs.push_back(Vector::Constant(2, 0.1 * i));
        d.targets.push_back(Vector::Constant(1, std::cos(0.1 * i)));
    }
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.lr_decay_every = 10;
    cfg.lr_decay_factor = 0.5;
    cfg.batch_size = 8;
    cfg.seed = 4;
    TrainLog log;
    const MlpParams a = mlp_train(MlpSpec{2, {8}, 1, Activation::Tanh, true, 0.2}, d, cfg, &log);
    const MlpParams b = mlp_train(MlpSpec{2, {8}, 1, Activation::Tanh, true, 0.2}, d, cfg);
    EXPECT_EQ(a.layers[0].weight, b.layers[0].weight);
    EXPECT_EQ(a.norms[0].running_var, b.norms[0].running_var);
    EXPECT_DOUBLE_EQ(log.learning_rate[0], 1e-3);
    EXPECT_DOUBLE_EQ(log.learning_rate[10], 5e-4);
    EXPECT_DOUBLE_EQ(log.learning_rate[29], 2.5e-4);
}

TEST(MlpTrain, Errors) {
    TrainConfig cfg;
    try {
        mlp_train(measurement_spec(), Dataset{}, cfg);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
    }
    Dataset bad;
    bad.inputs.push_back(Vector::Zero(3));
    bad.targets.push_back(Vector::Zero(1));
    EXPECT_THROW(mlp_train(measurement_spec(), bad, cfg), Error);

    Dataset huge;
    for (int i = 0; i < 4; ++i) {
        huge.inputs.push_back(Vector::Constant(2, i));
        huge.targets.push_back(Vector::Constant(1, i == 3 ? 1e308 : 0.0));
    }
    cfg.epochs = 5;
    cfg.standardize = false;
    cfg.learning_rate = 1e300;
    try {
        mlp_train(measurement_spec(), huge, cfg);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DivergedLoss);
    }
}

TEST(ParamsFile, RoundTripIsExact) {
    const MlpParams p = roughened(dynamics_spec(), 11);
    std::stringstream ss;
    save_params(p, ss);
    const MlpParams q = load_params(ss);
    EXPECT_EQ(q.spec.hidden_layers, p.spec.hidden_layers);
    EXPECT_EQ(q.spec.dropout_rate, p.spec.dropout_rate);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        EXPECT_EQ(q.layers[l].weight, p.layers[l].weight);
        EXPECT_EQ(q.layers[l].bias, p.layers[l].bias);
    }
    EXPECT_EQ(q.norms[2].running_var, p.norms[2].running_var);
    EXPECT_EQ(q.input_std, p.input_std);
    EXPECT_EQ(q.output_mean, p.output_mean);
}

TEST(ParamsFile, MalformedInputs) {
    const MlpParams p = roughened(measurement_spec(), 12);
    std::stringstream ss;
    save_params(p, ss);
    const std::string good = ss.str();
    auto expect_malformed = [](const std::string &text) {
        std::istringstream in(text);
        try {
            load_params(in);
            FAIL() << text.substr(0, 40);
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::MalformedFile) << e.what();
        }
    };
    expect_malformed("NOT-A-NET v1\n" + good.substr(good.find('\n') + 1));
    expect_malformed(good.substr(0, good.size() / 2));
    std::string nonfinite = good;
    const auto pos = nonfinite.find("layer 0");
    const auto line = nonfinite.find('\n', pos) + 1;
    nonfinite.replace(line, nonfinite.find(' ', line) - line, "nan");
    expect_malformed(nonfinite);
    EXPECT_THROW(load_params_file("/nonexistent/net.mlp"), Error);
}
