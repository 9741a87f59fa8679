#include <gtest/gtest.h>

#include <sstream>

#include "ndkf/config.hpp"

using namespace ndkf;

namespace {

ExperimentConfig parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

std::string config_error(const std::string &text) {
    try {
        parse(text);
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        return e.what();
    }
    ADD_FAILURE() << "no error for: " << text;
    return {};
}

} // namespace

TEST(Config, DefaultsMatchExperiment) {
    const ExperimentConfig c;
    EXPECT_EQ(c.horizon_train, 400);
    EXPECT_EQ(c.horizon_test, 100);
    EXPECT_EQ(c.n_nodes, 4);
    EXPECT_EQ(c.q, Matrix::Identity(2, 2) * 0.001);
    EXPECT_EQ(c.r_scalar, 0.01);
    EXPECT_EQ(c.init_cov, Matrix::Identity(2, 2) * 0.5);
    EXPECT_EQ(c.nn_dynamics.spec.hidden_layers, (std::vector<int>{128, 128, 128}));
    EXPECT_TRUE(c.nn_dynamics.spec.use_batch_norm);
    EXPECT_EQ(c.nn_dynamics.spec.dropout_rate, 0.2);
    EXPECT_EQ(c.nn_dynamics.train.epochs, 3000);
    EXPECT_EQ(c.nn_dynamics.train.learning_rate, 1e-3);
    EXPECT_EQ(c.nn_measurement.spec.hidden_layers, (std::vector<int>{32, 32}));
    EXPECT_EQ(c.nn_measurement.train.epochs, 1000);
    EXPECT_EQ(c.mc_runs, 40);
    EXPECT_EQ(c.topology.message_count(), 16);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, EmptyFileGivesDefaults) {
    const auto c = parse("# nothing\n\n");
    EXPECT_EQ(c.seed, ExperimentConfig().seed);
}

TEST(Config, WriteParseRoundTrip) {
    ExperimentConfig c;
    c.seed = 99;
    c.test_start = TestStart::Continue;
    c.topology_kind = "ring";
    c.topology = fusion::Topology::ring(4);
    c.fusion_scale = fusion::FusionScale::Average;
    c.ekf_misspec = models::Misspecification::DropScaleAndTerms;
    c.nn_measurement.train.batch_size = 32;
    c.init_cov(0, 1) = c.init_cov(1, 0) = 0.1;
    std::ostringstream out;
    write_config(c, out);
    const auto back = parse(out.str());
    std::ostringstream again;
    write_config(back, again);
    EXPECT_EQ(out.str(), again.str());
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.test_start, TestStart::Continue);
    EXPECT_EQ(back.topology.message_count(), 12);
    EXPECT_EQ(back.ekf_misspec, models::Misspecification::DropScaleAndTerms);
    EXPECT_EQ(back.init_cov, c.init_cov);
}

TEST(Config, ShippedConfigsLoad) {
    const auto shipped = load_config(std::string(NDKF_SOURCE_DIR) + "/configs/paper.cfg");
    std::ostringstream a, b;
    write_config(shipped, a);
    write_config(ExperimentConfig(), b);
    EXPECT_EQ(a.str(), b.str());
    const auto quick = load_config(std::string(NDKF_SOURCE_DIR) + "/configs/quick.cfg");
    EXPECT_EQ(quick.nn_dynamics.train.epochs, 500);
    EXPECT_GE(quick.mc_runs, 10);
}

TEST(Config, CustomTopology) {
    const auto c = parse("[topology]\nkind = custom\nnode1 = 2\nnode2 = 1, 3\nnode3 = 2\nnode4 = 3\n");
    EXPECT_EQ(c.topology.neighbors(1), (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(c.topology.neighbors(3), (std::vector<int>{2, 3}));
}

TEST(Config, ErrorsNameLineAndField) {
    EXPECT_NE(config_error("[experiment]\nhorizon = 5\n").find("test.cfg:2: experiment.horizon: unknown field"),
              std::string::npos);
    EXPECT_NE(config_error("[noise]\nr = -1\n").find("noise.r"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\nn_nodes = four\n").find("test.cfg:2: experiment.n_nodes"),
              std::string::npos);
    EXPECT_NE(config_error("[init]\ncov = 1, 2, 2, 1\n").find("init.cov"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\ntest_start = later\n").find("experiment.test_start"), std::string::npos);
    EXPECT_NE(config_error("[fusion]\nscale = max\n").find("fusion.scale"), std::string::npos);
    EXPECT_NE(config_error("[filter]\nekf_misspec = none\n").find("filter.ekf_misspec"), std::string::npos);
    EXPECT_NE(config_error("[nn_dynamics]\nhidden = 4, 0\n").find("nn_dynamics"), std::string::npos);
    EXPECT_NE(config_error("[topology]\nkind = mesh\n").find("topology"), std::string::npos);
    EXPECT_NE(config_error("[experiment\n").find("test.cfg:1"), std::string::npos);
    EXPECT_NE(config_error("seed 3\n").find("test.cfg:1"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\nseed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/file.cfg"), Error);
}
