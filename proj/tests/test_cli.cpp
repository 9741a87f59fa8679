#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ndkf/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    const int code = ndkf::cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / ("ndkf-cli-test-" + name);
    fs::remove_all(dir);
    return dir;
}

fs::path small_config(const fs::path &dir) {
    fs::create_directories(dir);
    const fs::path cfg = dir / "small.cfg";
    std::ofstream(cfg) << "[experiment]\nhorizon_train = 60\nhorizon_test = 12\nmc_runs = 2\n"
                          "[nn_dynamics]\nhidden = 8\nepochs = 15\n"
                          "[nn_measurement]\nhidden = 6\nepochs = 15\n";
    return cfg;
}

} // namespace

TEST(Cli, CheckPasses) {
    const auto r = cli({"check"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, UnknownVerbPrintsUsage) {
    const auto r = cli({"frobnicate"});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_NE(cli({}).code, 0);
    EXPECT_NE(cli({"run", "--variant", "kalman"}).code, 0);
}

TEST(Cli, ConfigErrorNamesField) {
    const fs::path dir = scratch("badcfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.cfg") << "[noise]\nr = 0\n";
    const auto r = cli({"run", "--config", (dir / "bad.cfg").string(), "--out-dir", dir.string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("noise.r"), std::string::npos) << r.err;
    EXPECT_NE(cli({"run", "--seed", "-4"}).code, 0);
    EXPECT_NE(cli({"montecarlo", "--runs", "0"}).code, 0);
}

TEST(Cli, TrainThenRunReusesNetworks) {
    const fs::path dir = scratch("train");
    const fs::path cfg = small_config(dir);
    const auto t = cli({"train", "--config", cfg.string(), "--out-dir", dir.string()});
    ASSERT_EQ(t.code, 0) << t.err;
    for (const char *f : {"dynamics.mlp", "measurement1.mlp", "measurement4.mlp", "config.cfg"}) {
        EXPECT_TRUE(fs::exists(dir / "models" / f)) << f;
    }
    const auto r = cli({"run", "--config", cfg.string(), "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("using trained networks"), std::string::npos);
    const std::string traj = slurp(dir / "trajectory.csv");
    EXPECT_EQ(traj.substr(0, traj.find('\n')), "k,true_px,true_py,node1_px,node1_py,node2_px,node2_py,node3_px,"
                                                "node3_py,node4_px,node4_py");
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 13);
    EXPECT_EQ(slurp(dir / "innovations.csv").substr(0, 31), "k,node,innovation,S,gain_norm\n1");
    EXPECT_EQ(slurp(dir / "stability.csv").substr(0, 38), "k,node,alpha,beta,gamma,conditions_met");

    // A different seed invalidates the saved networks.
    const auto reseeded = cli({"run", "--config", cfg.string(), "--out-dir", dir.string(), "--seed", "8"});
    ASSERT_EQ(reseeded.code, 0);
    EXPECT_NE(reseeded.err.find("training networks"), std::string::npos);
}

TEST(Cli, RunIsByteIdentical) {
    const fs::path a = scratch("det-a"), b = scratch("det-b");
    const fs::path cfg = small_config(a);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out-dir", a.string(), "--variant", "both"}).code, 0);
    ASSERT_EQ(cli({"run", "--config", cfg.string(), "--out-dir", b.string(), "--variant", "both"}).code, 0);
    for (const char *v : {"ndkf", "ekf"}) {
        for (const char *f : {"trajectory.csv", "innovations.csv", "stability.csv"}) {
            const std::string x = slurp(a / v / f);
            EXPECT_FALSE(x.empty());
            EXPECT_EQ(x, slurp(b / v / f)) << v << "/" << f;
        }
    }
}

TEST(Cli, MonteCarloAndCompare) {
    const fs::path dir = scratch("mc");
    const fs::path cfg = small_config(dir);
    const auto mc = cli({"montecarlo", "--config", cfg.string(), "--out-dir", dir.string(), "--variant", "ekf"});
    ASSERT_EQ(mc.code, 0) << mc.err;
    const std::string summary = slurp(dir / "summary.csv");
    EXPECT_EQ(summary.substr(0, summary.find('\n')), "variant,rmse_px,rmse_py,msg_count");
    EXPECT_NE(summary.find("\nekf,"), std::string::npos);
    EXPECT_EQ(summary.find("ndkf"), std::string::npos);
    EXPECT_NE(slurp(dir / "runs.csv").find("\n1,ekf,"), std::string::npos);

    const auto cmp = cli({"compare", "--config", cfg.string(), "--out-dir", dir.string(), "--runs", "3"});
    ASSERT_EQ(cmp.code, 0) << cmp.err;
    EXPECT_NE(cmp.out.find("over 3 Monte Carlo runs"), std::string::npos);
    EXPECT_NE(cmp.out.find("NDKF"), std::string::npos);
    EXPECT_NE(cmp.out.find("Distributed EKF"), std::string::npos);
}
