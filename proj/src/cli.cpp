#include "ndkf/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "ndkf/config.hpp"
#include "ndkf/csv.hpp"
#include "ndkf/selfcheck.hpp"
#include "ndkf/sim.hpp"

namespace ndkf::cli {

namespace fs = std::filesystem;

namespace {

struct Command {
    std::string verb;
    std::string config_path;
    std::string out_dir = "ndkf-out";
    std::optional<long long> seed;
    std::optional<int> runs;
    std::string variant;
};

ExperimentConfig resolve_config(const Command &cmd) {
    ExperimentConfig cfg = cmd.config_path.empty() ? ExperimentConfig() : load_config(cmd.config_path);
    if (cmd.seed) {
        if (*cmd.seed < 0) {
            throw Error(ErrorKind::BadArgs, "--seed must be non-negative");
        }
        cfg.seed = static_cast<std::uint64_t>(*cmd.seed);
    }
    if (cmd.runs) {
        if (*cmd.runs < 1) {
            throw Error(ErrorKind::BadArgs, "--runs must be positive");
        }
        cfg.mc_runs = *cmd.runs;
    }
    cfg.validate();
    return cfg;
}

std::vector<sim::Variant> variants_for(const std::string &name) {
    if (name == "ndkf") return {sim::Variant::Ndkf};
    if (name == "ekf") return {sim::Variant::Ekf};
    return {sim::Variant::Ndkf, sim::Variant::Ekf};
}

std::string config_text(const ExperimentConfig &cfg) {
    std::ostringstream os;
    write_config(cfg, os);
    return os.str();
}

std::string model_path(const fs::path &dir, int node) {
    return (dir / (node == 0 ? std::string("dynamics.mlp") : "measurement" + std::to_string(node) + ".mlp"))
        .string();
}

void save_models(const ExperimentConfig &cfg, const sim::TrainedModels &m, const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    neural::save_params_file(*m.dynamics, model_path(dir, 0));
    for (std::size_t i = 0; i < m.measurement.size(); ++i) {
        neural::save_params_file(*m.measurement[i], model_path(dir, static_cast<int>(i) + 1));
    }
    std::ofstream out(dir / "config.cfg");
    out << config_text(cfg);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + (dir / "config.cfg").string());
    }
}

// Models saved by `train` are reused only when they were fitted under the same config.
std::optional<sim::TrainedModels> load_models(const ExperimentConfig &cfg, const fs::path &dir) {
    std::ifstream in(dir / "config.cfg");
    if (!in) {
        return std::nullopt;
    }
    std::stringstream saved;
    saved << in.rdbuf();
    if (saved.str() != config_text(cfg)) {
        return std::nullopt;
    }
    sim::TrainedModels m;
    m.dynamics = std::make_shared<const neural::MlpParams>(neural::load_params_file(model_path(dir, 0)));
    for (int node = 1; node <= cfg.n_nodes; ++node) {
        m.measurement.push_back(
            std::make_shared<const neural::MlpParams>(neural::load_params_file(model_path(dir, node))));
    }
    return m;
}

sim::TrainedModels obtain_models(const ExperimentConfig &cfg, const sim::TrainingData &data, const fs::path &dir,
                                 std::ostream &err) {
    if (auto loaded = load_models(cfg, dir)) {
        err << "using trained networks from " << dir.string() << '\n';
        return *loaded;
    }
    err << "training networks (" << cfg.nn_dynamics.train.epochs << " dynamics epochs, "
        << cfg.nn_measurement.train.epochs << " measurement epochs)\n";
    sim::TrainedModels m = sim::train_models(cfg, data);
    save_models(cfg, m, dir);
    return m;
}

int thread_cap() {
    const char *env = std::getenv("NDKF_THREADS");
    if (env == nullptr || *env == '\0') {
        return 0;
    }
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
        throw Error(ErrorKind::BadArgs, "NDKF_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<int>(v);
}

std::string fixed4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

int report_failures(const sim::MonteCarloSummary &s, std::ostream &err) {
    for (const auto &e : s.errors) {
        err << "run failed: " << e << '\n';
    }
    return s.failures == 0 ? 0 : 1;
}

int do_train(const Command &cmd, std::ostream &out, std::ostream &err) {
    const ExperimentConfig cfg = resolve_config(cmd);
    const auto data = sim::generate_training_data(cfg);
    err << "training networks\n";
    const auto m = sim::train_models(cfg, data);
    const fs::path dir = fs::path(cmd.out_dir) / "models";
    save_models(cfg, m, dir);
    const auto &sets = data.sets;
    out << "dynamics training mse " << csv::format_real(neural::dataset_mse(*m.dynamics, sets.dynamics)) << '\n';
    for (std::size_t i = 0; i < m.measurement.size(); ++i) {
        out << "node " << i + 1 << " training mse "
            << csv::format_real(neural::dataset_mse(*m.measurement[i], sets.measurement[i])) << '\n';
    }
    out << "saved networks to " << dir.string() << '\n';
    return 0;
}

int do_run(const Command &cmd, std::ostream &out, std::ostream &err) {
    const ExperimentConfig cfg = resolve_config(cmd);
    const auto variants = variants_for(cmd.variant.empty() ? "ndkf" : cmd.variant);
    const auto data = sim::generate_training_data(cfg);
    std::optional<sim::TrainedModels> trained;
    for (auto v : variants) {
        if (v == sim::Variant::Ndkf) {
            trained = obtain_models(cfg, data, fs::path(cmd.out_dir) / "models", err);
        }
    }
    for (auto v : variants) {
        const auto m = sim::run_experiment(cfg, v, data, trained ? &*trained : nullptr, 0);
        const fs::path dir = variants.size() == 1 ? fs::path(cmd.out_dir) : fs::path(cmd.out_dir) / sim::to_string(v);
        csv::write_run_files(dir.string(), m);
        out << sim::to_string(v) << " rmse_px " << csv::format_real(m.rmse_px) << " rmse_py "
            << csv::format_real(m.rmse_py) << " messages " << m.msg_count << " inversions " << m.matrix_inversions
            << " nn_passes " << m.nn_forward_passes << '\n';
    }
    return 0;
}

sim::MonteCarloSummary sweep(const ExperimentConfig &cfg, const std::vector<sim::Variant> &variants,
                             const std::string &out_dir, std::ostream &err) {
    const auto data = sim::generate_training_data(cfg);
    std::optional<sim::TrainedModels> trained;
    for (auto v : variants) {
        if (v == sim::Variant::Ndkf) {
            trained = obtain_models(cfg, data, fs::path(out_dir) / "models", err);
        }
    }
    auto s = sim::monte_carlo(cfg, cfg.mc_runs, variants, data, trained ? &*trained : nullptr, thread_cap());
    csv::write_summary_files(out_dir, s);
    return s;
}

int do_montecarlo(const Command &cmd, std::ostream &out, std::ostream &err) {
    const ExperimentConfig cfg = resolve_config(cmd);
    const auto s = sweep(cfg, variants_for(cmd.variant), cmd.out_dir, err);
    csv::write_summary(out, s);
    return report_failures(s, err);
}

int do_compare(const Command &cmd, std::ostream &out, std::ostream &err) {
    const ExperimentConfig cfg = resolve_config(cmd);
    const auto s = sweep(cfg, variants_for("both"), cmd.out_dir, err);
    out << "RMSE over " << s.runs << " Monte Carlo runs\n";
    out << std::left << std::setw(30) << "Method" << std::setw(12) << "p_x" << "p_y" << '\n';
    for (const auto &v : s.variants) {
        const std::string name = v.variant == sim::Variant::Ndkf ? "NDKF (learned models)" : "Distributed EKF (baseline)";
        out << std::left << std::setw(30) << name << std::setw(12) << fixed4(v.mean_rmse_px) << fixed4(v.mean_rmse_py)
            << '\n';
    }
    return report_failures(s, err);
}

int do_check(std::ostream &out) {
    bool ok = true;
    for (const auto &r : selfcheck::run_self_checks()) {
        out << (r.passed ? "ok   " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Distributed Kalman filtering with learned models", "ndkf"};
    Command cmd;
    app.require_subcommand(1, 1);
    for (const char *verb : {"train", "run", "montecarlo", "compare", "check"}) {
        auto *sub = app.add_subcommand(verb);
        if (std::string(verb) == "check") {
            continue;
        }
        sub->add_option("--config", cmd.config_path, "experiment config file (defaults built in)");
        sub->add_option("--out-dir", cmd.out_dir, "directory for networks and CSV output");
        sub->add_option("--seed", cmd.seed, "override the config seed");
        sub->add_option("--runs", cmd.runs, "override mc_runs");
        sub->add_option("--variant", cmd.variant, "ndkf, ekf or both")
            ->check(CLI::IsMember({"ndkf", "ekf", "both"}));
    }
    app.description("Verbs: train, run, montecarlo, compare, check");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "BadArgs: " << e.what() << '\n' << app.help();
        return 2;
    }
    cmd.verb = app.get_subcommands().front()->get_name();

    try {
        if (cmd.verb == "train") return do_train(cmd, out, err);
        if (cmd.verb == "run") return do_run(cmd, out, err);
        if (cmd.verb == "montecarlo") return do_montecarlo(cmd, out, err);
        if (cmd.verb == "compare") return do_compare(cmd, out, err);
        return do_check(out);
    } catch (const Error &e) {
        err << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace ndkf::cli
