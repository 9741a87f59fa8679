#include "ndkf/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace ndkf {

ExperimentConfig::ExperimentConfig() {
    nn_dynamics.spec.input_dim = 4;
    nn_dynamics.spec.hidden_layers = {128, 128, 128};
    nn_dynamics.spec.output_dim = 2;
    nn_dynamics.spec.use_batch_norm = true;
    nn_dynamics.spec.dropout_rate = 0.2;
    nn_dynamics.train.epochs = 3000;
    nn_dynamics.train.learning_rate = 1e-3;
    nn_dynamics.train.lr_decay_factor = 0.5;
    nn_dynamics.train.lr_decay_every = 1000;
    nn_dynamics.train.batch_size = 0;

    nn_measurement.spec.input_dim = 2;
    nn_measurement.spec.hidden_layers = {32, 32};
    nn_measurement.spec.output_dim = 1;
    nn_measurement.train.epochs = 1000;
    nn_measurement.train.learning_rate = 1e-3;
    nn_measurement.train.lr_decay_factor = 0.5;
    nn_measurement.train.lr_decay_every = 1000;
    nn_measurement.train.batch_size = 0;
}

namespace {

[[noreturn]] void config_error(const std::string &field, const std::string &what) {
    throw Error(ErrorKind::ConfigError, field + ": " + what);
}

void require_spd(const Matrix &m, const std::string &field, bool allow_semidefinite) {
    if (!m.allFinite()) {
        config_error(field, "must be finite");
    }
    if (allow_semidefinite) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(linalg::symmetrize(m));
        if (eig.eigenvalues().minCoeff() < 0.0) {
            config_error(field, "must be positive semidefinite");
        }
        return;
    }
    try {
        linalg::cholesky_lower(m);
    } catch (const Error &) {
        config_error(field, "must be symmetric positive definite");
    }
}

} // namespace

void ExperimentConfig::validate() const {
    if (horizon_train < 2) config_error("experiment.horizon_train", "must be >= 2");
    if (horizon_test < 1) config_error("experiment.horizon_test", "must be >= 1");
    if (n_nodes < 1 || n_nodes > 4) config_error("experiment.n_nodes", "must lie in 1..4 for the 2D system");
    if (topology.size() != n_nodes) config_error("topology", "node count differs from experiment.n_nodes");
    if (mc_runs < 1) config_error("experiment.mc_runs", "must be >= 1");
    if (rounds_per_step < 1) config_error("fusion.rounds_per_step", "must be >= 1");
    if (score_node < 1 || score_node > n_nodes) config_error("experiment.score_node", "must name a node");
    if (q.rows() != 2 || q.cols() != 2) config_error("noise.q", "must be 2x2");
    require_spd(q, "noise.q", true);
    if (!(r_scalar > 0.0)) config_error("noise.r", "must be > 0");
    if (init_mean.size() != 2 || !init_mean.allFinite()) config_error("init.mean", "must be 2 finite values");
    if (init_cov.rows() != 2 || init_cov.cols() != 2) config_error("init.cov", "must be 2x2");
    require_spd(init_cov, "init.cov", false);
    if (!(truth_process_noise_scale >= 0.0)) config_error("noise.truth_process_scale", "must be >= 0");
    if (!(truth_measurement_noise_scale >= 0.0)) config_error("noise.truth_measurement_scale", "must be >= 0");
    for (const auto *net : {&nn_dynamics, &nn_measurement}) {
        const std::string section = net == &nn_dynamics ? "nn_dynamics" : "nn_measurement";
        try {
            net->spec.validate();
            net->train.validate();
        } catch (const Error &e) {
            config_error(section, e.detail());
        }
    }
    if (nn_dynamics.spec.input_dim != 4 || nn_dynamics.spec.output_dim != 2) {
        config_error("nn_dynamics", "network must map state+time (4) to a 2D residual");
    }
    if (nn_measurement.spec.input_dim != 2 || nn_measurement.spec.output_dim != 1) {
        config_error("nn_measurement", "network must map the 2D state to one reading");
    }
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

class Fields {
public:
    Fields(std::map<std::string, Entry> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source)) {}

    bool has(const std::string &key) const { return entries_.count(key) != 0; }

    [[noreturn]] void fail(const std::string &key, const std::string &what) const {
        const auto it = entries_.find(key);
        std::ostringstream os;
        os << source_;
        if (it != entries_.end()) {
            os << ":" << it->second.line;
        }
        os << ": " << key << ": " << what;
        throw Error(ErrorKind::ConfigError, os.str());
    }

    const std::string &raw(const std::string &key) {
        used_.insert({key, true});
        return entries_.at(key).value;
    }

    std::vector<double> reals(const std::string &key) {
        std::vector<double> out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            char *end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (item.empty() || end != item.c_str() + item.size()) {
                fail(key, "'" + item + "' is not a number");
            }
            out.push_back(v);
        }
        if (out.empty()) {
            fail(key, "expected at least one value");
        }
        return out;
    }

    double real(const std::string &key) {
        const auto v = reals(key);
        if (v.size() != 1) {
            fail(key, "expected a single number");
        }
        return v[0];
    }

    long long integer(const std::string &key) {
        const std::string &s = raw(key);
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(key, "'" + s + "' is not an integer");
        }
        return v;
    }

    std::uint64_t unsigned_integer(const std::string &key) {
        const std::string &s = raw(key);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(key, "'" + s + "' is not a non-negative integer");
        }
        return v;
    }

    bool flag(const std::string &key) {
        const std::string &s = raw(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        fail(key, "'" + s + "' is not a boolean");
    }

    std::vector<int> ints(const std::string &key) {
        std::vector<int> out;
        for (double v : reals(key)) {
            if (v != static_cast<int>(v)) {
                fail(key, "expected integers");
            }
            out.push_back(static_cast<int>(v));
        }
        return out;
    }

    void reject_unused() const {
        for (const auto &[key, entry] : entries_) {
            if (!used_.count(key)) {
                std::ostringstream os;
                os << source_ << ":" << entry.line << ": " << key << ": unknown field";
                throw Error(ErrorKind::ConfigError, os.str());
            }
        }
    }

private:
    std::map<std::string, Entry> entries_;
    std::string source_;
    std::map<std::string, bool> used_;
};

Matrix diagonal_2x2(Fields &f, const std::string &key) {
    const auto v = f.reals(key);
    if (v.size() == 1) {
        return Matrix::Identity(2, 2) * v[0];
    }
    if (v.size() == 2) {
        Vector d(2);
        d << v[0], v[1];
        return d.asDiagonal();
    }
    if (v.size() == 4) {
        Matrix m(2, 2);
        m << v[0], v[1], v[2], v[3];
        return m;
    }
    f.fail(key, "expected 1 (scalar), 2 (diagonal) or 4 (row-major) values");
}

void read_network(Fields &f, const std::string &section, NetworkConfig &net) {
    const auto key = [&](const char *name) { return section + "." + name; };
    if (f.has(key("hidden"))) net.spec.hidden_layers = f.ints(key("hidden"));
    if (f.has(key("batch_norm"))) net.spec.use_batch_norm = f.flag(key("batch_norm"));
    if (f.has(key("dropout"))) net.spec.dropout_rate = f.real(key("dropout"));
    if (f.has(key("activation")) && f.raw(key("activation")) != "tanh") {
        f.fail(key("activation"), "only tanh is supported");
    }
    if (f.has(key("epochs"))) net.train.epochs = static_cast<int>(f.integer(key("epochs")));
    if (f.has(key("learning_rate"))) net.train.learning_rate = f.real(key("learning_rate"));
    if (f.has(key("lr_decay_factor"))) net.train.lr_decay_factor = f.real(key("lr_decay_factor"));
    if (f.has(key("lr_decay_every"))) net.train.lr_decay_every = static_cast<int>(f.integer(key("lr_decay_every")));
    if (f.has(key("batch_size"))) net.train.batch_size = static_cast<int>(f.integer(key("batch_size")));
    if (f.has(key("standardize"))) net.train.standardize = f.flag(key("standardize"));
}

} // namespace

ExperimentConfig parse_config(std::istream &in, const std::string &source) {
    std::map<std::string, Entry> entries;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::ostringstream where;
        where << source << ":" << line_no;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw Error(ErrorKind::ConfigError, where.str() + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError, where.str() + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string full = section.empty() ? key : section + "." + key;
        if (entries.count(full)) {
            throw Error(ErrorKind::ConfigError, where.str() + ": " + full + ": duplicate field");
        }
        entries[full] = Entry{trim(line.substr(eq + 1)), line_no};
    }

    Fields f(std::move(entries), source);
    ExperimentConfig cfg;
    if (f.has("experiment.horizon_train")) cfg.horizon_train = static_cast<int>(f.integer("experiment.horizon_train"));
    if (f.has("experiment.horizon_test")) cfg.horizon_test = static_cast<int>(f.integer("experiment.horizon_test"));
    if (f.has("experiment.n_nodes")) cfg.n_nodes = static_cast<int>(f.integer("experiment.n_nodes"));
    if (f.has("experiment.seed")) cfg.seed = f.unsigned_integer("experiment.seed");
    if (f.has("experiment.mc_runs")) cfg.mc_runs = static_cast<int>(f.integer("experiment.mc_runs"));
    if (f.has("experiment.score_node")) cfg.score_node = static_cast<int>(f.integer("experiment.score_node"));
    if (f.has("experiment.test_start")) {
        const std::string &s = f.raw("experiment.test_start");
        if (s == "origin") cfg.test_start = TestStart::Origin;
        else if (s == "continue") cfg.test_start = TestStart::Continue;
        else f.fail("experiment.test_start", "expected 'origin' or 'continue'");
    }

    if (f.has("noise.q")) cfg.q = diagonal_2x2(f, "noise.q");
    if (f.has("noise.r")) cfg.r_scalar = f.real("noise.r");
    if (f.has("noise.truth_process_scale")) cfg.truth_process_noise_scale = f.real("noise.truth_process_scale");
    if (f.has("noise.truth_measurement_scale"))
        cfg.truth_measurement_noise_scale = f.real("noise.truth_measurement_scale");

    if (f.has("init.mean")) {
        const auto v = f.reals("init.mean");
        if (v.size() != 2) f.fail("init.mean", "expected 2 values");
        cfg.init_mean = Eigen::Map<const Vector>(v.data(), 2);
    }
    if (f.has("init.cov")) cfg.init_cov = diagonal_2x2(f, "init.cov");

    if (f.has("topology.kind")) cfg.topology_kind = f.raw("topology.kind");
    try {
        if (cfg.topology_kind == "custom") {
            std::vector<std::vector<int>> nb(static_cast<std::size_t>(cfg.n_nodes));
            for (int i = 0; i < cfg.n_nodes; ++i) {
                const std::string key = "topology.node" + std::to_string(i + 1);
                if (!f.has(key)) {
                    throw Error(ErrorKind::ConfigError, key + ": missing neighbor list for custom topology");
                }
                auto &set = nb[static_cast<std::size_t>(i)];
                set.push_back(i);
                for (int j : f.ints(key)) {
                    if (j < 1 || j > cfg.n_nodes) f.fail(key, "neighbor " + std::to_string(j) + " is out of range");
                    set.push_back(j - 1);
                }
            }
            cfg.topology = fusion::Topology(std::move(nb));
        } else {
            cfg.topology = fusion::Topology::named(cfg.topology_kind, cfg.n_nodes);
        }
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::ConfigError) throw;
        throw Error(ErrorKind::ConfigError, source + ": topology: " + e.detail());
    }

    if (f.has("fusion.scale")) {
        const std::string &s = f.raw("fusion.scale");
        if (s == "sum") cfg.fusion_scale = fusion::FusionScale::Sum;
        else if (s == "average") cfg.fusion_scale = fusion::FusionScale::Average;
        else f.fail("fusion.scale", "expected 'sum' or 'average'");
    }
    if (f.has("fusion.rounds_per_step")) cfg.rounds_per_step = static_cast<int>(f.integer("fusion.rounds_per_step"));

    if (f.has("filter.jacobian")) {
        const std::string &s = f.raw("filter.jacobian");
        if (s == "analytic") cfg.jacobian = neural::JacobianMethod::Analytic;
        else if (s == "finite_diff") cfg.jacobian = neural::JacobianMethod::FiniteDiff;
        else f.fail("filter.jacobian", "expected 'analytic' or 'finite_diff'");
    }
    if (f.has("filter.ekf_misspec")) {
        const std::string &s = f.raw("filter.ekf_misspec");
        if (s == "drop_terms") cfg.ekf_misspec = models::Misspecification::DropTerms;
        else if (s == "unit_coefficients") cfg.ekf_misspec = models::Misspecification::UnitCoefficients;
        else if (s == "drop_scale_and_terms") cfg.ekf_misspec = models::Misspecification::DropScaleAndTerms;
        else f.fail("filter.ekf_misspec", "expected 'drop_terms', 'unit_coefficients' or 'drop_scale_and_terms'");
    }

    read_network(f, "nn_dynamics", cfg.nn_dynamics);
    read_network(f, "nn_measurement", cfg.nn_measurement);
    f.reject_unused();
    try {
        cfg.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigError, source + ": " + e.detail());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "cannot open config file " + path);
    }
    return parse_config(in, path);
}

namespace {

const char *misspec_name(models::Misspecification m) {
    switch (m) {
    case models::Misspecification::DropTerms: return "drop_terms";
    case models::Misspecification::UnitCoefficients: return "unit_coefficients";
    case models::Misspecification::DropScaleAndTerms: return "drop_scale_and_terms";
    }
    return "drop_terms";
}

void write_list(std::ostream &out, const std::vector<int> &v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << (i ? ", " : "") << v[i];
    }
}

void write_network(std::ostream &out, const std::string &section, const NetworkConfig &net) {
    out << "\n[" << section << "]\n";
    out << "hidden = ";
    write_list(out, net.spec.hidden_layers);
    out << "\nactivation = tanh\n";
    out << "batch_norm = " << (net.spec.use_batch_norm ? "true" : "false") << '\n';
    out << "dropout = " << net.spec.dropout_rate << '\n';
    out << "epochs = " << net.train.epochs << '\n';
    out << "learning_rate = " << net.train.learning_rate << '\n';
    out << "lr_decay_factor = " << net.train.lr_decay_factor << '\n';
    out << "lr_decay_every = " << net.train.lr_decay_every << '\n';
    out << "batch_size = " << net.train.batch_size << '\n';
    out << "standardize = " << (net.train.standardize ? "true" : "false") << '\n';
}

} // namespace

void write_config(const ExperimentConfig &cfg, std::ostream &out) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(17);
    out << "[experiment]\n"
        << "horizon_train = " << cfg.horizon_train << '\n'
        << "horizon_test = " << cfg.horizon_test << '\n'
        << "n_nodes = " << cfg.n_nodes << '\n'
        << "seed = " << cfg.seed << '\n'
        << "mc_runs = " << cfg.mc_runs << '\n'
        << "score_node = " << cfg.score_node << '\n'
        << "test_start = " << (cfg.test_start == TestStart::Origin ? "origin" : "continue") << '\n';
    out << "\n[noise]\n"
        << "q = " << cfg.q(0, 0) << ", " << cfg.q(0, 1) << ", " << cfg.q(1, 0) << ", " << cfg.q(1, 1) << '\n'
        << "r = " << cfg.r_scalar << '\n'
        << "truth_process_scale = " << cfg.truth_process_noise_scale << '\n'
        << "truth_measurement_scale = " << cfg.truth_measurement_noise_scale << '\n';
    out << "\n[init]\n"
        << "mean = " << cfg.init_mean(0) << ", " << cfg.init_mean(1) << '\n'
        << "cov = " << cfg.init_cov(0, 0) << ", " << cfg.init_cov(0, 1) << ", " << cfg.init_cov(1, 0) << ", "
        << cfg.init_cov(1, 1) << '\n';
    out << "\n[topology]\nkind = " << cfg.topology_kind << '\n';
    if (cfg.topology_kind == "custom") {
        for (int i = 0; i < cfg.topology.size(); ++i) {
            std::vector<int> one_based;
            for (int j : cfg.topology.neighbors(i)) {
                one_based.push_back(j + 1);
            }
            out << "node" << i + 1 << " = ";
            write_list(out, one_based);
            out << '\n';
        }
    }
    out << "\n[fusion]\n"
        << "scale = " << (cfg.fusion_scale == fusion::FusionScale::Sum ? "sum" : "average") << '\n'
        << "rounds_per_step = " << cfg.rounds_per_step << '\n';
    out << "\n[filter]\n"
        << "jacobian = " << (cfg.jacobian == neural::JacobianMethod::Analytic ? "analytic" : "finite_diff") << '\n'
        << "ekf_misspec = "
        << misspec_name(cfg.ekf_misspec) << '\n';
    write_network(out, "nn_dynamics", cfg.nn_dynamics);
    write_network(out, "nn_measurement", cfg.nn_measurement);
    out.flags(flags);
    out.precision(precision);
}

} // namespace ndkf
