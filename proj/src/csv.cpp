#include "ndkf/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace ndkf::csv {

namespace {

std::ofstream open_in(const std::string &dir, const std::string &name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoError, "cannot create directory " + dir + ": " + ec.message());
    }
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
    }
    return out;
}

void finish(std::ofstream &out, const std::string &name) {
    out.flush();
    if (!out) {
        throw Error(ErrorKind::IoError, "write failed for " + name);
    }
}

} // namespace

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory(std::ostream &out, const sim::RunMetrics &m) {
    const std::size_t n_nodes = m.fused_means.empty() ? 0 : m.fused_means.front().size();
    out << "k,true_px,true_py";
    for (std::size_t i = 1; i <= n_nodes; ++i) {
        out << ",node" << i << "_px,node" << i << "_py";
    }
    out << '\n';
    for (std::size_t t = 0; t < m.times.size(); ++t) {
        out << m.times[t] << ',' << format_real(m.truth[t](0)) << ',' << format_real(m.truth[t](1));
        for (const Vector &x : m.fused_means[t]) {
            out << ',' << format_real(x(0)) << ',' << format_real(x(1));
        }
        out << '\n';
    }
}

void write_innovations(std::ostream &out, const sim::RunMetrics &m) {
    out << "k,node,innovation,S,gain_norm\n";
    for (const auto &r : m.innovations) {
        out << r.time << ',' << r.node << ',' << format_real(r.innovation(0)) << ','
            << format_real(r.innovation_cov(0, 0)) << ',' << format_real(r.gain_norm) << '\n';
    }
}

void write_stability(std::ostream &out, const sim::RunMetrics &m) {
    out << "k,node,alpha,beta,gamma,conditions_met\n";
    for (const auto &c : m.contraction) {
        out << c.time << ',' << c.node << ',' << format_real(c.alpha) << ',' << format_real(c.beta) << ','
            << format_real(c.gamma) << ',' << (c.conditions_met ? 1 : 0) << '\n';
    }
}

void write_summary(std::ostream &out, const sim::MonteCarloSummary &s) {
    out << "variant,rmse_px,rmse_py,msg_count\n";
    for (const auto &v : s.variants) {
        out << sim::to_string(v.variant) << ',' << format_real(v.mean_rmse_px) << ','
            << format_real(v.mean_rmse_py) << ',' << v.msg_count << '\n';
    }
}

void write_runs(std::ostream &out, const sim::MonteCarloSummary &s) {
    out << "run,variant,rmse_px,rmse_py\n";
    for (const auto &v : s.variants) {
        for (std::size_t r = 0; r < v.run_rmse_px.size(); ++r) {
            out << r << ',' << sim::to_string(v.variant) << ',' << format_real(v.run_rmse_px[r]) << ','
                << format_real(v.run_rmse_py[r]) << '\n';
        }
    }
}

void write_run_files(const std::string &dir, const sim::RunMetrics &m) {
    auto traj = open_in(dir, "trajectory.csv");
    write_trajectory(traj, m);
    finish(traj, "trajectory.csv");
    auto innov = open_in(dir, "innovations.csv");
    write_innovations(innov, m);
    finish(innov, "innovations.csv");
    auto stab = open_in(dir, "stability.csv");
    write_stability(stab, m);
    finish(stab, "stability.csv");
}

void write_summary_files(const std::string &dir, const sim::MonteCarloSummary &s) {
    auto sum = open_in(dir, "summary.csv");
    write_summary(sum, s);
    finish(sum, "summary.csv");
    auto runs = open_in(dir, "runs.csv");
    write_runs(runs, s);
    finish(runs, "runs.csv");
}

} // namespace ndkf::csv
