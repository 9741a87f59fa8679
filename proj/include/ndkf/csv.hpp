// CSV export of run metrics and Monte Carlo summaries. Reals use 17 significant digits.
#pragma once

#include <iosfwd>
#include <string>

#include "ndkf/sim.hpp"

namespace ndkf::csv {

/// printf "%.17g": enough digits to round-trip any double.
std::string format_real(double v);

/// k, true_px, true_py, then nodeN_px, nodeN_py for each node's fused mean.
void write_trajectory(std::ostream &out, const sim::RunMetrics &m);
/// k, node, innovation, S, gain_norm. Scalar readings only; vector readings write component 0.
void write_innovations(std::ostream &out, const sim::RunMetrics &m);
/// k, node, alpha, beta, gamma, conditions_met.
void write_stability(std::ostream &out, const sim::RunMetrics &m);
/// variant, rmse_px, rmse_py, msg_count.
void write_summary(std::ostream &out, const sim::MonteCarloSummary &s);
/// run, variant, rmse_px, rmse_py: the per-run values behind the summary means.
void write_runs(std::ostream &out, const sim::MonteCarloSummary &s);

/// Writes trajectory.csv, innovations.csv and stability.csv into `dir` (created if missing).
void write_run_files(const std::string &dir, const sim::RunMetrics &m);
/// Writes summary.csv and runs.csv into `dir`.
void write_summary_files(const std::string &dir, const sim::MonteCarloSummary &s);

} // namespace ndkf::csv
