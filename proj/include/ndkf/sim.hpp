// Ground truth, training data, full distributed runs, and Monte Carlo sweeps.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ndkf/config.hpp"
#include "ndkf/filter.hpp"
#include "ndkf/fusion.hpp"
#include "ndkf/models.hpp"
#include "ndkf/neural.hpp"
#include "ndkf/stability.hpp"

namespace ndkf::sim {

enum class Variant { Ndkf, Ekf };

std::string to_string(Variant v);

/// Data-generating system: x_{k+1} = f(x_k, k) + w_k, y_{k,i} = h_i(x_k) + v_{k,i}.
struct TruthSystem {
    models::Model dynamics;
    std::vector<models::Model> sensors;
    Matrix q;
    std::vector<Matrix> r;
};

/// The four-node 2D system, with the config's truth noise multipliers applied to Q and R.
TruthSystem four_node_system(const ExperimentConfig &cfg);

/// x0 followed by `steps` propagated states (k0 .. k0+steps). Noise from `seed`.
std::vector<Vector> simulate_truth(const TruthSystem &system, const Vector &x0, long k0, int steps,
                                   std::uint64_t seed);

/// The 2D system from [0, 0] at k = 0, process noise covariance `q`.
std::vector<Vector> simulate_truth(int steps, std::uint64_t seed,
                                   const Matrix &q = Matrix::Identity(2, 2) * 0.001);

/// readings[node][t] for every state in `traj`; node streams are independent (seed, node index).
using Readings = std::vector<std::vector<Vector>>;
Readings sample_measurements(const TruthSystem &system, const std::vector<Vector> &traj, long k0,
                             std::uint64_t seed);

struct TrainingSets {
    neural::Dataset dynamics;                 ///< [x_k; time features(k)] → x_{k+1} − x_k
    std::vector<neural::Dataset> measurement; ///< per node: x_k → y_{k,i}
};

TrainingSets build_training_sets(const std::vector<Vector> &traj, const Readings &readings, long k0 = 0);

/// The offline data: training trajectory (k = 0 .. horizon_train−1), readings, and datasets.
struct TrainingData {
    std::vector<Vector> trajectory;
    Readings readings;
    TrainingSets sets;
};

TrainingData generate_training_data(const ExperimentConfig &cfg);

struct TrainedModels {
    std::shared_ptr<const neural::MlpParams> dynamics;
    std::vector<std::shared_ptr<const neural::MlpParams>> measurement;
};

/// Fits the dynamics residual net and one measurement net per node. Deterministic in cfg.seed.
TrainedModels train_models(const ExperimentConfig &cfg, const TrainingData &data);

struct FilterModels {
    models::Model dynamics;
    std::vector<models::Model> measurements;
};

FilterModels ndkf_models(const TrainedModels &trained, neural::JacobianMethod method);
FilterModels ekf_models(const ExperimentConfig &cfg);

/// Noise, initialization, and communication settings of the distributed filter.
struct FilterSetup {
    Matrix q;
    std::vector<Matrix> r;
    Vector init_mean;
    Matrix init_cov;
    fusion::Topology topology;
    fusion::FusionScale fusion_scale = fusion::FusionScale::Sum;
    int rounds_per_step = 1;
    int score_node = 0; ///< 0-based
    bool fuse = true;   ///< false runs every node alone (no messages)
};

FilterSetup filter_setup(const ExperimentConfig &cfg);

/// Truth states truth[0..T] starting at time k0 and readings[node][t] for t = 1..T (index t−1).
struct TestData {
    long k0 = 0;
    std::vector<Vector> truth;
    Readings readings;
};

/// Test segment for one Monte Carlo run: a fresh trajectory from [0, 0] at k = 0, or with
/// TestStart::Continue, the training trajectory carried on from its last state.
TestData generate_test_data(const ExperimentConfig &cfg, const TrainingData &training, int run_index);

struct RunMetrics {
    double rmse_px = 0.0;
    double rmse_py = 0.0;
    std::vector<long> times;                       ///< k of each filtered step
    std::vector<Vector> truth;                     ///< truth at each filtered step
    std::vector<std::vector<Vector>> fused_means;  ///< [step][node]
    std::vector<std::vector<Vector>> local_means;  ///< [step][node], after update, before fusion
    std::vector<filter::InnovationRecord> innovations;
    std::vector<stability::ContractionReport> contraction;
    long msg_count = 0;
    long matrix_inversions = 0;     ///< innovation S⁻¹ plus fused-precision inversions
    long precision_conversions = 0; ///< P⁻¹ for outgoing information messages
    long nn_forward_passes = 0;
};

/// Per-component RMSE of estimates against truth.
std::pair<double, double> rmse(const std::vector<Vector> &truth, const std::vector<Vector> &estimates);

/**
 * Runs the distributed filter over a test segment.
 *
 * Each step: every node predicts from its fused belief, updates with its own
 * reading, then `rounds_per_step` consensus rounds run. Errors carry the step
 * and node in their message.
 */
RunMetrics run_filter(const FilterModels &models, const FilterSetup &setup, const TestData &data);

/// One run of one variant on the run's test segment.
RunMetrics run_experiment(const ExperimentConfig &cfg, Variant variant, const TrainingData &training,
                          const TrainedModels *trained, int run_index = 0);

struct VariantSummary {
    Variant variant = Variant::Ndkf;
    double mean_rmse_px = 0.0;
    double mean_rmse_py = 0.0;
    long msg_count = 0; ///< per run
    std::vector<double> run_rmse_px;
    std::vector<double> run_rmse_py;
};

struct MonteCarloSummary {
    int runs = 0;
    std::vector<VariantSummary> variants;
    long failures = 0;
    std::vector<std::string> errors; ///< one line per failed run
};

/// Runs `runs` independent test segments per variant; threads ≤ 0 means hardware concurrency.
MonteCarloSummary monte_carlo(const ExperimentConfig &cfg, int runs, const std::vector<Variant> &variants,
                              const TrainingData &training, const TrainedModels *trained, int threads = 1);

} // namespace ndkf::sim
