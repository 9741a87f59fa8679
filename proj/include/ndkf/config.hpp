// Experiment configuration and its key = value file format.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ndkf/fusion.hpp"
#include "ndkf/linalg.hpp"
#include "ndkf/models.hpp"
#include "ndkf/neural.hpp"

namespace ndkf {

/// Where each test segment starts: fresh from [0, 0] at k = 0, or from the last training state.
enum class TestStart { Origin, Continue };

struct NetworkConfig {
    neural::MlpSpec spec;
    neural::TrainConfig train;
};

/**
 * Full description of one experiment. Defaults reproduce the four-node 2D
 * setup: 400 training steps, 100 test steps, Q = diag(0.001, 0.001),
 * R = 0.01, x̂₀ = 0, P₀ = 0.5·I₂, fully connected topology.
 */
struct ExperimentConfig {
    int horizon_train = 400;
    int horizon_test = 100;
    int n_nodes = 4;
    fusion::Topology topology = fusion::Topology::fully_connected(4);
    std::string topology_kind = "full";
    Matrix q = Matrix::Identity(2, 2) * 0.001;
    double r_scalar = 0.01;
    Vector init_mean = Vector::Zero(2);
    Matrix init_cov = Matrix::Identity(2, 2) * 0.5;
    NetworkConfig nn_dynamics;
    NetworkConfig nn_measurement;
    fusion::FusionScale fusion_scale = fusion::FusionScale::Sum;
    int rounds_per_step = 1;
    std::uint64_t seed = 2025;
    int mc_runs = 40;
    int score_node = 1; ///< 1-based node whose fused estimate is scored
    TestStart test_start = TestStart::Origin;
    neural::JacobianMethod jacobian = neural::JacobianMethod::Analytic;
    models::Misspecification ekf_misspec = models::Misspecification::DropTerms;
    /// Multipliers on the data-generating noise; the filter keeps using q and r_scalar.
    double truth_process_noise_scale = 1.0;
    double truth_measurement_noise_scale = 1.0;

    ExperimentConfig();
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Reads a config; every key is optional and overrides the default. Errors name line and field.
ExperimentConfig parse_config(std::istream &in, const std::string &source = "<config>");
ExperimentConfig load_config(const std::string &path);

/// Canonical text form; parse_config(write_config(c)) == c.
void write_config(const ExperimentConfig &cfg, std::ostream &out);

} // namespace ndkf
