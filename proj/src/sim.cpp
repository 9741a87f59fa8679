#include "ndkf/sim.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace ndkf::sim {

std::string to_string(Variant v) { return v == Variant::Ndkf ? "ndkf" : "ekf"; }

TruthSystem four_node_system(const ExperimentConfig &cfg) {
    std::vector<models::Model> sensors;
    std::vector<Matrix> r;
    for (int node = 1; node <= cfg.n_nodes; ++node) {
        sensors.push_back(models::true_measurement_model(node));
        r.push_back(Matrix::Constant(1, 1, cfg.r_scalar * cfg.truth_measurement_noise_scale));
    }
    return TruthSystem{models::nominal_dynamics_model(), std::move(sensors), cfg.q * cfg.truth_process_noise_scale,
                       std::move(r)};
}

std::vector<Vector> simulate_truth(const TruthSystem &system, const Vector &x0, long k0, int steps,
                                   std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> traj;
    traj.reserve(static_cast<std::size_t>(steps) + 1);
    traj.push_back(x0);
    for (int t = 0; t < steps; ++t) {
        const long k = k0 + t;
        const Vector noise = rng.gaussian(system.q);
        traj.push_back(system.dynamics.eval(traj.back(), k) + noise);
    }
    return traj;
}

std::vector<Vector> simulate_truth(int steps, std::uint64_t seed, const Matrix &q) {
    ExperimentConfig cfg;
    cfg.q = q;
    return simulate_truth(four_node_system(cfg), Vector::Zero(2), 0, steps, seed);
}

Readings sample_measurements(const TruthSystem &system, const std::vector<Vector> &traj, long k0,
                             std::uint64_t seed) {
    if (traj.empty()) {
        throw Error(ErrorKind::LengthMismatch, "sample_measurements needs a nonempty trajectory");
    }
    Readings out(system.sensors.size());
    for (std::size_t i = 0; i < system.sensors.size(); ++i) {
        Rng rng(derive_seed(seed, "node", i + 1));
        out[i].reserve(traj.size());
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const long k = k0 + static_cast<long>(t);
            out[i].push_back(system.sensors[i].eval(traj[t], k) + rng.gaussian(system.r[i]));
        }
    }
    return out;
}

TrainingSets build_training_sets(const std::vector<Vector> &traj, const Readings &readings, long k0) {
    TrainingSets sets;
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
        Vector in(4);
        in << traj[t], models::time_features(k0 + static_cast<long>(t));
        sets.dynamics.inputs.push_back(std::move(in));
        sets.dynamics.targets.push_back(traj[t + 1] - traj[t]);
    }
    for (const auto &series : readings) {
        if (series.size() != traj.size()) {
            throw Error(ErrorKind::LengthMismatch, "readings and trajectory lengths differ");
        }
        neural::Dataset ds;
        ds.inputs = traj;
        ds.targets = series;
        sets.measurement.push_back(std::move(ds));
    }
    return sets;
}

TrainingData generate_training_data(const ExperimentConfig &cfg) {
    const TruthSystem system = four_node_system(cfg);
    TrainingData data;
    data.trajectory = simulate_truth(system, Vector::Zero(2), 0, cfg.horizon_train - 1,
                                     derive_seed(cfg.seed, "truth-train"));
    data.readings = sample_measurements(system, data.trajectory, 0, derive_seed(cfg.seed, "meas-train"));
    data.sets = build_training_sets(data.trajectory, data.readings, 0);
    return data;
}

TrainedModels train_models(const ExperimentConfig &cfg, const TrainingData &data) {
    TrainedModels out;
    neural::TrainConfig dyn_train = cfg.nn_dynamics.train;
    dyn_train.seed = derive_seed(cfg.seed, "nn-dynamics");
    out.dynamics = std::make_shared<const neural::MlpParams>(
        neural::mlp_train(cfg.nn_dynamics.spec, data.sets.dynamics, dyn_train));
    for (std::size_t i = 0; i < data.sets.measurement.size(); ++i) {
        neural::TrainConfig meas_train = cfg.nn_measurement.train;
        meas_train.seed = derive_seed(cfg.seed, "nn-measurement", i + 1);
        out.measurement.push_back(std::make_shared<const neural::MlpParams>(
            neural::mlp_train(cfg.nn_measurement.spec, data.sets.measurement[i], meas_train)));
    }
    return out;
}

FilterModels ndkf_models(const TrainedModels &trained, neural::JacobianMethod method) {
    if (!trained.dynamics) {
        throw Error(ErrorKind::InvalidStage, "NDKF variant requires trained networks");
    }
    FilterModels fm{models::learned_dynamics_model(trained.dynamics, method), {}};
    for (const auto &net : trained.measurement) {
        fm.measurements.push_back(models::learned_measurement_model(net, method));
    }
    return fm;
}

FilterModels ekf_models(const ExperimentConfig &cfg) {
    auto base = models::ekf_baseline_models(cfg.ekf_misspec);
    base.measurements.resize(static_cast<std::size_t>(cfg.n_nodes), base.measurements.front());
    return FilterModels{std::move(base.dynamics), std::move(base.measurements)};
}

FilterSetup filter_setup(const ExperimentConfig &cfg) {
    FilterSetup setup{cfg.q,
                      std::vector<Matrix>(static_cast<std::size_t>(cfg.n_nodes), Matrix::Constant(1, 1, cfg.r_scalar)),
                      cfg.init_mean,
                      cfg.init_cov,
                      cfg.topology,
                      cfg.fusion_scale,
                      cfg.rounds_per_step,
                      cfg.score_node - 1,
                      true};
    return setup;
}

TestData generate_test_data(const ExperimentConfig &cfg, const TrainingData &training, int run_index) {
    const TruthSystem system = four_node_system(cfg);
    TestData data;
    Vector x0 = Vector::Zero(2);
    if (cfg.test_start == TestStart::Continue) {
        data.k0 = static_cast<long>(training.trajectory.size()) - 1;
        x0 = training.trajectory.back();
    }
    data.truth = simulate_truth(system, x0, data.k0, cfg.horizon_test,
                                derive_seed(cfg.seed, "truth-test", static_cast<std::uint64_t>(run_index)));
    const std::vector<Vector> observed(data.truth.begin() + 1, data.truth.end());
    data.readings = sample_measurements(system, observed, data.k0 + 1,
                                        derive_seed(cfg.seed, "meas-test", static_cast<std::uint64_t>(run_index)));
    return data;
}

std::pair<double, double> rmse(const std::vector<Vector> &truth, const std::vector<Vector> &estimates) {
    if (truth.size() != estimates.size() || truth.empty()) {
        throw Error(ErrorKind::LengthMismatch, "rmse needs equal, nonempty series");
    }
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const Vector e = truth[t] - estimates[t];
        sx += e(0) * e(0);
        sy += e(1) * e(1);
    }
    const auto n = static_cast<double>(truth.size());
    return {std::sqrt(sx / n), std::sqrt(sy / n)};
}

RunMetrics run_filter(const FilterModels &models, const FilterSetup &setup, const TestData &data) {
    const int n_nodes = setup.topology.size();
    if (static_cast<int>(models.measurements.size()) != n_nodes || static_cast<int>(setup.r.size()) != n_nodes ||
        static_cast<int>(data.readings.size()) != n_nodes) {
        throw Error(ErrorKind::DimensionMismatch, "run_filter: node counts of models, R, readings and topology differ");
    }
    if (setup.score_node < 0 || setup.score_node >= n_nodes) {
        throw Error(ErrorKind::ConfigError, "run_filter: score node out of range");
    }
    const int steps = static_cast<int>(data.truth.size()) - 1;
    for (const auto &series : data.readings) {
        if (static_cast<int>(series.size()) != steps) {
            throw Error(ErrorKind::LengthMismatch, "run_filter: readings must cover every filtered step");
        }
    }

    RunMetrics m;
    std::vector<filter::Belief> beliefs(static_cast<std::size_t>(n_nodes),
                                        filter::Belief{setup.init_mean, setup.init_cov, filter::Stage::Updated, data.k0});
    std::vector<Vector> scored;
    Matrix f_jac;
    for (int t = 1; t <= steps; ++t) {
        const long k_prev = data.k0 + t - 1;
        const long k = k_prev + 1;
        std::vector<filter::Belief> local;
        local.reserve(beliefs.size());
        std::vector<Vector> local_means;
        for (int i = 0; i < n_nodes; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            try {
                const filter::Belief prior = filter::predict(beliefs[ui], models.dynamics, setup.q, k_prev, f_jac);
                auto res = filter::update(prior, data.readings[ui][static_cast<std::size_t>(t - 1)],
                                          models.measurements[ui], setup.r[ui], i + 1);
                m.contraction.push_back(stability::contraction_report(f_jac, res.gain, res.jacobian, k, i + 1));
                m.innovations.push_back(std::move(res.record));
                local_means.push_back(res.belief.mean);
                local.push_back(std::move(res.belief));
            } catch (const Error &e) {
                throw Error(e.kind(), "step k=" + std::to_string(k) + " node " + std::to_string(i + 1) + ": " +
                                          e.detail());
            }
            m.nn_forward_passes += models.dynamics.eval_passes() + models.dynamics.jacobian_passes() +
                                   models.measurements[ui].eval_passes() +
                                   models.measurements[ui].jacobian_passes();
            m.matrix_inversions += 1;
        }
        if (setup.fuse) {
            for (int round = 0; round < setup.rounds_per_step; ++round) {
                try {
                    local = fusion::consensus_round(local, setup.topology, setup.fusion_scale);
                } catch (const Error &e) {
                    throw Error(e.kind(), "step k=" + std::to_string(k) + " consensus round " +
                                              std::to_string(round + 1) + ": " + e.detail());
                }
                m.msg_count += setup.topology.message_count();
                m.matrix_inversions += n_nodes;
                m.precision_conversions += n_nodes;
            }
        }
        beliefs = std::move(local);

        m.times.push_back(k);
        m.truth.push_back(data.truth[static_cast<std::size_t>(t)]);
        std::vector<Vector> fused;
        for (const auto &b : beliefs) {
            fused.push_back(b.mean);
        }
        scored.push_back(fused[static_cast<std::size_t>(setup.score_node)]);
        m.fused_means.push_back(std::move(fused));
        m.local_means.push_back(std::move(local_means));
    }
    std::tie(m.rmse_px, m.rmse_py) = rmse(m.truth, scored);
    return m;
}

RunMetrics run_experiment(const ExperimentConfig &cfg, Variant variant, const TrainingData &training,
                          const TrainedModels *trained, int run_index) {
    const TestData data = generate_test_data(cfg, training, run_index);
    const FilterSetup setup = filter_setup(cfg);
    if (variant == Variant::Ndkf) {
        if (trained == nullptr) {
            throw Error(ErrorKind::InvalidStage, "run_experiment: NDKF variant needs trained models");
        }
        return run_filter(ndkf_models(*trained, cfg.jacobian), setup, data);
    }
    return run_filter(ekf_models(cfg), setup, data);
}

MonteCarloSummary monte_carlo(const ExperimentConfig &cfg, int runs, const std::vector<Variant> &variants,
                              const TrainingData &training, const TrainedModels *trained, int threads) {
    if (runs < 1) {
        throw Error(ErrorKind::ConfigError, "monte_carlo: runs must be >= 1");
    }
    const std::size_t n_jobs = static_cast<std::size_t>(runs) * variants.size();
    std::vector<std::optional<RunMetrics>> results(n_jobs);
    std::vector<std::string> errors(n_jobs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
            const Variant v = variants[job / static_cast<std::size_t>(runs)];
            const int run = static_cast<int>(job % static_cast<std::size_t>(runs));
            try {
                results[job] = run_experiment(cfg, v, training, trained, run);
            } catch (const Error &e) {
                errors[job] = e.what();
            }
        }
    };
    if (threads <= 0) {
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(threads), n_jobs);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto &th : pool) {
            th.join();
        }
    }

    MonteCarloSummary summary;
    summary.runs = runs;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        VariantSummary vs;
        vs.variant = variants[vi];
        int ok = 0;
        for (int run = 0; run < runs; ++run) {
            const std::size_t job = vi * static_cast<std::size_t>(runs) + static_cast<std::size_t>(run);
            if (!results[job]) {
                ++summary.failures;
                summary.errors.push_back(to_string(vs.variant) + " run " + std::to_string(run) + ": " + errors[job]);
                continue;
            }
            vs.run_rmse_px.push_back(results[job]->rmse_px);
            vs.run_rmse_py.push_back(results[job]->rmse_py);
            vs.mean_rmse_px += results[job]->rmse_px;
            vs.mean_rmse_py += results[job]->rmse_py;
            vs.msg_count = results[job]->msg_count;
            ++ok;
        }
        if (ok > 0) {
            vs.mean_rmse_px /= ok;
            vs.mean_rmse_py /= ok;
        } else {
            vs.mean_rmse_px = vs.mean_rmse_py = std::numeric_limits<double>::quiet_NaN();
        }
        summary.variants.push_back(std::move(vs));
    }
    return summary;
}

} // namespace ndkf::sim
