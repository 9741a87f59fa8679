// Feedforward networks: forward pass, training with Adam, exact Jacobians, parameter files.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ndkf/linalg.hpp"
#include "ndkf/rng.hpp"

namespace ndkf::neural {

enum class Activation { Tanh };
enum class Mode { Train, Eval };
enum class JacobianMethod { Analytic, FiniteDiff };

struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden_layers;
    int output_dim = 1;
    Activation activation = Activation::Tanh;
    bool use_batch_norm = false;
    double dropout_rate = 0.0;

    void validate() const;
};

struct DenseLayer {
    Matrix weight; ///< out × in
    Vector bias;
};

/// Batch normalization after a hidden affine layer, before the activation.
struct BatchNorm {
    Vector running_mean;
    Vector running_var;
    Vector scale;
    Vector shift;
};

/**
 * Every trainable and normalization quantity of one network.
 *
 * Inputs are standardized with (input_mean, input_std) before the first layer
 * and the last layer's output is mapped back through (output_mean, output_std).
 * Fresh networks carry the identity normalization.
 */
struct MlpParams {
    MlpSpec spec;
    std::vector<DenseLayer> layers; ///< hidden layers then the linear output layer
    std::vector<BatchNorm> norms;   ///< one per hidden layer when spec.use_batch_norm
    Vector input_mean;
    Vector input_std;
    Vector output_mean;
    Vector output_std;
    Mode mode = Mode::Eval;

    /// Throws DimensionMismatch when layer shapes do not chain from input_dim to output_dim.
    void validate() const;
};

struct TrainConfig {
    int epochs = 1000;
    double learning_rate = 1e-3;
    double lr_decay_factor = 0.5;
    int lr_decay_every = 1000;
    int batch_size = 0; ///< 0 means full batch
    std::uint64_t seed = 0;
    bool standardize = true; ///< fit input/output normalization from the data

    void validate() const;
};

struct Dataset {
    std::vector<Vector> inputs;
    std::vector<Vector> targets;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
};

/// Glorot-uniform weights from the seeded generator, zero biases, unit batch-norm state.
MlpParams mlp_init(const MlpSpec &spec, Rng &rng);

/// Inference pass: running batch-norm statistics, dropout disabled.
Vector mlp_forward(const MlpParams &params, const Vector &input);

/// Inference pass over a batch stored column-wise (input_dim × batch).
Matrix mlp_forward_batch(const MlpParams &params, const Matrix &inputs);

/// output_dim × input_dim Jacobian at `input`. Requires eval mode.
Matrix mlp_jacobian(const MlpParams &params, const Vector &input,
                    JacobianMethod method = JacobianMethod::Analytic);

/// Mean squared error over all samples and output entries, evaluated in eval mode.
double dataset_mse(const MlpParams &params, const Dataset &data);

/// Per-epoch record of the training objective (normalized units) and the learning rate used.
struct TrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> learning_rate;
};

MlpParams mlp_train(const MlpSpec &spec, const Dataset &data, const TrainConfig &cfg,
                    TrainLog *log = nullptr);

/// Gradients with the same layout as MlpParams' trainable tensors.
struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;
    std::vector<Vector> bn_scale;
    std::vector<Vector> bn_shift;
};

/**
 * One train-mode pass over a column-wise batch in normalized units.
 *
 * Returns the mean squared error and fills `grads`. Batch-norm uses batch
 * statistics; running statistics are updated only when `update_running` is
 * set. Dropout masks come from `dropout_rng` when it is non-null and the
 * spec's dropout rate is positive.
 */
double train_step_gradients(MlpParams &params, const Matrix &inputs, const Matrix &targets,
                            Gradients &grads, Rng *dropout_rng, bool update_running);

/// Adam with bias correction over a fixed list of tensors.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(MlpParams &params, const Gradients &grads, double learning_rate);
    long steps_taken() const { return t_; }

private:
    void update(Eigen::Ref<Eigen::ArrayXd> value, const Eigen::ArrayXd &grad, Eigen::ArrayXd &m,
                Eigen::ArrayXd &v, double lr_t);

    double beta1_, beta2_, epsilon_;
    long t_ = 0;
    std::vector<Eigen::ArrayXd> m_, v_;
};

void save_params(const MlpParams &params, std::ostream &out);
MlpParams load_params(std::istream &in);
void save_params_file(const MlpParams &params, const std::string &path);
MlpParams load_params_file(const std::string &path);

} // namespace ndkf::neural
