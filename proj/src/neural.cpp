#include "ndkf/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace ndkf::neural {

namespace {

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;
constexpr double kFiniteDiffStep = 1e-5;
constexpr double kMinStd = 1e-12;

std::string dims(Eigen::Index r, Eigen::Index c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

Vector column_std(const Matrix &data, const Vector &mean) {
    const auto n = static_cast<double>(data.cols());
    Vector sd = ((data.colwise() - mean).array().square().rowwise().sum() / n).sqrt().matrix();
    for (Eigen::Index i = 0; i < sd.size(); ++i) {
        if (!(sd(i) > kMinStd)) {
            sd(i) = 1.0;
        }
    }
    return sd;
}

Matrix stack_columns(const std::vector<Vector> &vs) {
    Matrix m(vs.front().size(), static_cast<Eigen::Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) {
        m.col(static_cast<Eigen::Index>(j)) = vs[j];
    }
    return m;
}

Vector bn_inference_gain(const BatchNorm &bn) {
    return bn.scale.cwiseQuotient((bn.running_var.array() + kBatchNormEps).sqrt().matrix());
}

void check_input(const MlpParams &params, Eigen::Index rows) {
    if (rows != params.spec.input_dim) {
        throw Error(ErrorKind::DimensionMismatch,
                    "network expects input dim " + std::to_string(params.spec.input_dim) + ", got " +
                        std::to_string(rows));
    }
}

} // namespace

void MlpSpec::validate() const {
    if (input_dim < 1 || output_dim < 1) {
        throw Error(ErrorKind::DimensionMismatch, "network input/output dims must be >= 1");
    }
    for (int w : hidden_layers) {
        if (w < 1) {
            throw Error(ErrorKind::DimensionMismatch, "hidden layer width must be >= 1");
        }
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw Error(ErrorKind::ConfigError, "dropout_rate must lie in [0, 1)");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw Error(ErrorKind::ConfigError, "learning_rate must be > 0");
    }
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
        throw Error(ErrorKind::ConfigError, "lr_decay_factor must lie in (0, 1]");
    }
    if (epochs < 1 || lr_decay_every < 1 || batch_size < 0) {
        throw Error(ErrorKind::ConfigError, "epochs and lr_decay_every must be >= 1, batch_size >= 0");
    }
}

void MlpParams::validate() const {
    spec.validate();
    const std::size_t n_hidden = spec.hidden_layers.size();
    if (layers.size() != n_hidden + 1) {
        throw Error(ErrorKind::DimensionMismatch, "layer count does not match spec");
    }
    if (norms.size() != (spec.use_batch_norm ? n_hidden : 0)) {
        throw Error(ErrorKind::DimensionMismatch, "batch-norm count does not match spec");
    }
    int fan_in = spec.input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const int fan_out = l < n_hidden ? spec.hidden_layers[l] : spec.output_dim;
        const auto &layer = layers[l];
        if (layer.weight.rows() != fan_out || layer.weight.cols() != fan_in || layer.bias.size() != fan_out) {
            throw Error(ErrorKind::DimensionMismatch,
                        "layer " + std::to_string(l) + " has shape " +
                            dims(layer.weight.rows(), layer.weight.cols()) + ", expected " +
                            dims(fan_out, fan_in));
        }
        if (l < norms.size()) {
            const auto &bn = norms[l];
            if (bn.running_mean.size() != fan_out || bn.running_var.size() != fan_out ||
                bn.scale.size() != fan_out || bn.shift.size() != fan_out) {
                throw Error(ErrorKind::DimensionMismatch, "batch-norm " + std::to_string(l) + " shape");
            }
            if ((bn.running_var.array() <= 0.0).any()) {
                throw Error(ErrorKind::DimensionMismatch, "batch-norm running variance must be > 0");
            }
        }
        fan_in = fan_out;
    }
    if (input_mean.size() != spec.input_dim || input_std.size() != spec.input_dim ||
        output_mean.size() != spec.output_dim || output_std.size() != spec.output_dim) {
        throw Error(ErrorKind::DimensionMismatch, "normalization vectors do not match spec dims");
    }
}

MlpParams mlp_init(const MlpSpec &spec, Rng &rng) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    int fan_in = spec.input_dim;
    const std::size_t n_hidden = spec.hidden_layers.size();
    for (std::size_t l = 0; l <= n_hidden; ++l) {
        const int fan_out = l < n_hidden ? spec.hidden_layers[l] : spec.output_dim;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) {
                layer.weight(r, c) = rng.uniform(-limit, limit);
            }
        }
        p.layers.push_back(std::move(layer));
        if (l < n_hidden && spec.use_batch_norm) {
            p.norms.push_back(BatchNorm{Vector::Zero(fan_out), Vector::Ones(fan_out), Vector::Ones(fan_out),
                                        Vector::Zero(fan_out)});
        }
        fan_in = fan_out;
    }
    p.input_mean = Vector::Zero(spec.input_dim);
    p.input_std = Vector::Ones(spec.input_dim);
    p.output_mean = Vector::Zero(spec.output_dim);
    p.output_std = Vector::Ones(spec.output_dim);
    p.mode = Mode::Eval;
    return p;
}

Matrix mlp_forward_batch(const MlpParams &params, const Matrix &inputs) {
    check_input(params, inputs.rows());
    Matrix a = (inputs.colwise() - params.input_mean).array().colwise() / params.input_std.array();
    const std::size_t n_hidden = params.spec.hidden_layers.size();
    for (std::size_t l = 0; l < n_hidden; ++l) {
        Matrix z = (params.layers[l].weight * a).colwise() + params.layers[l].bias;
        if (params.spec.use_batch_norm) {
            const auto &bn = params.norms[l];
            const Vector gain = bn_inference_gain(bn);
            z = ((z.colwise() - bn.running_mean).array().colwise() * gain.array()).matrix().colwise() +
                bn.shift;
        }
        a = z.array().tanh().matrix();
    }
    Matrix out = (params.layers.back().weight * a).colwise() + params.layers.back().bias;
    out = (out.array().colwise() * params.output_std.array()).matrix().colwise() + params.output_mean;
    return out;
}

Vector mlp_forward(const MlpParams &params, const Vector &input) {
    Matrix batch = input;
    return mlp_forward_batch(params, batch).col(0);
}

Matrix mlp_jacobian(const MlpParams &params, const Vector &input, JacobianMethod method) {
    check_input(params, input.size());
    if (params.mode != Mode::Eval) {
        throw Error(ErrorKind::InvalidStage, "Jacobian requires an eval-mode network");
    }
    if (method == JacobianMethod::FiniteDiff) {
        Matrix jac(params.spec.output_dim, params.spec.input_dim);
        for (Eigen::Index c = 0; c < input.size(); ++c) {
            Vector plus = input;
            Vector minus = input;
            plus(c) += kFiniteDiffStep;
            minus(c) -= kFiniteDiffStep;
            jac.col(c) = (mlp_forward(params, plus) - mlp_forward(params, minus)) / (2.0 * kFiniteDiffStep);
        }
        return jac;
    }

    // Chain rule, accumulated from the input side: J ← D_l · W_l · J.
    Vector a = (input - params.input_mean).cwiseQuotient(params.input_std);
    Matrix jac = params.input_std.cwiseInverse().asDiagonal();
    const std::size_t n_hidden = params.spec.hidden_layers.size();
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const auto &layer = params.layers[l];
        Vector z = layer.weight * a + layer.bias;
        jac = layer.weight * jac;
        if (params.spec.use_batch_norm) {
            const auto &bn = params.norms[l];
            const Vector gain = bn_inference_gain(bn);
            z = (z - bn.running_mean).cwiseProduct(gain) + bn.shift;
            jac = gain.asDiagonal() * jac;
        }
        a = z.array().tanh().matrix();
        const Vector slope = (1.0 - a.array().square()).matrix();
        jac = slope.asDiagonal() * jac;
    }
    jac = params.layers.back().weight * jac;
    return params.output_std.asDiagonal() * jac;
}

double dataset_mse(const MlpParams &params, const Dataset &data) {
    if (data.empty()) {
        throw Error(ErrorKind::EmptyDataset, "cannot score an empty dataset");
    }
    const Matrix pred = mlp_forward_batch(params, stack_columns(data.inputs));
    const Matrix target = stack_columns(data.targets);
    return (pred - target).array().square().mean();
}

double train_step_gradients(MlpParams &params, const Matrix &inputs, const Matrix &targets,
                            Gradients &grads, Rng *dropout_rng, bool update_running) {
    const std::size_t n_hidden = params.spec.hidden_layers.size();
    const bool use_bn = params.spec.use_batch_norm;
    const double drop = params.spec.dropout_rate;
    const bool use_dropout = dropout_rng != nullptr && drop > 0.0;
    const Eigen::Index batch = inputs.cols();
    const auto nb = static_cast<double>(batch);

    // Forward with caches.
    std::vector<Matrix> act_in(n_hidden + 1); // input to layer l
    std::vector<Matrix> normed(n_hidden);     // x̂ for batch-norm layers
    std::vector<Vector> inv_std(n_hidden);
    std::vector<Matrix> hidden(n_hidden);     // tanh output before dropout
    std::vector<Matrix> masks(n_hidden);

    act_in[0] = inputs;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const auto &layer = params.layers[l];
        Matrix u = (layer.weight * act_in[l]).colwise() + layer.bias;
        if (use_bn) {
            auto &bn = params.norms[l];
            const Vector mu = u.rowwise().mean();
            const Matrix centered = u.colwise() - mu;
            const Vector var = centered.array().square().rowwise().mean().matrix();
            inv_std[l] = (var.array() + kBatchNormEps).rsqrt().matrix();
            normed[l] = centered.array().colwise() * inv_std[l].array();
            u = (normed[l].array().colwise() * bn.scale.array()).matrix().colwise() + bn.shift;
            if (update_running) {
                const double unbiased = batch > 1 ? nb / (nb - 1.0) : 1.0;
                bn.running_mean = (1.0 - kBatchNormMomentum) * bn.running_mean + kBatchNormMomentum * mu;
                bn.running_var =
                    (1.0 - kBatchNormMomentum) * bn.running_var + kBatchNormMomentum * unbiased * var;
            }
        }
        hidden[l] = u.array().tanh().matrix();
        if (use_dropout) {
            masks[l].resize(hidden[l].rows(), batch);
            const double keep_scale = 1.0 / (1.0 - drop);
            for (Eigen::Index c = 0; c < batch; ++c) {
                for (Eigen::Index r = 0; r < hidden[l].rows(); ++r) {
                    masks[l](r, c) = dropout_rng->uniform() < drop ? 0.0 : keep_scale;
                }
            }
            act_in[l + 1] = hidden[l].cwiseProduct(masks[l]);
        } else {
            act_in[l + 1] = hidden[l];
        }
    }
    const auto &out_layer = params.layers.back();
    const Matrix out = (out_layer.weight * act_in[n_hidden]).colwise() + out_layer.bias;
    const Matrix diff = out - targets;
    const double loss = diff.array().square().mean();

    // Backward.
    grads.weight.assign(n_hidden + 1, Matrix());
    grads.bias.assign(n_hidden + 1, Vector());
    grads.bn_scale.assign(use_bn ? n_hidden : 0, Vector());
    grads.bn_shift.assign(use_bn ? n_hidden : 0, Vector());

    Matrix delta = diff * (2.0 / static_cast<double>(diff.size()));
    grads.weight[n_hidden] = delta * act_in[n_hidden].transpose();
    grads.bias[n_hidden] = delta.rowwise().sum();
    Matrix upstream = out_layer.weight.transpose() * delta;

    for (std::size_t li = n_hidden; li-- > 0;) {
        if (use_dropout) {
            upstream = upstream.cwiseProduct(masks[li]);
        }
        Matrix du = upstream.cwiseProduct((1.0 - hidden[li].array().square()).matrix());
        if (use_bn) {
            const auto &bn = params.norms[li];
            grads.bn_scale[li] = du.cwiseProduct(normed[li]).rowwise().sum();
            grads.bn_shift[li] = du.rowwise().sum();
            const Matrix dxhat = du.array().colwise() * bn.scale.array();
            const Vector sum_dxhat = dxhat.rowwise().sum();
            const Vector sum_dxhat_xhat = dxhat.cwiseProduct(normed[li]).rowwise().sum();
            Matrix dz = (nb * dxhat.array()).matrix();
            dz.colwise() -= sum_dxhat;
            dz -= (normed[li].array().colwise() * sum_dxhat_xhat.array()).matrix();
            du = (dz.array().colwise() * (inv_std[li].array() / nb)).matrix();
        }
        grads.weight[li] = du * act_in[li].transpose();
        grads.bias[li] = du.rowwise().sum();
        if (li > 0) {
            upstream = params.layers[li].weight.transpose() * du;
        }
    }
    return loss;
}

void Adam::update(Eigen::Ref<Eigen::ArrayXd> value, const Eigen::ArrayXd &grad, Eigen::ArrayXd &m,
                  Eigen::ArrayXd &v, double lr_t) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.square();
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    value -= lr_t * (m / bc1) / ((v / bc2).sqrt() + epsilon_);
}

void Adam::step(MlpParams &params, const Gradients &grads, double learning_rate) {
    // Flatten in a fixed order: per layer W, b; then per batch-norm scale, shift.
    std::vector<std::pair<double *, Eigen::Index>> slots;
    std::vector<const double *> grad_ptrs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        slots.emplace_back(params.layers[l].weight.data(), params.layers[l].weight.size());
        grad_ptrs.push_back(grads.weight[l].data());
        slots.emplace_back(params.layers[l].bias.data(), params.layers[l].bias.size());
        grad_ptrs.push_back(grads.bias[l].data());
    }
    for (std::size_t l = 0; l < params.norms.size(); ++l) {
        slots.emplace_back(params.norms[l].scale.data(), params.norms[l].scale.size());
        grad_ptrs.push_back(grads.bn_scale[l].data());
        slots.emplace_back(params.norms[l].shift.data(), params.norms[l].shift.size());
        grad_ptrs.push_back(grads.bn_shift[l].data());
    }
    if (m_.empty()) {
        for (const auto &[ptr, n] : slots) {
            m_.push_back(Eigen::ArrayXd::Zero(n));
            v_.push_back(Eigen::ArrayXd::Zero(n));
        }
    }
    ++t_;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        Eigen::Map<Eigen::ArrayXd> value(slots[i].first, slots[i].second);
        const Eigen::Map<const Eigen::ArrayXd> grad(grad_ptrs[i], slots[i].second);
        update(value, grad, m_[i], v_[i], learning_rate);
    }
}

MlpParams mlp_train(const MlpSpec &spec, const Dataset &data, const TrainConfig &cfg, TrainLog *log) {
    if (data.empty()) {
        throw Error(ErrorKind::EmptyDataset, "training requires at least one sample");
    }
    if (data.inputs.size() != data.targets.size()) {
        throw Error(ErrorKind::DimensionMismatch, "dataset inputs and targets differ in length");
    }
    spec.validate();
    cfg.validate();
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (data.inputs[j].size() != spec.input_dim || data.targets[j].size() != spec.output_dim) {
            throw Error(ErrorKind::DimensionMismatch, "sample " + std::to_string(j) + " does not match spec dims");
        }
    }

    Rng init_rng(derive_seed(cfg.seed, "nn-init"));
    Rng shuffle_rng(derive_seed(cfg.seed, "nn-shuffle"));
    Rng dropout_rng(derive_seed(cfg.seed, "nn-dropout"));

    MlpParams params = mlp_init(spec, init_rng);
    const Matrix raw_x = stack_columns(data.inputs);
    const Matrix raw_y = stack_columns(data.targets);
    if (cfg.standardize) {
        params.input_mean = raw_x.rowwise().mean();
        params.input_std = column_std(raw_x, params.input_mean);
        params.output_mean = raw_y.rowwise().mean();
        params.output_std = column_std(raw_y, params.output_mean);
    }
    const Matrix x = (raw_x.colwise() - params.input_mean).array().colwise() / params.input_std.array();
    const Matrix y = (raw_y.colwise() - params.output_mean).array().colwise() / params.output_std.array();

    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index batch = cfg.batch_size <= 0 ? n : std::min<Eigen::Index>(cfg.batch_size, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Adam adam;
    Gradients grads;
    params.mode = Mode::Train;
    Matrix bx, by;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
        if (batch < n) {
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[shuffle_rng.below(i + 1)]);
            }
        }
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index len = std::min(batch, n - start);
            if (batch == n) {
                epoch_loss += train_step_gradients(params, x, y, grads, &dropout_rng, true) * n;
            } else {
                bx.resize(x.rows(), len);
                by.resize(y.rows(), len);
                for (Eigen::Index c = 0; c < len; ++c) {
                    bx.col(c) = x.col(order[static_cast<std::size_t>(start + c)]);
                    by.col(c) = y.col(order[static_cast<std::size_t>(start + c)]);
                }
                epoch_loss += train_step_gradients(params, bx, by, grads, &dropout_rng, true) *
                              static_cast<double>(len);
            }
            adam.step(params, grads, lr);
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss)) {
            throw Error(ErrorKind::DivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch));
        }
        if (log != nullptr) {
            log->epoch_loss.push_back(epoch_loss);
            log->learning_rate.push_back(lr);
        }
    }
    params.mode = Mode::Eval;
    return params;
}

// ---------------------------------------------------------------------------
// Parameter files

namespace {

constexpr const char *kMagic = "NDKF-MLP v1";

void write_row(std::ostream &out, const double *values, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) {
            out << ' ';
        }
        out << values[i];
    }
    out << '\n';
}

void write_vector(std::ostream &out, const Vector &v) { write_row(out, v.data(), v.size()); }

[[noreturn]] void malformed(const std::string &what) { throw Error(ErrorKind::MalformedFile, what); }

class Reader {
public:
    explicit Reader(std::istream &in) : in_(in) {}

    std::string word(const char *context) {
        std::string w;
        if (!(in_ >> w)) {
            malformed(std::string("unexpected end of file reading ") + context);
        }
        return w;
    }

    void expect(const std::string &token) {
        const std::string w = word(token.c_str());
        if (w != token) {
            malformed("expected '" + token + "', found '" + w + "'");
        }
    }

    long integer(const char *context) {
        const std::string w = word(context);
        try {
            std::size_t used = 0;
            const long v = std::stol(w, &used);
            if (used != w.size()) {
                malformed(std::string("bad integer for ") + context);
            }
            return v;
        } catch (const std::logic_error &) {
            malformed(std::string("bad integer for ") + context + ": '" + w + "'");
        }
    }

    double real(const char *context) {
        const std::string w = word(context);
        char *end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size() || !std::isfinite(v)) {
            malformed(std::string("bad value for ") + context + ": '" + w + "'");
        }
        return v;
    }

    void fill(double *values, Eigen::Index n, const char *context) {
        for (Eigen::Index i = 0; i < n; ++i) {
            values[i] = real(context);
        }
    }

    Vector vector(Eigen::Index n, const char *context) {
        Vector v(n);
        fill(v.data(), n, context);
        return v;
    }

private:
    std::istream &in_;
};

} // namespace

void save_params(const MlpParams &params, std::ostream &out) {
    params.validate();
    const auto old_flags = out.flags();
    const auto old_precision = out.precision();
    out << std::setprecision(17);

    const auto &spec = params.spec;
    out << kMagic << '\n';
    out << "spec " << spec.input_dim << ' ' << spec.output_dim << ' ' << spec.hidden_layers.size();
    for (int w : spec.hidden_layers) {
        out << ' ' << w;
    }
    out << " tanh " << (spec.use_batch_norm ? 1 : 0) << ' ' << spec.dropout_rate << '\n';
    out << "norm input " << spec.input_dim << '\n';
    write_vector(out, params.input_mean);
    write_vector(out, params.input_std);
    out << "norm output " << spec.output_dim << '\n';
    write_vector(out, params.output_mean);
    write_vector(out, params.output_std);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto &layer = params.layers[l];
        out << "layer " << l << ' ' << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            const Vector row = layer.weight.row(r).transpose();
            write_vector(out, row);
        }
        write_vector(out, layer.bias);
        if (l < params.norms.size()) {
            const auto &bn = params.norms[l];
            out << "bn " << l << ' ' << bn.scale.size() << '\n';
            write_vector(out, bn.running_mean);
            write_vector(out, bn.running_var);
            write_vector(out, bn.scale);
            write_vector(out, bn.shift);
        }
    }
    out << "end\n";
    out.flags(old_flags);
    out.precision(old_precision);
}

MlpParams load_params(std::istream &in) {
    std::string header;
    if (!std::getline(in, header) || header != kMagic) {
        malformed("bad magic line");
    }
    Reader rd(in);
    MlpParams p;
    rd.expect("spec");
    p.spec.input_dim = static_cast<int>(rd.integer("input_dim"));
    p.spec.output_dim = static_cast<int>(rd.integer("output_dim"));
    const long n_hidden = rd.integer("hidden count");
    if (n_hidden < 0 || n_hidden > 1024) {
        malformed("implausible hidden layer count");
    }
    for (long i = 0; i < n_hidden; ++i) {
        p.spec.hidden_layers.push_back(static_cast<int>(rd.integer("hidden width")));
    }
    rd.expect("tanh");
    p.spec.use_batch_norm = rd.integer("batch_norm flag") != 0;
    p.spec.dropout_rate = rd.real("dropout");
    try {
        p.spec.validate();
    } catch (const Error &e) {
        malformed(e.what());
    }

    rd.expect("norm");
    rd.expect("input");
    if (rd.integer("input norm dim") != p.spec.input_dim) {
        malformed("input normalization dim mismatch");
    }
    p.input_mean = rd.vector(p.spec.input_dim, "input mean");
    p.input_std = rd.vector(p.spec.input_dim, "input std");
    rd.expect("norm");
    rd.expect("output");
    if (rd.integer("output norm dim") != p.spec.output_dim) {
        malformed("output normalization dim mismatch");
    }
    p.output_mean = rd.vector(p.spec.output_dim, "output mean");
    p.output_std = rd.vector(p.spec.output_dim, "output std");

    int fan_in = p.spec.input_dim;
    for (long l = 0; l <= n_hidden; ++l) {
        const int fan_out = l < n_hidden ? p.spec.hidden_layers[static_cast<std::size_t>(l)] : p.spec.output_dim;
        rd.expect("layer");
        if (rd.integer("layer index") != l || rd.integer("rows") != fan_out || rd.integer("cols") != fan_in) {
            malformed("layer " + std::to_string(l) + " header does not match spec");
        }
        DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) {
                layer.weight(r, c) = rd.real("weight");
            }
        }
        layer.bias = rd.vector(fan_out, "bias");
        p.layers.push_back(std::move(layer));
        if (p.spec.use_batch_norm && l < n_hidden) {
            rd.expect("bn");
            if (rd.integer("bn index") != l || rd.integer("bn dim") != fan_out) {
                malformed("bn " + std::to_string(l) + " header does not match spec");
            }
            BatchNorm bn;
            bn.running_mean = rd.vector(fan_out, "running mean");
            bn.running_var = rd.vector(fan_out, "running var");
            bn.scale = rd.vector(fan_out, "bn scale");
            bn.shift = rd.vector(fan_out, "bn shift");
            p.norms.push_back(std::move(bn));
        }
        fan_in = fan_out;
    }
    rd.expect("end");
    p.mode = Mode::Eval;
    try {
        p.validate();
    } catch (const Error &e) {
        malformed(e.what());
    }
    return p;
}

void save_params_file(const MlpParams &params, const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
    }
    save_params(params, out);
    if (!out) {
        throw Error(ErrorKind::IoError, "write failed for " + path);
    }
}

MlpParams load_params_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path);
    }
    return load_params(in);
}

} // namespace ndkf::neural
