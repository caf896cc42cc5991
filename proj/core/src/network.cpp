#include "tunnelwatch/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Binary cross-entropy of sigmoid(z) against y, computed from the logit.
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

NetworkGradients zeros_like(const NetworkParams& net) {
    NetworkGradients g;
    for (const auto& layer : net.layers) {
        g.weights.emplace_back(layer.weights.size(), 0.0);
        g.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return g;
}

// Forward pass keeping every layer's pre-activation for backprop.
void forward_trace(const NetworkParams& net, std::span<const double> x, std::vector<std::vector<double>>& pre,
                   std::vector<std::vector<double>>& act) {
    const std::size_t n_layers = net.layers.size();
    act.resize(n_layers + 1);
    pre.resize(n_layers);
    act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = net.layers[l];
        auto& z = pre[l];
        z.assign(layer.bias.begin(), layer.bias.end());
        const auto& in = act[l];
        for (std::size_t i = 0; i < layer.inputs; ++i) {
            const double a = in[i];
            if (a == 0.0) continue;
            const double* w = layer.weights.data() + i * layer.outputs;
            for (std::size_t o = 0; o < layer.outputs; ++o) z[o] += a * w[o];
        }
        auto& out = act[l + 1];
        out = z;
        if (l + 1 < n_layers) {
            for (double& v : out) v = std::max(v, 0.0);
        }
    }
}

void check_width(const NetworkParams& net, std::size_t width) {
    if (net.layers.empty()) throw Error(Errc::ShapeMismatch, "network has no layers");
    if (width != net.layers.front().inputs) {
        throw Error(Errc::ShapeMismatch, "batch width " + std::to_string(width) + " but network expects " +
                                             std::to_string(net.layers.front().inputs));
    }
}

} // namespace

NetworkParams init_network(std::span<const std::size_t> widths, Rng& rng) {
    if (widths.size() < 2) throw Error(Errc::InvalidArgument, "network needs at least an input and an output width");
    NetworkParams net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        layer.inputs = widths[l];
        layer.outputs = widths[l + 1];
        if (layer.inputs == 0 || layer.outputs == 0) throw Error(Errc::InvalidArgument, "zero-width layer");
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
        layer.weights.resize(layer.inputs * layer.outputs);
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        layer.bias.assign(layer.outputs, 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

double network_logit(const NetworkParams& net, std::span<const double> x) {
    check_width(net, x.size());
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    forward_trace(net, x, pre, act);
    return pre.back().front();
}

double network_score(const NetworkParams& net, std::span<const double> x) { return sigmoid(network_logit(net, x)); }

std::vector<double> network_forward(const NetworkParams& net, const Matrix& batch) {
    check_width(net, batch.cols());
    std::vector<double> scores(batch.rows());
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        forward_trace(net, batch.row(r), pre, act);
        scores[r] = sigmoid(pre.back().front());
    }
    return scores;
}

double network_loss(const NetworkParams& net, const Matrix& x, std::span<const double> y,
                    std::span<const double> sample_weights, NetworkGradients* grad) {
    check_width(net, x.cols());
    if (x.rows() == 0) throw Error(Errc::Empty, "empty minibatch");
    if (y.size() != x.rows() || (!sample_weights.empty() && sample_weights.size() != x.rows())) {
        throw Error(Errc::LengthMismatch, "targets/weights do not match batch rows");
    }
    double weight_total = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) weight_total += sample_weights.empty() ? 1.0 : sample_weights[r];
    if (!(weight_total > 0.0)) throw Error(Errc::InvalidArgument, "sample weights must sum to a positive value");

    if (grad) *grad = zeros_like(net);
    const std::size_t n_layers = net.layers.size();
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    std::vector<double> delta;
    std::vector<double> next_delta;
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double w = (sample_weights.empty() ? 1.0 : sample_weights[r]) / weight_total;
        forward_trace(net, x.row(r), pre, act);
        const double z = pre.back().front();
        loss += w * bce_from_logit(z, y[r]);
        if (!grad) continue;

        delta.assign(1, w * (sigmoid(z) - y[r]));
        for (std::size_t l = n_layers; l-- > 0;) {
            const DenseLayer& layer = net.layers[l];
            const auto& in = act[l];
            auto& gw = grad->weights[l];
            auto& gb = grad->bias[l];
            for (std::size_t o = 0; o < layer.outputs; ++o) gb[o] += delta[o];
            for (std::size_t i = 0; i < layer.inputs; ++i) {
                const double a = in[i];
                if (a == 0.0) continue;
                double* g = gw.data() + i * layer.outputs;
                for (std::size_t o = 0; o < layer.outputs; ++o) g[o] += a * delta[o];
            }
            if (l == 0) break;
            next_delta.assign(layer.inputs, 0.0);
            const auto& z_prev = pre[l - 1];
            for (std::size_t i = 0; i < layer.inputs; ++i) {
                if (z_prev[i] <= 0.0) continue; // ReLU gate
                const double* wrow = layer.weights.data() + i * layer.outputs;
                double s = 0.0;
                for (std::size_t o = 0; o < layer.outputs; ++o) s += wrow[o] * delta[o];
                next_delta[i] = s;
            }
            delta.swap(next_delta);
        }
    }
    return loss;
}

NetworkTrainer::NetworkTrainer(NetworkParams initial)
    : net(std::move(initial)), first_moment(zeros_like(net)), second_moment(zeros_like(net)) {}

double nn_train_step(NetworkTrainer& trainer, const Matrix& x, std::span<const double> y,
                     std::span<const double> sample_weights, double learning_rate) {
    NetworkGradients grad;
    const double loss = network_loss(trainer.net, x, y, sample_weights, &grad);
    if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "loss diverged");

    ++trainer.step;
    const double t = static_cast<double>(trainer.step);
    const double correction1 = 1.0 - std::pow(trainer.beta1, t);
    const double correction2 = 1.0 - std::pow(trainer.beta2, t);
    auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = trainer.beta1 * m[i] + (1.0 - trainer.beta1) * g[i];
            v[i] = trainer.beta2 * v[i] + (1.0 - trainer.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            param[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + trainer.epsilon);
        }
    };
    for (std::size_t l = 0; l < trainer.net.layers.size(); ++l) {
        auto& layer = trainer.net.layers[l];
        update(layer.weights, grad.weights[l], trainer.first_moment.weights[l], trainer.second_moment.weights[l]);
        update(layer.bias, grad.bias[l], trainer.first_moment.bias[l], trainer.second_moment.bias[l]);
    }
    return loss;
}

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = x.row(idx[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

double positive_f1(std::span<const double> scores, std::span<const double> truth, double threshold) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = truth[i] == 1.0;
        tp += predicted && actual;
        fp += predicted && !actual;
        fn += !predicted && actual;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
}

} // namespace

NetworkParams fit_network(std::span<const std::size_t> widths, const Matrix& x, std::span<const Label> y,
                          const NetworkFitOptions& options, TrainingInfo& info) {
    if (x.rows() != y.size()) throw Error(Errc::LengthMismatch, "feature rows and labels differ in length");
    Rng rng(options.seed);
    NetworkTrainer trainer(init_network(widths, rng));

    // Hold out ~10% per class for early stopping when there is enough data;
    // tiny sets validate on the training rows themselves.
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[to_int(y[i])].push_back(i);
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> val_idx;
    if (x.rows() >= 50 && by_class[0].size() >= 5 && by_class[1].size() >= 5) {
        for (auto& idx : by_class) {
            rng.shuffle(std::span<std::size_t>(idx));
            const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(idx.size())));
            val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
            fit_idx.insert(fit_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
        }
        std::sort(fit_idx.begin(), fit_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    } else {
        fit_idx.resize(x.rows());
        std::iota(fit_idx.begin(), fit_idx.end(), 0);
        val_idx = fit_idx;
    }
    const Matrix val_x = gather_rows(x, val_idx);
    std::vector<double> val_y;
    for (std::size_t i : val_idx) val_y.push_back(static_cast<double>(to_int(y[i])));

    NetworkParams best = trainer.net;
    double best_f1 = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    info = {};
    info.converged = false;

    std::vector<double> batch_y;
    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(fit_idx));
        for (std::size_t start = 0; start < fit_idx.size(); start += options.batch_size) {
            const std::size_t end = std::min(fit_idx.size(), start + options.batch_size);
            const std::span<const std::size_t> rows(fit_idx.data() + start, end - start);
            const Matrix batch = gather_rows(x, rows);
            batch_y.clear();
            for (std::size_t i : rows) batch_y.push_back(static_cast<double>(to_int(y[i])));
            nn_train_step(trainer, batch, batch_y, {}, options.learning_rate);
        }
        info.epochs = epoch + 1;

        const auto scores = network_forward(trainer.net, val_x);
        const double f1 = positive_f1(scores, val_y, options.threshold);
        const double loss = network_loss(trainer.net, val_x, val_y, {}, nullptr);
        if (f1 > best_f1 || (f1 == best_f1 && loss < best_loss - 1e-4)) {
            best_f1 = f1;
            best_loss = loss;
            best = trainer.net;
            stale = 0;
        } else if (++stale >= options.patience) {
            info.converged = true;
            break;
        }
    }
    return best;
}

std::vector<double> nn_forward(const ModelArtifact& model, const Matrix& batch) {
    const auto* net = std::get_if<NetworkParams>(&model.model.params);
    if (!net) throw Error(Errc::InvalidArgument, "nn_forward needs a network model");
    return network_forward(*net, batch);
}

} // namespace tunnelwatch
