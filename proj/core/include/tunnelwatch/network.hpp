#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tunnelwatch/matrix.hpp"
#include "tunnelwatch/model.hpp"
#include "tunnelwatch/random.hpp"

namespace tunnelwatch {

/// Layer widths of the detection network: 2 -> 64 -> 32 -> 1.
inline constexpr std::array<std::size_t, 4> kDnsClassifierShape = {2, 64, 32, 1};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
NetworkParams init_network(std::span<const std::size_t> widths, Rng& rng);

double network_logit(const NetworkParams& net, std::span<const double> x);
double network_score(const NetworkParams& net, std::span<const double> x);

/// Scores every row independently. Throws ShapeMismatch on width mismatch.
std::vector<double> network_forward(const NetworkParams& net, const Matrix& batch);

/// Same layout as NetworkParams: one weight and one bias vector per layer.
struct NetworkGradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

/// Weighted-mean binary cross-entropy over the batch, sum(w_i * l_i) / sum(w_i).
/// `sample_weights` may be empty (all ones). Fills `grad` when non-null.
double network_loss(const NetworkParams& net, const Matrix& x, std::span<const double> y,
                    std::span<const double> sample_weights, NetworkGradients* grad);

/// Network plus adaptive-moment optimizer state.
struct NetworkTrainer {
    NetworkParams net;
    NetworkGradients first_moment;
    NetworkGradients second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit NetworkTrainer(NetworkParams initial);
};

/// One optimizer step on the minibatch; returns the pre-update loss.
/// Throws Empty on an empty batch and NonFiniteLoss (state untouched) on divergence.
double nn_train_step(NetworkTrainer& trainer, const Matrix& x, std::span<const double> y,
                     std::span<const double> sample_weights, double learning_rate);

struct NetworkFitOptions {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    double threshold = 0.5;
    std::uint64_t seed = 42;
};

/// Minibatch training with early stopping on validation F1 (tunneling class),
/// validation loss breaking ties. Returns the best-scoring parameters.
NetworkParams fit_network(std::span<const std::size_t> widths, const Matrix& x, std::span<const Label> y,
                          const NetworkFitOptions& options, TrainingInfo& info);

/// Scores a batch of normalized rows through a network artifact (mlp or
/// dns_classifier_net). Throws ShapeMismatch, InvalidArgument for other kinds.
std::vector<double> nn_forward(const ModelArtifact& model, const Matrix& batch);

} // namespace tunnelwatch
