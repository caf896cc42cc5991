#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gradient_check.hpp"
#include "test_support.hpp"
#include "tunnelwatch/network.hpp"

using namespace tunnelwatch;

namespace {

Matrix random_batch(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform();
    }
    return m;
}

std::vector<double> random_targets(Rng& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) v = static_cast<double>(rng.below(2));
    return y;
}

double cosine(const NetworkGradients& a, const NetworkGradients& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (std::size_t i = 0; i < a.weights[l].size(); ++i) {
            dot += a.weights[l][i] * b.weights[l][i];
            na += a.weights[l][i] * a.weights[l][i];
            nb += b.weights[l][i] * b.weights[l][i];
        }
        for (std::size_t i = 0; i < a.bias[l].size(); ++i) {
            dot += a.bias[l][i] * b.bias[l][i];
            na += a.bias[l][i] * a.bias[l][i];
            nb += b.bias[l][i] * b.bias[l][i];
        }
    }
    return dot / std::sqrt(na * nb);
}

} // namespace

TEST(Network, InitShapesAndGlorotBounds) {
    Rng rng(1);
    const NetworkParams net = init_network(kDnsClassifierShape, rng);
    ASSERT_EQ(net.layers.size(), 3u);
    for (const auto& layer : net.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
        for (double w : layer.weights) {
            EXPECT_LE(std::fabs(w), limit);
        }
        for (double b : layer.bias) EXPECT_EQ(b, 0.0);
    }
}

TEST(Network, ZeroWeightsScoreHalf) {
    const ModelArtifact m = tw_test::constant_network(0.0);
    Rng rng(2);
    const Matrix batch = random_batch(rng, 17, 2);
    for (double s : nn_forward(m, batch)) EXPECT_EQ(s, 0.5);
}

TEST(Network, ForwardRowIndependence) {
    Rng rng(3);
    ModelArtifact m = tw_test::constant_network(0.0);
    m.model.params = init_network(kDnsClassifierShape, rng);
    const Matrix batch = random_batch(rng, 32, 2);
    const std::vector<double> scores = nn_forward(m, batch);

    std::vector<std::size_t> order(batch.rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    Matrix permuted;
    for (std::size_t i : order) permuted.append_row(batch.row(i));
    const std::vector<double> permuted_scores = nn_forward(m, permuted);
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(permuted_scores[i], scores[order[i]]);

    for (std::size_t r = 0; r < batch.rows(); ++r) {
        Matrix one;
        one.append_row(batch.row(r));
        EXPECT_EQ(nn_forward(m, one)[0], scores[r]);
        EXPECT_GT(scores[r], 0.0);
        EXPECT_LT(scores[r], 1.0);
    }
}

TEST(Network, BatchOfOneMatchesPredict) {
    Rng rng(4);
    ModelArtifact m = tw_test::constant_network(0.0);
    m.model.params = init_network(kDnsClassifierShape, rng);
    for (const char* name : {"example.com", "f00dfeed0badc0de.t.example", "a.b"}) {
        const FeatureVector v = extract_features(parse_domain(name), FeatureSet::Core2);
        Matrix one;
        one.append_row(normalize(v, m.normalization));
        EXPECT_EQ(nn_forward(m, one)[0], predict(m, v).score);
    }
}

TEST(Network, ForwardErrors) {
    const ModelArtifact m = tw_test::constant_network(0.0);
    EXPECT_TW_ERROR(nn_forward(m, Matrix(2, 3)), Errc::ShapeMismatch);
    ModelArtifact knn = m;
    knn.model.kind = ModelKind::Knn;
    knn.model.params = KnnParams{};
    EXPECT_TW_ERROR(nn_forward(knn, Matrix(1, 2)), Errc::InvalidArgument);
}

TEST(Network, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed);
        const NetworkParams net = init_network(kDnsClassifierShape, rng);
        const Matrix x = random_batch(rng, 8, 2);
        const std::vector<double> y = random_targets(rng, 8);
        const auto result = tw_test::check_gradients(net, x, y, {});
        EXPECT_EQ(result.parameters, 2u * 64 + 64 + 64 * 32 + 32 + 32 + 1);
        EXPECT_LE(result.max_relative_error, 1e-4) << "seed " << seed;
    }
}

TEST(Network, GradientCheckWithSampleWeights) {
    Rng rng(9);
    const std::array<std::size_t, 4> widths{7, 16, 8, 1};
    const NetworkParams net = init_network(widths, rng);
    const Matrix x = random_batch(rng, 8, 7);
    const std::vector<double> y = random_targets(rng, 8);
    std::vector<double> w(8);
    for (auto& v : w) v = rng.uniform(0.5, 3.0);
    EXPECT_LE(tw_test::check_gradients(net, x, y, w).max_relative_error, 1e-4);
}

TEST(Network, ZeroLearningRateLeavesParametersUnchanged) {
    Rng rng(5);
    const NetworkParams initial = init_network(kDnsClassifierShape, rng);
    NetworkTrainer trainer(initial);
    const Matrix x = random_batch(rng, 8, 2);
    const std::vector<double> y = random_targets(rng, 8);
    for (int i = 0; i < 3; ++i) {
        const double loss = nn_train_step(trainer, x, y, {}, 0.0);
        EXPECT_TRUE(std::isfinite(loss));
    }
    for (std::size_t l = 0; l < initial.layers.size(); ++l) {
        EXPECT_EQ(trainer.net.layers[l].weights, initial.layers[l].weights);
        EXPECT_EQ(trainer.net.layers[l].bias, initial.layers[l].bias);
    }
}

TEST(Network, TrainStepReducesLoss) {
    Rng rng(6);
    NetworkTrainer trainer(init_network(kDnsClassifierShape, rng));
    Matrix x(16, 2);
    std::vector<double> y(16);
    for (std::size_t r = 0; r < 16; ++r) {
        x(r, 0) = rng.uniform();
        x(r, 1) = rng.uniform();
        y[r] = x(r, 1) > 0.5 ? 1.0 : 0.0;
    }
    const double first = nn_train_step(trainer, x, y, {}, 1e-2);
    double last = first;
    for (int i = 0; i < 200; ++i) last = nn_train_step(trainer, x, y, {}, 1e-2);
    EXPECT_LT(last, first);
}

TEST(Network, DuplicateExampleEqualsDoubledWeight) {
    Rng rng(7);
    const NetworkParams net = init_network(kDnsClassifierShape, rng);
    const Matrix base = random_batch(rng, 4, 2);
    const std::vector<double> y{1.0, 0.0, 1.0, 0.0};

    Matrix dup = base;
    dup.append_row(base.row(0));
    std::vector<double> y_dup = y;
    y_dup.push_back(y[0]);

    NetworkGradients g_dup;
    NetworkGradients g_weighted;
    const double l_dup = network_loss(net, dup, y_dup, {}, &g_dup);
    const std::vector<double> w{2.0, 1.0, 1.0, 1.0};
    const double l_weighted = network_loss(net, base, y, w, &g_weighted);
    EXPECT_NEAR(l_dup, l_weighted, 1e-12);
    EXPECT_NEAR(cosine(g_dup, g_weighted), 1.0, 1e-12);
    for (std::size_t l = 0; l < g_dup.weights.size(); ++l) {
        for (std::size_t i = 0; i < g_dup.weights[l].size(); ++i) {
            EXPECT_NEAR(g_dup.weights[l][i], g_weighted.weights[l][i], 1e-12);
        }
    }
}

TEST(Network, TrainStepErrors) {
    Rng rng(8);
    NetworkTrainer trainer(init_network(kDnsClassifierShape, rng));
    EXPECT_TW_ERROR(nn_train_step(trainer, Matrix(0, 2), {}, {}, 1e-3), Errc::Empty);

    // A huge weight makes the logit overflow to infinity and the loss non-finite.
    NetworkParams broken = trainer.net;
    for (auto& w : broken.layers[0].weights) w = 1e308;
    for (auto& w : broken.layers[1].weights) w = 1e308;
    NetworkTrainer diverged(broken);
    Matrix x(1, 2, std::vector<double>{1.0, 1.0});
    const std::vector<double> y{0.0};
    const NetworkParams before = diverged.net;
    EXPECT_TW_ERROR(nn_train_step(diverged, x, y, {}, 1e-3), Errc::NonFiniteLoss);
    EXPECT_EQ(diverged.net.layers[0].weights, before.layers[0].weights);
    EXPECT_EQ(diverged.step, 0u);
}

TEST(Network, FitReturnsTrainingInfo) {
    Rng rng(10);
    Matrix x;
    std::vector<Label> y;
    for (int i = 0; i < 400; ++i) {
        const double a = rng.uniform();
        const double b = rng.uniform();
        x.append_row(std::vector<double>{a, b});
        y.push_back(a + b > 1.0 ? Label::Tunnel : Label::Normal);
    }
    NetworkFitOptions options;
    options.max_epochs = 200;
    options.learning_rate = 1e-2;
    options.patience = 5;
    TrainingInfo info;
    const NetworkParams net = fit_network(kDnsClassifierShape, x, y, options, info);
    EXPECT_GE(info.epochs, 1u);
    EXPECT_LE(info.epochs, 200u);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        correct += make_prediction(network_score(net, x.row(r)), 0.5).label == y[r];
    }
    EXPECT_GE(static_cast<double>(correct) / 400.0, 0.9);
}
