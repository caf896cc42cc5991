#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tunnelwatch/dataset.hpp"
#include "tunnelwatch/features.hpp"
#include "tunnelwatch/matrix.hpp"

namespace tunnelwatch {

enum class ModelKind {
    GaussianNb,
    MultinomialNb,
    BernoulliNb,
    Knn,
    DecisionTree,
    RandomForest,
    LinearSvm,
    QuadraticSvm,
    Mlp,
    DnsClassifierNet,
    Ensemble,
};

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name); // throws UnknownModelKind

/// The ten standalone classifiers (everything except Ensemble).
const std::vector<ModelKind>& base_model_kinds();

/// Training knobs for every kind; each kind reads only its own fields.
struct Hyperparams {
    // knn
    std::size_t k = 5;
    // decision_tree / random_forest
    std::size_t max_depth = 8;
    std::size_t min_samples_split = 2;
    std::size_t n_trees = 50;
    bool bootstrap = true;
    std::size_t features_per_split = 0; // 0: ceil(sqrt(n_features))
    // linear_svm / quadratic_svm
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 20;
    // mlp
    std::vector<std::size_t> mlp_hidden = {16};
    double mlp_learning_rate = 1e-2;
    std::size_t mlp_epochs = 200;
    // dns_classifier_net (batch_size and patience are shared with mlp)
    double net_learning_rate = 1e-3;
    std::size_t net_max_epochs = 100;
    std::size_t batch_size = 64;
    std::size_t patience = 10;
    // naive bayes
    double nb_alpha = 1.0;
    double var_smoothing = 1e-9;
    std::size_t nb_bins = 16;
    // ensemble
    std::vector<ModelKind> ensemble_members = {ModelKind::GaussianNb, ModelKind::RandomForest, ModelKind::Knn,
                                               ModelKind::QuadraticSvm, ModelKind::DnsClassifierNet};
    std::vector<double> ensemble_weights; // empty: unweighted majority

    double threshold = 0.5;
    std::uint64_t rng_seed = 42;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Throws InvalidArgument when a count is zero, a rate is non-positive or the
/// threshold is outside (0,1).
void validate(const Hyperparams& hp);

/// Sets a numeric hyperparameter by name (used by grid/random search).
/// Integer-valued names are rounded. Throws InvalidArgument for unknown names.
void set_hyperparam(Hyperparams& hp, std::string_view name, double value);
std::vector<std::string_view> hyperparam_names();

struct GaussianNbParams {
    std::array<double, 2> priors{};
    std::array<std::vector<double>, 2> means;
    std::array<std::vector<double>, 2> variances;
    double variance_floor = 0.0;
};

/// Multinomial and Bernoulli NB over equal-width bins of each feature.
/// `prob[c]` has n_features * bins slots: for multinomial each row sums to 1,
/// for bernoulli each slot is the smoothed occupancy probability.
struct BinnedNbParams {
    std::size_t bins = 16;
    std::vector<double> bin_lo;
    std::vector<double> bin_hi;
    std::array<double, 2> priors{};
    std::array<std::vector<double>, 2> prob;
};

struct KnnParams {
    Matrix points;
    std::vector<Label> labels;
};

struct TreeNode {
    int feature = -1; // -1: leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0; // fraction of class 1 at this node

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

struct ForestParams {
    std::vector<TreeParams> trees;
};

struct LinearParams {
    bool quadratic = false;
    std::vector<double> weights;
    double bias = 0.0;
};

/// Fully connected layer, weights stored inputs x outputs row-major.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// ReLU hidden layers, sigmoid output unit.
struct NetworkParams {
    std::vector<DenseLayer> layers;
};

struct TrainedModel;

struct EnsembleParams {
    std::vector<TrainedModel> members;
    std::vector<double> weights;
};

using ModelParams = std::variant<GaussianNbParams, BinnedNbParams, KnnParams, TreeParams, ForestParams, LinearParams,
                                 NetworkParams, EnsembleParams>;

struct TrainingInfo {
    bool converged = true;
    std::size_t epochs = 0;
};

/// A fitted decision function over normalized feature rows.
struct TrainedModel {
    ModelKind kind = ModelKind::GaussianNb;
    Hyperparams hyperparams;
    ModelParams params;
    TrainingInfo info;

    /// Probability-like score in [0,1] for one normalized row.
    double score(std::span<const double> x) const;
    std::size_t input_width() const;
};

struct Prediction {
    double score = 0.0;
    Label label = Label::Normal;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// score >= threshold is tunneling.
constexpr Prediction make_prediction(double score, double threshold) noexcept {
    return {score, score >= threshold ? Label::Tunnel : Label::Normal};
}

struct ModelArtifact {
    static constexpr int kFormatVersion = 1;

    FeatureSet feature_set = FeatureSet::Core2;
    NormalizationStats normalization;
    TrainedModel model;

    ModelKind kind() const noexcept { return model.kind; }
    double threshold() const noexcept { return model.hyperparams.threshold; }
};

// -- fitting on normalized matrices ------------------------------------------

GaussianNbParams fit_gaussian_nb(const Matrix& x, std::span<const Label> y, double var_smoothing);
/// Posterior over {normal, tunnel}; the two entries sum to 1.
std::array<double, 2> gaussian_nb_posteriors(const GaussianNbParams& p, std::span<const double> x);

BinnedNbParams fit_binned_nb(const Matrix& x, std::span<const Label> y, std::size_t bins, double alpha, bool bernoulli);
std::array<double, 2> binned_nb_posteriors(const BinnedNbParams& p, std::span<const double> x, bool bernoulli);
std::size_t bin_index(const BinnedNbParams& p, std::size_t feature, double value);

double knn_score(const KnnParams& p, std::size_t k, std::span<const double> x);

/// CART with Gini impurity. `sample` lists training rows (repeats allowed);
/// `features_per_split` of 0 examines every feature.
TreeParams fit_tree(const Matrix& x, std::span<const Label> y, std::span<const std::size_t> sample, std::size_t max_depth,
                    std::size_t min_samples_split, std::size_t features_per_split, std::uint64_t seed);
double tree_score(const TreeParams& tree, std::span<const double> x);

ForestParams fit_forest(const Matrix& x, std::span<const Label> y, const Hyperparams& hp);

/// [x, x_i^2, x_i*x_j for i<j]; for two features: [x1, x2, x1^2, x2^2, x1*x2].
std::vector<double> quadratic_expand(std::span<const double> x);
LinearParams fit_hinge_svm(const Matrix& x, std::span<const Label> y, double lambda, std::size_t epochs,
                           std::uint64_t seed, bool quadratic);
double svm_decision(const LinearParams& p, std::span<const double> x);

/// Dispatches to the kind-specific fitter. Rows of `x` are normalized features.
/// Throws SingleClass, DegenerateFeatures, InvalidArgument, LengthMismatch.
TrainedModel fit_model(ModelKind kind, const Matrix& x, std::span<const Label> y, const Hyperparams& hp);

// -- artifact level ----------------------------------------------------------

/// Extracts features, fits normalization on `train_set` only, then fits.
ModelArtifact train(ModelKind kind, const Dataset& train_set, FeatureSet features, const Hyperparams& hp);
ModelArtifact train_on_features(ModelKind kind, std::span<const FeatureVector> features, std::span<const Label> labels,
                                const Hyperparams& hp);

/// Throws FeatureSetMismatch.
Prediction predict(const ModelArtifact& model, const FeatureVector& v);
/// Raw (unnormalized) feature values in canonical order.
Prediction predict_raw(const ModelArtifact& model, std::span<const double> raw);

/// Majority (or weighted) vote of member labels; ties go to tunneling.
/// Throws EmptyEnsemble, FeatureSetMismatch, WeightMismatch.
Prediction ensemble_predict(std::span<const ModelArtifact> members, const FeatureVector& v,
                            std::optional<std::span<const double>> weights = std::nullopt);

} // namespace tunnelwatch
