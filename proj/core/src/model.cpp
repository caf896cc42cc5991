#include "tunnelwatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tunnelwatch/error.hpp"
#include "tunnelwatch/network.hpp"

namespace tunnelwatch {

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 11> kKindNames = {{
    {ModelKind::GaussianNb, "gaussian_nb"},
    {ModelKind::MultinomialNb, "multinomial_nb"},
    {ModelKind::BernoulliNb, "bernoulli_nb"},
    {ModelKind::Knn, "knn"},
    {ModelKind::DecisionTree, "decision_tree"},
    {ModelKind::RandomForest, "random_forest"},
    {ModelKind::LinearSvm, "linear_svm"},
    {ModelKind::QuadraticSvm, "quadratic_svm"},
    {ModelKind::Mlp, "mlp"},
    {ModelKind::DnsClassifierNet, "dns_classifier_net"},
    {ModelKind::Ensemble, "ensemble"},
}};

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::size_t as_count(std::string_view name, double value) {
    if (!(value >= 1.0) || !std::isfinite(value)) {
        throw Error(Errc::InvalidArgument, std::string(name) + " must be a count >= 1");
    }
    return static_cast<std::size_t>(std::llround(value));
}

} // namespace

std::string_view to_string(ModelKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw Error(Errc::UnknownModelKind, "unknown model kind '" + std::string(name) + "'");
}

const std::vector<ModelKind>& base_model_kinds() {
    static const std::vector<ModelKind> kinds = {
        ModelKind::GaussianNb,   ModelKind::MultinomialNb, ModelKind::BernoulliNb,  ModelKind::Knn,
        ModelKind::DecisionTree, ModelKind::RandomForest,  ModelKind::LinearSvm,    ModelKind::QuadraticSvm,
        ModelKind::Mlp,          ModelKind::DnsClassifierNet,
    };
    return kinds;
}

void validate(const Hyperparams& hp) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(Errc::InvalidArgument, what);
    };
    require(hp.k >= 1, "k must be >= 1");
    require(hp.max_depth >= 1, "max_depth must be >= 1");
    require(hp.min_samples_split >= 1, "min_samples_split must be >= 1");
    require(hp.n_trees >= 1, "n_trees must be >= 1");
    require(hp.svm_lambda > 0.0, "svm lambda must be > 0");
    require(hp.svm_epochs >= 1, "svm epochs must be >= 1");
    require(std::all_of(hp.mlp_hidden.begin(), hp.mlp_hidden.end(), [](std::size_t h) { return h >= 1; }),
            "mlp hidden sizes must be >= 1");
    require(hp.mlp_learning_rate > 0.0, "mlp learning rate must be > 0");
    require(hp.mlp_epochs >= 1, "mlp epochs must be >= 1");
    require(hp.net_learning_rate > 0.0, "network learning rate must be > 0");
    require(hp.net_max_epochs >= 1, "network max epochs must be >= 1");
    require(hp.batch_size >= 1, "batch size must be >= 1");
    require(hp.patience >= 1, "patience must be >= 1");
    require(hp.nb_alpha > 0.0, "nb alpha must be > 0");
    require(hp.var_smoothing > 0.0, "var_smoothing must be > 0");
    require(hp.nb_bins >= 1, "nb bins must be >= 1");
    require(hp.threshold > 0.0 && hp.threshold < 1.0, "threshold must lie in (0,1)");
    require(!hp.ensemble_members.empty(), "ensemble needs members");
    require(std::find(hp.ensemble_members.begin(), hp.ensemble_members.end(), ModelKind::Ensemble) ==
                hp.ensemble_members.end(),
            "ensembles cannot nest");
    require(hp.ensemble_weights.empty() || hp.ensemble_weights.size() == hp.ensemble_members.size(),
            "ensemble weights must match members");
    require(std::all_of(hp.ensemble_weights.begin(), hp.ensemble_weights.end(), [](double w) { return w > 0.0; }),
            "ensemble weights must be positive");
}

std::vector<std::string_view> hyperparam_names() {
    return {"k",         "max_depth",      "min_samples_split", "n_trees",    "features_per_split",
            "lambda",    "svm_epochs",     "hidden",            "mlp_learning_rate", "mlp_epochs",
            "learning_rate", "max_epochs", "batch_size",        "patience",   "alpha",
            "var_smoothing", "bins",       "threshold"};
}

void set_hyperparam(Hyperparams& hp, std::string_view name, double value) {
    if (name == "k") hp.k = as_count(name, value);
    else if (name == "max_depth") hp.max_depth = as_count(name, value);
    else if (name == "min_samples_split") hp.min_samples_split = as_count(name, value);
    else if (name == "n_trees") hp.n_trees = as_count(name, value);
    else if (name == "features_per_split") hp.features_per_split = as_count(name, value);
    else if (name == "lambda") hp.svm_lambda = value;
    else if (name == "svm_epochs") hp.svm_epochs = as_count(name, value);
    else if (name == "hidden") hp.mlp_hidden = {as_count(name, value)};
    else if (name == "mlp_learning_rate") hp.mlp_learning_rate = value;
    else if (name == "mlp_epochs") hp.mlp_epochs = as_count(name, value);
    else if (name == "learning_rate") hp.net_learning_rate = value;
    else if (name == "max_epochs") hp.net_max_epochs = as_count(name, value);
    else if (name == "batch_size") hp.batch_size = as_count(name, value);
    else if (name == "patience") hp.patience = as_count(name, value);
    else if (name == "alpha") hp.nb_alpha = value;
    else if (name == "var_smoothing") hp.var_smoothing = value;
    else if (name == "bins") hp.nb_bins = as_count(name, value);
    else if (name == "threshold") hp.threshold = value;
    else throw Error(Errc::InvalidArgument, "unknown hyperparameter '" + std::string(name) + "'");
}

std::size_t TrainedModel::input_width() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GaussianNbParams>) return p.means[0].size();
            else if constexpr (std::is_same_v<P, BinnedNbParams>) return p.bin_lo.size();
            else if constexpr (std::is_same_v<P, KnnParams>) return p.points.cols();
            else if constexpr (std::is_same_v<P, NetworkParams>) return p.layers.empty() ? 0 : p.layers.front().inputs;
            else if constexpr (std::is_same_v<P, EnsembleParams>) return p.members.empty() ? 0 : p.members.front().input_width();
            else if constexpr (std::is_same_v<P, LinearParams>) {
                // invert d + d + d(d-1)/2 for the quadratic map
                if (!p.quadratic) return p.weights.size();
                std::size_t d = 0;
                while (d + d + d * (d - 1) / 2 < p.weights.size()) ++d;
                return d;
            } else {
                // Trees do not record their width.
                return 0;
            }
        },
        params);
}

double TrainedModel::score(std::span<const double> x) const {
    switch (kind) {
        case ModelKind::GaussianNb: return gaussian_nb_posteriors(std::get<GaussianNbParams>(params), x)[1];
        case ModelKind::MultinomialNb: return binned_nb_posteriors(std::get<BinnedNbParams>(params), x, false)[1];
        case ModelKind::BernoulliNb: return binned_nb_posteriors(std::get<BinnedNbParams>(params), x, true)[1];
        case ModelKind::Knn: return knn_score(std::get<KnnParams>(params), hyperparams.k, x);
        case ModelKind::DecisionTree: return tree_score(std::get<TreeParams>(params), x);
        case ModelKind::RandomForest: {
            const auto& forest = std::get<ForestParams>(params);
            double total = 0.0;
            for (const auto& tree : forest.trees) total += tree_score(tree, x);
            return total / static_cast<double>(forest.trees.size());
        }
        case ModelKind::LinearSvm:
        case ModelKind::QuadraticSvm: return logistic(svm_decision(std::get<LinearParams>(params), x));
        case ModelKind::Mlp:
        case ModelKind::DnsClassifierNet: return network_score(std::get<NetworkParams>(params), x);
        case ModelKind::Ensemble: {
            // Weighted fraction of members voting tunneling.
            const auto& e = std::get<EnsembleParams>(params);
            double votes = 0.0;
            double total = 0.0;
            for (std::size_t i = 0; i < e.members.size(); ++i) {
                const auto& m = e.members[i];
                const double w = e.weights.empty() ? 1.0 : e.weights[i];
                votes += w * static_cast<double>(m.score(x) >= m.hyperparams.threshold);
                total += w;
            }
            return votes / total;
        }
    }
    throw Error(Errc::UnknownModelKind, "unhandled model kind");
}

TrainedModel fit_model(ModelKind kind, const Matrix& x, std::span<const Label> y, const Hyperparams& hp) {
    validate(hp);
    if (x.rows() != y.size()) throw Error(Errc::LengthMismatch, "feature rows and labels differ in length");
    if (x.rows() == 0) throw Error(Errc::Empty, "no training rows");
    if (std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::Normal; }) ||
        std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::Tunnel; })) {
        throw Error(Errc::SingleClass, "training data must contain both classes");
    }
    bool varied = false;
    for (std::size_t r = 1; r < x.rows() && !varied; ++r) {
        varied = !std::equal(x.row(r).begin(), x.row(r).end(), x.row(0).begin());
    }
    if (!varied) throw Error(Errc::DegenerateFeatures, "all feature vectors are identical");

    TrainedModel model;
    model.kind = kind;
    model.hyperparams = hp;
    switch (kind) {
        case ModelKind::GaussianNb: model.params = fit_gaussian_nb(x, y, hp.var_smoothing); break;
        case ModelKind::MultinomialNb: model.params = fit_binned_nb(x, y, hp.nb_bins, hp.nb_alpha, false); break;
        case ModelKind::BernoulliNb: model.params = fit_binned_nb(x, y, hp.nb_bins, hp.nb_alpha, true); break;
        case ModelKind::Knn: model.params = KnnParams{x, std::vector<Label>(y.begin(), y.end())}; break;
        case ModelKind::DecisionTree: {
            std::vector<std::size_t> all(x.rows());
            std::iota(all.begin(), all.end(), 0);
            model.params = fit_tree(x, y, all, hp.max_depth, hp.min_samples_split, 0, hp.rng_seed);
            break;
        }
        case ModelKind::RandomForest: model.params = fit_forest(x, y, hp); break;
        case ModelKind::LinearSvm:
        case ModelKind::QuadraticSvm:
            model.params =
                fit_hinge_svm(x, y, hp.svm_lambda, hp.svm_epochs, hp.rng_seed, kind == ModelKind::QuadraticSvm);
            model.info.epochs = hp.svm_epochs;
            break;
        case ModelKind::Mlp:
        case ModelKind::DnsClassifierNet: {
            std::vector<std::size_t> widths;
            NetworkFitOptions options;
            options.batch_size = hp.batch_size;
            options.patience = hp.patience;
            options.threshold = hp.threshold;
            options.seed = hp.rng_seed;
            if (kind == ModelKind::DnsClassifierNet) {
                widths = {x.cols(), kDnsClassifierShape[1], kDnsClassifierShape[2], 1};
                options.learning_rate = hp.net_learning_rate;
                options.max_epochs = hp.net_max_epochs;
            } else {
                widths.push_back(x.cols());
                widths.insert(widths.end(), hp.mlp_hidden.begin(), hp.mlp_hidden.end());
                widths.push_back(1);
                options.learning_rate = hp.mlp_learning_rate;
                options.max_epochs = hp.mlp_epochs;
            }
            model.params = fit_network(widths, x, y, options, model.info);
            break;
        }
        case ModelKind::Ensemble: {
            EnsembleParams e;
            e.weights = hp.ensemble_weights;
            for (std::size_t i = 0; i < hp.ensemble_members.size(); ++i) {
                Hyperparams member_hp = hp;
                member_hp.rng_seed = derive_seed(hp.rng_seed, i);
                e.members.push_back(fit_model(hp.ensemble_members[i], x, y, member_hp));
                model.info.converged = model.info.converged && e.members.back().info.converged;
            }
            model.params = std::move(e);
            break;
        }
    }
    return model;
}

ModelArtifact train_on_features(ModelKind kind, std::span<const FeatureVector> features, std::span<const Label> labels,
                                const Hyperparams& hp) {
    if (features.size() != labels.size()) throw Error(Errc::LengthMismatch, "features and labels differ in length");
    if (features.empty()) throw Error(Errc::Empty, "no training examples");
    ModelArtifact artifact;
    artifact.feature_set = features.front().feature_set;
    artifact.normalization = fit_normalization(features);
    Matrix x;
    for (const auto& v : features) x.append_row(normalize(v, artifact.normalization));
    artifact.model = fit_model(kind, x, labels, hp);
    return artifact;
}

ModelArtifact train(ModelKind kind, const Dataset& train_set, FeatureSet features, const Hyperparams& hp) {
    if (train_set.empty()) throw Error(Errc::Empty, "empty training set");
    if (!train_set.has_both_classes()) throw Error(Errc::SingleClass, "training set must contain both classes");
    std::vector<FeatureVector> vectors;
    std::vector<Label> labels;
    vectors.reserve(train_set.size());
    labels.reserve(train_set.size());
    for (const auto& ex : train_set.examples()) {
        vectors.push_back(extract_features(ex.domain, features));
        labels.push_back(ex.label);
    }
    return train_on_features(kind, vectors, labels, hp);
}

Prediction predict_raw(const ModelArtifact& model, std::span<const double> raw) {
    const auto x = normalize_values(raw, model.normalization);
    return make_prediction(model.model.score(x), model.threshold());
}

Prediction predict(const ModelArtifact& model, const FeatureVector& v) {
    if (v.feature_set != model.feature_set) {
        throw Error(Errc::FeatureSetMismatch, "model expects " + std::string(to_string(model.feature_set)) +
                                                  " features, got " + std::string(to_string(v.feature_set)));
    }
    return make_prediction(model.model.score(normalize(v, model.normalization)), model.threshold());
}

Prediction ensemble_predict(std::span<const ModelArtifact> members, const FeatureVector& v,
                            std::optional<std::span<const double>> weights) {
    if (members.empty()) throw Error(Errc::EmptyEnsemble, "ensemble has no members");
    for (const auto& m : members) {
        if (m.feature_set != members.front().feature_set || m.feature_set != v.feature_set) {
            throw Error(Errc::FeatureSetMismatch, "ensemble members disagree on feature set");
        }
    }
    if (weights) {
        if (weights->size() != members.size()) throw Error(Errc::WeightMismatch, "one weight per member required");
        if (std::any_of(weights->begin(), weights->end(), [](double w) { return !(w > 0.0); })) {
            throw Error(Errc::WeightMismatch, "weights must be positive");
        }
    }
    if (members.size() == 1) return predict(members.front(), v);

    double votes = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const double w = weights ? (*weights)[i] : 1.0;
        votes += w * to_int(predict(members[i], v).label);
        total += w;
    }
    // label 1 iff votes >= total / 2
    return {votes / total, votes >= total / 2.0 ? Label::Tunnel : Label::Normal};
}

} // namespace tunnelwatch
