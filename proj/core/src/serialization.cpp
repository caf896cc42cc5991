#include "tunnelwatch/serialization.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tunnelwatch/error.hpp"

namespace tunnelwatch {

using json = nlohmann::ordered_json;

namespace {

json hyperparams_json(const Hyperparams& hp) {
    json j;
    j["k"] = hp.k;
    j["max_depth"] = hp.max_depth;
    j["min_samples_split"] = hp.min_samples_split;
    j["n_trees"] = hp.n_trees;
    j["bootstrap"] = hp.bootstrap;
    j["features_per_split"] = hp.features_per_split;
    j["lambda"] = hp.svm_lambda;
    j["svm_epochs"] = hp.svm_epochs;
    j["hidden"] = hp.mlp_hidden;
    j["mlp_learning_rate"] = hp.mlp_learning_rate;
    j["mlp_epochs"] = hp.mlp_epochs;
    j["learning_rate"] = hp.net_learning_rate;
    j["max_epochs"] = hp.net_max_epochs;
    j["batch_size"] = hp.batch_size;
    j["patience"] = hp.patience;
    j["alpha"] = hp.nb_alpha;
    j["var_smoothing"] = hp.var_smoothing;
    j["bins"] = hp.nb_bins;
    json members = json::array();
    for (ModelKind m : hp.ensemble_members) members.push_back(std::string(to_string(m)));
    j["ensemble_members"] = members;
    j["ensemble_weights"] = hp.ensemble_weights;
    j["threshold"] = hp.threshold;
    j["rng_seed"] = hp.rng_seed;
    return j;
}

void apply_hyperparams(const json& j, Hyperparams& hp) {
    if (!j.is_object()) throw Error(Errc::InvalidArgument, "hyperparameters must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "bootstrap") {
            hp.bootstrap = value.get<bool>();
        } else if (key == "hidden") {
            hp.mlp_hidden = value.is_array() ? value.get<std::vector<std::size_t>>()
                                             : std::vector<std::size_t>{value.get<std::size_t>()};
        } else if (key == "ensemble_members") {
            hp.ensemble_members.clear();
            for (const auto& m : value) hp.ensemble_members.push_back(model_kind_from_string(m.get<std::string>()));
        } else if (key == "ensemble_weights") {
            hp.ensemble_weights = value.get<std::vector<double>>();
        } else if (key == "rng_seed") {
            hp.rng_seed = value.get<std::uint64_t>();
        } else if (key == "features_per_split" && value.get<double>() == 0.0) {
            hp.features_per_split = 0;
        } else {
            set_hyperparam(hp, key, value.get<double>());
        }
    }
}

json stats_json(const NormalizationStats& s) {
    return json{{"feature_set_id", to_string(s.feature_set)}, {"min", s.min}, {"max", s.max}};
}

json matrix_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) throw Error(Errc::CorruptArtifact, "matrix data does not match its shape");
    return Matrix(rows, cols, std::move(data));
}

template <typename T>
json pair_json(const std::array<T, 2>& a) {
    return json::array({a[0], a[1]});
}

json tree_json(const TreeParams& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    return nodes;
}

TreeParams tree_from(const json& j) {
    TreeParams t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<std::uint32_t>();
        node.right = n.at(3).get<std::uint32_t>();
        node.value = n.at(4).get<double>();
        t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw Error(Errc::CorruptArtifact, "tree without nodes");
    for (const auto& n : t.nodes) {
        if (n.feature >= 0 && (n.left >= t.nodes.size() || n.right >= t.nodes.size())) {
            throw Error(Errc::CorruptArtifact, "tree child index out of range");
        }
    }
    return t;
}

json model_json(const TrainedModel& m);
TrainedModel trained_from(const json& j);

json params_json(const ModelParams& params) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GaussianNbParams>) {
                return json{{"priors", pair_json(p.priors)},
                            {"means", pair_json(p.means)},
                            {"variances", pair_json(p.variances)},
                            {"variance_floor", p.variance_floor}};
            } else if constexpr (std::is_same_v<P, BinnedNbParams>) {
                return json{{"bins", p.bins},
                            {"bin_lo", p.bin_lo},
                            {"bin_hi", p.bin_hi},
                            {"priors", pair_json(p.priors)},
                            {"prob", pair_json(p.prob)}};
            } else if constexpr (std::is_same_v<P, KnnParams>) {
                std::vector<int> labels;
                for (Label l : p.labels) labels.push_back(to_int(l));
                return json{{"points", matrix_json(p.points)}, {"labels", labels}};
            } else if constexpr (std::is_same_v<P, TreeParams>) {
                return json{{"nodes", tree_json(p)}};
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                json trees = json::array();
                for (const auto& t : p.trees) trees.push_back(tree_json(t));
                return json{{"trees", trees}};
            } else if constexpr (std::is_same_v<P, LinearParams>) {
                return json{{"quadratic", p.quadratic}, {"weights", p.weights}, {"bias", p.bias}};
            } else if constexpr (std::is_same_v<P, NetworkParams>) {
                json layers = json::array();
                for (const auto& l : p.layers) {
                    layers.push_back(json{{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
                }
                return json{{"layers", layers}};
            } else {
                json members = json::array();
                for (const auto& m : p.members) members.push_back(model_json(m));
                return json{{"members", members}, {"weights", p.weights}};
            }
        },
        params);
}

template <typename T>
std::array<T, 2> pair_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(Errc::CorruptArtifact, "expected a two-class array");
    return {j[0].get<T>(), j[1].get<T>()};
}

ModelParams params_from(ModelKind kind, const json& j) {
    switch (kind) {
        case ModelKind::GaussianNb: {
            GaussianNbParams p;
            p.priors = pair_from<double>(j.at("priors"));
            p.means = pair_from<std::vector<double>>(j.at("means"));
            p.variances = pair_from<std::vector<double>>(j.at("variances"));
            p.variance_floor = j.at("variance_floor").get<double>();
            const std::size_t d = p.means[0].size();
            if (p.means[1].size() != d || p.variances[0].size() != d || p.variances[1].size() != d) {
                throw Error(Errc::CorruptArtifact, "gaussian parameter shapes disagree");
            }
            return p;
        }
        case ModelKind::MultinomialNb:
        case ModelKind::BernoulliNb: {
            BinnedNbParams p;
            p.bins = j.at("bins").get<std::size_t>();
            p.bin_lo = j.at("bin_lo").get<std::vector<double>>();
            p.bin_hi = j.at("bin_hi").get<std::vector<double>>();
            p.priors = pair_from<double>(j.at("priors"));
            p.prob = pair_from<std::vector<double>>(j.at("prob"));
            const std::size_t slots = p.bin_lo.size() * p.bins;
            if (p.bins == 0 || p.bin_hi.size() != p.bin_lo.size() || p.prob[0].size() != slots ||
                p.prob[1].size() != slots) {
                throw Error(Errc::CorruptArtifact, "binned naive bayes shapes disagree");
            }
            return p;
        }
        case ModelKind::Knn: {
            KnnParams p;
            p.points = matrix_from(j.at("points"));
            for (int l : j.at("labels").get<std::vector<int>>()) {
                if (l != 0 && l != 1) throw Error(Errc::CorruptArtifact, "knn label out of range");
                p.labels.push_back(static_cast<Label>(l));
            }
            if (p.labels.size() != p.points.rows() || p.points.rows() == 0) {
                throw Error(Errc::CorruptArtifact, "knn labels do not match points");
            }
            return p;
        }
        case ModelKind::DecisionTree: return tree_from(j.at("nodes"));
        case ModelKind::RandomForest: {
            ForestParams p;
            for (const auto& t : j.at("trees")) p.trees.push_back(tree_from(t));
            if (p.trees.empty()) throw Error(Errc::CorruptArtifact, "forest without trees");
            return p;
        }
        case ModelKind::LinearSvm:
        case ModelKind::QuadraticSvm: {
            LinearParams p;
            p.quadratic = j.at("quadratic").get<bool>();
            p.weights = j.at("weights").get<std::vector<double>>();
            p.bias = j.at("bias").get<double>();
            return p;
        }
        case ModelKind::Mlp:
        case ModelKind::DnsClassifierNet: {
            NetworkParams p;
            for (const auto& l : j.at("layers")) {
                DenseLayer layer;
                layer.inputs = l.at("inputs").get<std::size_t>();
                layer.outputs = l.at("outputs").get<std::size_t>();
                layer.weights = l.at("weights").get<std::vector<double>>();
                layer.bias = l.at("bias").get<std::vector<double>>();
                if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs ||
                    (!p.layers.empty() && p.layers.back().outputs != layer.inputs)) {
                    throw Error(Errc::CorruptArtifact, "network layer shapes disagree");
                }
                p.layers.push_back(std::move(layer));
            }
            if (p.layers.empty() || p.layers.back().outputs != 1) {
                throw Error(Errc::CorruptArtifact, "network must end in a single output");
            }
            return p;
        }
        case ModelKind::Ensemble: {
            EnsembleParams p;
            for (const auto& m : j.at("members")) p.members.push_back(trained_from(m));
            p.weights = j.at("weights").get<std::vector<double>>();
            if (p.members.empty() || (!p.weights.empty() && p.weights.size() != p.members.size())) {
                throw Error(Errc::CorruptArtifact, "ensemble members/weights disagree");
            }
            return p;
        }
    }
    throw Error(Errc::CorruptArtifact, "unhandled model kind");
}

json model_json(const TrainedModel& m) {
    return json{{"kind", to_string(m.kind)},
                {"hyperparams", hyperparams_json(m.hyperparams)},
                {"params", params_json(m.params)},
                {"training", {{"converged", m.info.converged}, {"epochs", m.info.epochs}}}};
}

TrainedModel trained_from(const json& j) {
    TrainedModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    apply_hyperparams(j.at("hyperparams"), m.hyperparams);
    m.params = params_from(m.kind, j.at("params"));
    const auto& training = j.at("training");
    m.info.converged = training.at("converged").get<bool>();
    m.info.epochs = training.at("epochs").get<std::size_t>();
    return m;
}

} // namespace

std::string model_to_json(const ModelArtifact& model) {
    json j;
    j["format_version"] = ModelArtifact::kFormatVersion;
    j["kind"] = to_string(model.kind());
    j["feature_set_id"] = to_string(model.feature_set);
    j["hyperparams"] = hyperparams_json(model.model.hyperparams);
    j["normalization"] = stats_json(model.normalization);
    j["params"] = params_json(model.model.params);
    j["training"] = {{"converged", model.model.info.converged}, {"epochs", model.model.info.epochs}};
    return j.dump(1) + "\n";
}

ModelArtifact model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptArtifact, std::string("unparseable model: ") + e.what());
    }
    try {
        if (!j.is_object() || !j.contains("format_version")) {
            throw Error(Errc::CorruptArtifact, "missing format_version");
        }
        const auto& version = j.at("format_version");
        if (!version.is_number_integer() || version.get<long long>() != ModelArtifact::kFormatVersion) {
            throw Error(Errc::VersionMismatch, "format_version " + version.dump() + " is not " +
                                                   std::to_string(ModelArtifact::kFormatVersion));
        }
        ModelArtifact model;
        model.feature_set = feature_set_from_string(j.at("feature_set_id").get<std::string>());
        const auto& norm = j.at("normalization");
        model.normalization.feature_set = feature_set_from_string(norm.at("feature_set_id").get<std::string>());
        model.normalization.min = norm.at("min").get<std::vector<double>>();
        model.normalization.max = norm.at("max").get<std::vector<double>>();
        if (model.normalization.feature_set != model.feature_set ||
            model.normalization.min.size() != feature_count(model.feature_set) ||
            model.normalization.max.size() != model.normalization.min.size()) {
            throw Error(Errc::CorruptArtifact, "normalization does not match the feature set");
        }
        model.model = trained_from(j);
        const std::size_t width = model.model.input_width();
        if (width != 0 && width != feature_count(model.feature_set)) {
            throw Error(Errc::CorruptArtifact, "parameters do not match the feature width");
        }
        validate(model.model.hyperparams);
        return model;
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptArtifact, std::string("malformed model: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::VersionMismatch || e.code() == Errc::CorruptArtifact) throw;
        throw Error(Errc::CorruptArtifact, e.what());
    }
}

void save_model(const ModelArtifact& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
    out << model_to_json(model);
    out.flush();
    if (!out) throw Error(Errc::Io, "write failure on " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

std::string hyperparams_to_json(const Hyperparams& hp) { return hyperparams_json(hp).dump(2) + "\n"; }

Hyperparams hyperparams_from_json(std::string_view text, Hyperparams base) {
    try {
        apply_hyperparams(json::parse(text), base);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("bad hyperparameter document: ") + e.what());
    }
    validate(base);
    return base;
}

} // namespace tunnelwatch
