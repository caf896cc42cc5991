#include "cli.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tunnelwatch/dataset.hpp"
#include "tunnelwatch/error.hpp"
#include "tunnelwatch/evaluation.hpp"
#include "tunnelwatch/pcap.hpp"
#include "tunnelwatch/serialization.hpp"
#include "tunnelwatch/stream.hpp"

namespace tunnelwatch::cli {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> kind_names(bool with_ensemble) {
    std::vector<std::string> names;
    for (ModelKind k : base_model_kinds()) names.emplace_back(to_string(k));
    if (with_ensemble) names.emplace_back(to_string(ModelKind::Ensemble));
    return names;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
    out << text;
    if (!out.flush()) throw Error(Errc::Io, "write failure on " + path);
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

/// Options shared by the subcommands that train models.
struct TrainingFlags {
    std::string data;
    std::string features = "core2";
    std::string params_file;
    double split = 0.8;
    bool no_split = false;
    std::optional<double> threshold;

    void add_to(CLI::App& cmd, bool with_split) {
        cmd.add_option("--data", data, "Dataset CSV (domain,label)")->required()->check(CLI::ExistingFile);
        cmd.add_option("--features", features, "Feature set")->check(CLI::IsMember({"core2", "lex7"}));
        cmd.add_option("--params", params_file, "JSON file of hyperparameter overrides")->check(CLI::ExistingFile);
        cmd.add_option("--threshold", threshold, "Decision threshold")->check(CLI::Range(0.0, 1.0));
        if (with_split) {
            cmd.add_option("--split", split, "Stratified train fraction")->check(CLI::Range(0.0, 1.0));
            cmd.add_flag("--no-split", no_split, "Use the whole dataset instead of a split");
        }
    }

    Hyperparams hyperparams(std::uint64_t seed) const {
        Hyperparams hp;
        hp.rng_seed = seed;
        if (!params_file.empty()) hp = hyperparams_from_json(read_text(params_file), hp);
        if (threshold) hp.threshold = *threshold;
        validate(hp);
        return hp;
    }

    FeatureSet feature_set() const { return feature_set_from_string(features); }
};

/// Train or test half of `data` under the shared --split/--seed convention.
Dataset pick_split(const Dataset& data, const TrainingFlags& flags, std::uint64_t seed, bool want_train) {
    if (flags.no_split) return data;
    auto [train_set, test_set] = stratified_split(data, flags.split, seed);
    return want_train ? std::move(train_set) : std::move(test_set);
}

// -- subcommands ---------------------------------------------------------------

struct GenerateCmd {
    SynthConfig cfg;
    std::string encoder = "hex";
    std::string out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("generate", "Write a synthetic labeled dataset");
        cmd->add_option("--normal", cfg.n_normal, "Number of normal domains");
        cmd->add_option("--tunnel", cfg.n_tunnel, "Number of tunneling domains");
        cmd->add_option("--parent", cfg.parent_domain, "Parent domain of tunnel queries");
        cmd->add_option("--encoder", encoder, "Payload encoding")->check(CLI::IsMember({"hex", "base32"}));
        cmd->add_option("--payload-min", cfg.payload_min, "Minimum payload bytes");
        cmd->add_option("--payload-max", cfg.payload_max, "Maximum payload bytes");
        cmd->add_option("--out", out, "Output CSV")->required();
    }

    int run(std::uint64_t seed, std::ostream& os) {
        cfg.rng_seed = seed;
        cfg.encoder = payload_encoder_from_string(encoder);
        const Dataset d = generate_synthetic(cfg);
        save_csv(d, out);
        os << "wrote " << d.size() << " examples (" << d.class_counts()[0] << " normal, " << d.class_counts()[1]
           << " tunnel) to " << out << "\n";
        return kExitOk;
    }
};

struct TrainCmd {
    std::string model;
    TrainingFlags flags;
    std::string out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Train a model and write its artifact");
        cmd->add_option("--model", model, "Model kind")->required()->check(CLI::IsMember(kind_names(true)));
        flags.add_to(*cmd, true);
        cmd->add_option("--out", out, "Model artifact path")->required();
    }

    int run(std::uint64_t seed, std::ostream& os, std::ostream& es) {
        const Dataset data = load_csv(flags.data);
        const Dataset train_set = pick_split(data, flags, seed, true);
        const ModelArtifact m = train(model_kind_from_string(model), train_set, flags.feature_set(), flags.hyperparams(seed));
        save_model(m, out);
        os << "trained " << model << " on " << train_set.size() << " examples (" << to_string(m.feature_set)
           << "), epochs " << m.model.info.epochs << ", wrote " << out << "\n";
        if (!m.model.info.converged) {
            es << "warning: " << model << " stopped at the epoch limit without early stopping (NoConvergence)\n";
        }
        return kExitOk;
    }
};

struct EvaluateCmd {
    std::string model_file;
    std::string data;
    double split = 0.8;
    bool no_split = false;
    std::optional<double> threshold;
    std::string report_path;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("evaluate", "Evaluate a model artifact on the test split of a dataset");
        cmd->add_option("--model-file", model_file, "Model artifact")->required()->check(CLI::ExistingFile);
        cmd->add_option("--data", data, "Dataset CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--split", split, "Train fraction used when the model was trained")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_flag("--no-split", no_split, "Evaluate on the whole dataset");
        cmd->add_option("--threshold", threshold, "Override the model's threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--report", report_path, "Also write the structured (JSON) report here");
    }

    int run(std::uint64_t seed, std::ostream& os) {
        ModelArtifact m = load_model(model_file);
        if (threshold) m.model.hyperparams.threshold = *threshold;
        const Dataset d = load_csv(data);
        const Dataset test = no_split ? d : stratified_split(d, split, seed).second;
        const EvaluationReport r = evaluate(m, test);
        os << format_report(r);
        if (!report_path.empty()) write_text(report_path, report_to_json(r));
        return kExitOk;
    }
};

struct CompareCmd {
    std::vector<std::string> models = kind_names(false);
    TrainingFlags flags;
    std::string report_path;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("compare", "Train and evaluate several model kinds on one split");
        cmd->add_option("--models", models, "Comma-separated model kinds (default: all ten)")
            ->delimiter(',')
            ->check(CLI::IsMember(kind_names(true)));
        flags.add_to(*cmd, true);
        cmd->add_option("--report", report_path, "Also write all reports as JSON here");
    }

    int run(std::uint64_t seed, std::ostream& os) {
        const Dataset data = load_csv(flags.data);
        const Hyperparams hp = flags.hyperparams(seed);
        const FeatureSet fs = flags.feature_set();
        Dataset train_set = data;
        Dataset test_set = data;
        if (!flags.no_split) std::tie(train_set, test_set) = stratified_split(data, flags.split, seed);

        os << "features " << to_string(fs) << ", train " << train_set.size() << ", test " << test_set.size() << "\n";
        os << pad("model", 20) << pad("accuracy", 10) << pad("precision", 11) << pad("recall", 8) << "f1-score\n";
        Json all = Json::array();
        for (const auto& name : models) {
            const ModelArtifact m = train(model_kind_from_string(name), train_set, fs, hp);
            const EvaluationReport r = evaluate(m, test_set);
            os << pad(name, 20) << pad(fixed(r.accuracy), 10) << pad(fixed(r.tunnel().precision), 11)
               << pad(fixed(r.tunnel().recall), 8) << fixed(r.tunnel().f1) << "\n";
            os.flush();
            all.push_back(Json::parse(report_to_json(r)));
        }
        if (!report_path.empty()) write_text(report_path, all.dump(2) + "\n");
        return kExitOk;
    }
};

struct CvCmd {
    std::string model;
    TrainingFlags flags;
    std::size_t k = 5;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
        cmd->add_option("--model", model, "Model kind")->required()->check(CLI::IsMember(kind_names(true)));
        flags.add_to(*cmd, false);
        cmd->add_option("--k", k, "Number of folds")->check(CLI::Range(2, 1000));
    }

    int run(std::uint64_t seed, std::ostream& os) {
        const Dataset data = load_csv(flags.data);
        const CrossValidationResult cv =
            kfold_cv(model_kind_from_string(model), data, k, flags.feature_set(), flags.hyperparams(seed), seed);
        os << pad("fold", 6) << pad("accuracy", 10) << pad("precision", 11) << pad("recall", 8) << "f1-score\n";
        for (std::size_t i = 0; i < cv.folds.size(); ++i) {
            const auto& r = cv.folds[i];
            os << pad(std::to_string(i), 6) << pad(fixed(r.accuracy), 10) << pad(fixed(r.tunnel().precision), 11)
               << pad(fixed(r.tunnel().recall), 8) << fixed(r.tunnel().f1) << "\n";
        }
        auto summary = [](const MetricSummary& s) { return fixed(s.mean) + " +/- " + fixed(s.stddev); };
        os << "mean accuracy " << summary(cv.accuracy) << "\n"
           << "mean precision " << summary(cv.precision) << "\n"
           << "mean recall " << summary(cv.recall) << "\n"
           << "mean f1 " << summary(cv.f1) << "\n";
        return kExitOk;
    }
};

std::vector<ParamDistribution> default_space(ModelKind kind) {
    using T = ParamDistribution::Type;
    switch (kind) {
    case ModelKind::GaussianNb: return {{"var_smoothing", T::LogUniform, 1e-12, 1e-6, {}}};
    case ModelKind::MultinomialNb:
    case ModelKind::BernoulliNb: return {{"alpha", T::LogUniform, 1e-2, 10.0, {}}, {"bins", T::Integer, 4, 32, {}}};
    case ModelKind::Knn: return {{"k", T::Integer, 1, 25, {}}};
    case ModelKind::DecisionTree:
        return {{"max_depth", T::Integer, 2, 20, {}}, {"min_samples_split", T::Integer, 2, 10, {}}};
    case ModelKind::RandomForest: return {{"n_trees", T::Integer, 10, 100, {}}, {"max_depth", T::Integer, 2, 16, {}}};
    case ModelKind::LinearSvm:
    case ModelKind::QuadraticSvm: return {{"lambda", T::LogUniform, 1e-6, 1e-2, {}}};
    case ModelKind::Mlp:
        return {{"hidden", T::Integer, 4, 64, {}}, {"mlp_learning_rate", T::LogUniform, 1e-4, 1e-1, {}}};
    case ModelKind::DnsClassifierNet:
        return {{"learning_rate", T::LogUniform, 1e-4, 1e-2, {}}, {"batch_size", T::Choice, 0, 0, {32, 64, 128}}};
    case ModelKind::Ensemble: return {{"threshold", T::Uniform, 0.3, 0.7, {}}};
    }
    return {};
}

/// {"name": [v, ...]} for choices, {"name": {"uniform"|"log_uniform"|"integer": [lo, hi]}} for ranges.
std::vector<ParamDistribution> parse_space(const Json& j) {
    std::vector<ParamDistribution> out;
    for (const auto& [name, entry] : j.items()) {
        ParamDistribution d;
        d.name = name;
        if (entry.is_array()) {
            d.type = ParamDistribution::Type::Choice;
            d.choices = entry.get<std::vector<double>>();
        } else if (entry.is_object() && entry.size() == 1) {
            const auto& [type, range] = *entry.items().begin();
            if (type == "uniform") d.type = ParamDistribution::Type::Uniform;
            else if (type == "log_uniform") d.type = ParamDistribution::Type::LogUniform;
            else if (type == "integer") d.type = ParamDistribution::Type::Integer;
            else throw Error(Errc::InvalidArgument, "unknown distribution '" + type + "' for " + name);
            const auto bounds = range.get<std::vector<double>>();
            if (bounds.size() != 2) throw Error(Errc::InvalidArgument, name + ": range needs [lo, hi]");
            d.lo = bounds[0];
            d.hi = bounds[1];
        } else {
            throw Error(Errc::InvalidArgument, name + ": expected a list or a one-key range object");
        }
        out.push_back(std::move(d));
    }
    return out;
}

Json parse_json_file(const std::string& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw Error(Errc::InvalidArgument, path + ": " + e.what());
    }
}

struct TuneCmd {
    std::string model;
    TrainingFlags flags;
    std::size_t k = 5;
    std::string grid_file;
    std::size_t random_draws = 0;
    std::string space_file;
    std::string out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("tune", "Grid or random hyperparameter search by k-fold mean F1");
        cmd->add_option("--model", model, "Model kind")->required()->check(CLI::IsMember(kind_names(true)));
        flags.add_to(*cmd, false);
        cmd->add_option("--k", k, "Number of folds")->check(CLI::Range(2, 1000));
        auto* search = cmd->add_option_group("search", "Exactly one of --grid or --random");
        search->add_option("--grid", grid_file, "JSON grid {\"name\": [values...]}")->check(CLI::ExistingFile);
        auto* random = search->add_option("--random", random_draws, "Number of random draws")->check(CLI::PositiveNumber);
        search->require_option(1);
        cmd->add_option("--space", space_file, "JSON search space for --random")
            ->check(CLI::ExistingFile)
            ->needs(random);
        cmd->add_option("--out", out, "Write the best hyperparameters as JSON");
    }

    int run(std::uint64_t seed, std::ostream& os) {
        const Dataset data = load_csv(flags.data);
        const ModelKind kind = model_kind_from_string(model);
        const Hyperparams base = flags.hyperparams(seed);
        SearchResult r;
        if (!grid_file.empty()) {
            ParamGrid grid;
            const Json doc = parse_json_file(grid_file);
            for (const auto& [name, values] : doc.items()) {
                if (!values.is_array()) throw Error(Errc::InvalidArgument, grid_file + ": " + name + " is not a list");
                grid.emplace_back(name, values.get<std::vector<double>>());
            }
            r = grid_search(kind, data, flags.feature_set(), grid, base, k, seed);
        } else {
            const auto space = space_file.empty() ? default_space(kind) : parse_space(parse_json_file(space_file));
            r = random_search(kind, data, flags.feature_set(), space, random_draws, base, k, seed);
        }
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            os << pad(std::to_string(i), 5);
            for (const auto& [name, value] : r.points[i].values) os << name << "=" << format_double(value) << " ";
            os << "mean_f1=" << fixed(r.points[i].mean_f1) << "\n";
        }
        os << "best " << r.best_index << " mean_f1=" << fixed(r.best_f1) << "\n";
        if (!out.empty()) write_text(out, hyperparams_to_json(r.best));
        return kExitOk;
    }
};

struct BoundaryCmd {
    std::string model_file;
    std::string out;
    double entropy_min = 0.0;
    double entropy_max = 6.0;
    double length_min = 1.0;
    double length_max = 100.0;
    std::size_t nx = 200;
    std::size_t ny = 200;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("boundary", "Write the decision-boundary grid of a core2 model");
        cmd->add_option("--model-file", model_file, "Model artifact")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "Grid CSV (entropy,length,label)")->required();
        cmd->add_option("--entropy-min", entropy_min);
        cmd->add_option("--entropy-max", entropy_max);
        cmd->add_option("--length-min", length_min);
        cmd->add_option("--length-max", length_max);
        cmd->add_option("--nx", nx, "Entropy resolution");
        cmd->add_option("--ny", ny, "Length resolution");
    }

    int run(std::ostream& os) {
        const ModelArtifact m = load_model(model_file);
        const BoundaryGrid g = boundary_grid(m, {entropy_min, entropy_max}, {length_min, length_max}, nx, ny);
        std::ofstream file(out, std::ios::binary);
        if (!file) throw Error(Errc::Io, "cannot open " + out + " for writing");
        write_boundary_csv(g, file);
        if (!file.flush()) throw Error(Errc::Io, "write failure on " + out);
        const auto tunnel = static_cast<std::size_t>(std::count(g.cells.begin(), g.cells.end(), Label::Tunnel));
        os << "wrote " << g.cells.size() << " cells (" << tunnel << " tunnel) to " << out << "\n";
        return kExitOk;
    }
};

struct ScoreCmd {
    std::string model_file;
    std::string pcap;
    std::string domains;
    std::optional<double> threshold;
    double window = 60.0;
    std::size_t workers = 1;
    std::string out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("score", "Score queries from a pcap or a domain CSV and print alert lines");
        cmd->add_option("--model-file", model_file, "Model artifact")->required()->check(CLI::ExistingFile);
        auto* input = cmd->add_option_group("input", "Exactly one of --pcap or --domains");
        input->add_option("--pcap", pcap, "Classic pcap capture")->check(CLI::ExistingFile);
        input->add_option("--domains", domains, "Domain CSV (domain,label)")->check(CLI::ExistingFile);
        input->require_option(1);
        cmd->add_option("--threshold", threshold, "Override the model's threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--window", window, "Rate window in seconds")->check(CLI::PositiveNumber);
        cmd->add_option("--workers", workers, "Scoring threads")->check(CLI::Range(1, 256));
        cmd->add_option("--out", out, "Alert file (default: standard output)");
    }

    int run(std::ostream& os, std::ostream& es) {
        if (pcap.empty() && domains.empty()) throw CLI::RequiredError("--pcap or --domains");
        const ModelArtifact m = load_model(model_file);
        StreamOptions options;
        options.threshold = threshold;
        options.window_seconds = window;
        options.workers = workers;

        std::ofstream file;
        if (!out.empty()) {
            file.open(out, std::ios::binary);
            if (!file) throw Error(Errc::Io, "cannot open " + out + " for writing");
        }
        std::ostream& sink_stream = out.empty() ? os : file;
        std::size_t scored = 0;
        std::size_t alerts = 0;
        const ScoredSink sink = [&](const ScoredRecord& r) {
            ++scored;
            if (!r.alert) return;
            ++alerts;
            sink_stream << alert_to_line(*r.alert) << '\n' << std::flush;
        };

        if (!pcap.empty()) {
            PcapReader reader(pcap);
            std::vector<DnsQueryRecord> batch;
            std::size_t pos = 0;
            const RecordSource source = [&]() -> std::optional<DnsQueryRecord> {
                while (pos == batch.size()) {
                    auto next = reader.next();
                    if (!next) return std::nullopt;
                    batch = std::move(*next);
                    pos = 0;
                }
                return std::move(batch[pos++]);
            };
            score_stream(source, m, options, sink);
            const PcapStats& s = reader.stats();
            es << "packets " << s.packets << ", parsed " << s.parsed << ", skipped " << s.skipped << ", queries "
               << s.records << ", alerts " << alerts << "\n";
        } else {
            const Dataset d = load_csv(domains);
            options.track_rate = false;
            std::vector<DnsQueryRecord> records;
            records.reserve(d.size());
            for (const auto& e : d.examples()) {
                DnsQueryRecord r;
                r.qname = e.domain;
                records.push_back(std::move(r));
            }
            std::size_t i = 0;
            score_stream(
                [&]() -> std::optional<DnsQueryRecord> {
                    if (i == records.size()) return std::nullopt;
                    return std::move(records[i++]);
                },
                m, options, sink);
            es << "queries " << scored << ", alerts " << alerts << "\n";
        }
        if (!out.empty() && !file) throw Error(Errc::Io, "write failure on " + out);
        return kExitOk;
    }
};

void print_error(const Error& e, std::ostream& es) {
    es << "error: " << e.what();
    if (e.row()) es << " (row " << *e.row() << ")";
    es << " [" << to_string(e.code());
    if (e.cause()) es << ": " << to_string(*e.cause());
    es << "]\n";
}

} // namespace

unsigned long long default_seed() {
    const char* env = std::getenv("TUNNELWATCH_SEED");
    if (env == nullptr || *env == '\0') return 42;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || *env == '-') return 42;
    return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"DNS tunneling detection toolkit", "tunnelwatch"};
    app.require_subcommand(1);
    unsigned long long seed = default_seed();
    app.add_option("--seed", seed, "Seed for every random choice (default 42 or TUNNELWATCH_SEED)");
    app.fallthrough();

    GenerateCmd generate;
    TrainCmd train_cmd;
    EvaluateCmd evaluate_cmd;
    CompareCmd compare;
    CvCmd cv;
    TuneCmd tune;
    BoundaryCmd boundary;
    ScoreCmd score;
    generate.attach(app);
    train_cmd.attach(app);
    evaluate_cmd.attach(app);
    compare.attach(app);
    cv.attach(app);
    tune.attach(app);
    boundary.attach(app);
    score.attach(app);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        out << target->help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << target->help();
        return kExitUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "generate") return generate.run(seed, out);
        if (name == "train") return train_cmd.run(seed, out, err);
        if (name == "evaluate") return evaluate_cmd.run(seed, out);
        if (name == "compare") return compare.run(seed, out);
        if (name == "cv") return cv.run(seed, out);
        if (name == "tune") return tune.run(seed, out);
        if (name == "boundary") return boundary.run(out);
        if (name == "score") return score.run(out, err);
    } catch (const Error& e) {
        print_error(e, err);
        return kExitDataError;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}

} // namespace tunnelwatch::cli
