#include "tunnelwatch/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tunnelwatch/error.hpp"
#include "tunnelwatch/serialization.hpp"

namespace tunnelwatch {

namespace {

struct Ratio {
    double value = 0.0;
    bool undefined = false;
};

Ratio ratio(std::size_t num, std::size_t den) {
    if (den == 0) return {0.0, true};
    return {static_cast<double>(num) / static_cast<double>(den), false};
}

ClassMetrics class_metrics(std::size_t hit, std::size_t false_alarm, std::size_t miss) {
    ClassMetrics m;
    const Ratio p = ratio(hit, hit + false_alarm);
    const Ratio r = ratio(hit, hit + miss);
    m.precision = p.value;
    m.precision_undefined = p.undefined;
    m.recall = r.value;
    m.recall_undefined = r.undefined;
    const double sum = m.precision + m.recall;
    if (sum > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / sum;
    } else {
        m.f1_undefined = true;
    }
    m.support = hit + miss;
    return m;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

struct FeatureTable {
    std::vector<FeatureVector> features;
    std::vector<Label> labels;
};

FeatureTable extract_all(const Dataset& data, FeatureSet set) {
    FeatureTable t;
    t.features.reserve(data.size());
    t.labels.reserve(data.size());
    for (const auto& ex : data.examples()) {
        t.features.push_back(extract_features(ex.domain, set));
        t.labels.push_back(ex.label);
    }
    return t;
}

CrossValidationResult kfold_on_table(ModelKind kind, const FeatureTable& table, std::size_t k, const Hyperparams& hp,
                                     std::uint64_t rng_seed) {
    CrossValidationResult result;
    result.fold_of = stratified_folds(table.labels, k, rng_seed);
    std::vector<double> acc;
    std::vector<double> prec;
    std::vector<double> rec;
    std::vector<double> f1;
    for (std::size_t fold = 0; fold < k; ++fold) {
        FeatureTable train;
        FeatureTable test;
        for (std::size_t i = 0; i < table.features.size(); ++i) {
            FeatureTable& dst = result.fold_of[i] == fold ? test : train;
            dst.features.push_back(table.features[i]);
            dst.labels.push_back(table.labels[i]);
        }
        const ModelArtifact model = train_on_features(kind, train.features, train.labels, hp);
        EvaluationReport r = evaluate(model, test.features, test.labels);
        acc.push_back(r.accuracy);
        prec.push_back(r.tunnel().precision);
        rec.push_back(r.tunnel().recall);
        f1.push_back(r.tunnel().f1);
        result.folds.push_back(std::move(r));
    }
    result.accuracy = summarize(acc);
    result.precision = summarize(prec);
    result.recall = summarize(rec);
    result.f1 = summarize(f1);
    return result;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) throw Error(Errc::LengthMismatch, "prediction and truth lengths differ");
    if (predicted.empty()) throw Error(Errc::Empty, "no predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == Label::Tunnel;
        const bool t = truth[i] == Label::Tunnel;
        if (p && t) ++cm.tp;
        else if (p) ++cm.fp;
        else if (t) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

EvaluationReport report(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error(Errc::Empty, "confusion matrix is empty");
    EvaluationReport r;
    r.matrix = cm;
    r.per_class[1] = class_metrics(cm.tp, cm.fp, cm.fn);
    r.per_class[0] = class_metrics(cm.tn, cm.fn, cm.fp);
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    return r;
}

EvaluationReport evaluate(const ModelArtifact& model, std::span<const FeatureVector> features,
                          std::span<const Label> truth) {
    std::vector<Label> predicted;
    predicted.reserve(features.size());
    for (const auto& v : features) predicted.push_back(predict(model, v).label);
    EvaluationReport r = report(confusion(predicted, truth));
    r.model_kind = std::string(to_string(model.kind()));
    r.feature_set_id = std::string(to_string(model.feature_set));
    r.threshold = model.threshold();
    return r;
}

EvaluationReport evaluate(const ModelArtifact& model, const Dataset& data) {
    const FeatureTable table = extract_all(data, model.feature_set);
    return evaluate(model, table.features, table.labels);
}

std::string format_report(const EvaluationReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::setw(12) << "" << std::setw(10) << "precision" << std::setw(10) << "recall" << std::setw(10)
        << "f1-score" << std::setw(10) << "support" << "\n\n";
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& m = r.per_class[c];
        out << std::setw(12) << c << std::setw(10) << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1
            << std::setw(10) << m.support << '\n';
    }
    const std::size_t total = r.matrix.total();
    out << '\n' << std::setw(12) << "accuracy" << std::setw(30) << r.accuracy << std::setw(10) << total << '\n';
    const auto& a = r.per_class[0];
    const auto& b = r.per_class[1];
    out << std::setw(12) << "macro avg" << std::setw(10) << (a.precision + b.precision) / 2 << std::setw(10)
        << (a.recall + b.recall) / 2 << std::setw(10) << (a.f1 + b.f1) / 2 << std::setw(10) << total << '\n';
    const double wa = static_cast<double>(a.support) / static_cast<double>(total);
    const double wb = static_cast<double>(b.support) / static_cast<double>(total);
    out << std::setw(12) << "weighted avg" << std::setw(10) << wa * a.precision + wb * b.precision << std::setw(10)
        << wa * a.recall + wb * b.recall << std::setw(10) << wa * a.f1 + wb * b.f1 << std::setw(10) << total << '\n';
    out << "\nconfusion: tp=" << r.matrix.tp << " fp=" << r.matrix.fp << " tn=" << r.matrix.tn
        << " fn=" << r.matrix.fn << '\n';
    return out.str();
}

std::string report_to_json(const EvaluationReport& r) {
    using json = nlohmann::ordered_json;
    auto metrics = [](const ClassMetrics& m) {
        json j{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
        json undefined = json::array();
        if (m.precision_undefined) undefined.push_back("precision");
        if (m.recall_undefined) undefined.push_back("recall");
        if (m.f1_undefined) undefined.push_back("f1");
        j["undefined"] = undefined;
        return j;
    };
    json j;
    j["model"] = r.model_kind;
    j["feature_set_id"] = r.feature_set_id;
    j["threshold"] = r.threshold;
    j["confusion"] = {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"tn", r.matrix.tn}, {"fn", r.matrix.fn}};
    j["classes"] = {{"0", metrics(r.per_class[0])}, {"1", metrics(r.per_class[1])}};
    j["accuracy"] = r.accuracy;
    return j.dump(2) + "\n";
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t rng_seed) {
    if (k < 2) throw Error(Errc::InvalidArgument, "k must be at least 2");
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[to_int(labels[i])].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) throw Error(Errc::SingleClass, "cross-validation needs both classes");
    for (const auto& idx : by_class) {
        if (idx.size() < k) {
            throw Error(Errc::TooFewExamples,
                        "a class has " + std::to_string(idx.size()) + " examples, fewer than k=" + std::to_string(k));
        }
    }
    Rng rng(rng_seed);
    std::vector<std::size_t> fold_of(labels.size());
    std::size_t next = 0;
    for (auto& idx : by_class) {
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t i : idx) {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    return fold_of;
}

CrossValidationResult kfold_cv(ModelKind kind, const Dataset& data, std::size_t k, FeatureSet features,
                               const Hyperparams& hp, std::uint64_t rng_seed) {
    return kfold_on_table(kind, extract_all(data, features), k, hp, rng_seed);
}

namespace {

SearchResult run_search(ModelKind kind, const FeatureTable& table, std::vector<SearchPoint> points, std::size_t k,
                        std::uint64_t rng_seed) {
    SearchResult result;
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        // Same fold assignment for every candidate.
        points[i].mean_f1 = kfold_on_table(kind, table, k, points[i].hyperparams, rng_seed).f1.mean;
        if (points[i].mean_f1 > best) {
            best = points[i].mean_f1;
            result.best_index = i;
        }
    }
    result.best = points[result.best_index].hyperparams;
    result.best_f1 = points[result.best_index].mean_f1;
    result.points = std::move(points);
    return result;
}

} // namespace

SearchResult grid_search(ModelKind kind, const Dataset& data, FeatureSet features, const ParamGrid& grid,
                         const Hyperparams& base, std::size_t k, std::uint64_t rng_seed) {
    if (grid.empty() || std::any_of(grid.begin(), grid.end(), [](const auto& axis) { return axis.second.empty(); })) {
        throw Error(Errc::EmptyGrid, "parameter grid has no points");
    }
    std::vector<SearchPoint> points;
    std::vector<std::size_t> cursor(grid.size(), 0);
    bool done = false;
    while (!done) {
        SearchPoint point;
        point.hyperparams = base;
        for (std::size_t a = 0; a < grid.size(); ++a) {
            const double v = grid[a].second[cursor[a]];
            set_hyperparam(point.hyperparams, grid[a].first, v);
            point.values.emplace_back(grid[a].first, v);
        }
        validate(point.hyperparams);
        points.push_back(std::move(point));

        // odometer step, last axis fastest
        std::size_t a = grid.size();
        while (true) {
            if (a == 0) {
                done = true;
                break;
            }
            --a;
            if (++cursor[a] < grid[a].second.size()) break;
            cursor[a] = 0;
        }
    }
    return run_search(kind, extract_all(data, features), std::move(points), k, rng_seed);
}

double ParamDistribution::sample(Rng& rng) const {
    switch (type) {
        case Type::Uniform: return rng.uniform(lo, hi);
        case Type::LogUniform: return std::exp(rng.uniform(std::log(lo), std::log(hi)));
        case Type::Integer:
            return static_cast<double>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        case Type::Choice: return choices.at(rng.below(choices.size()));
    }
    return lo;
}

SearchResult random_search(ModelKind kind, const Dataset& data, FeatureSet features,
                           const std::vector<ParamDistribution>& distributions, std::size_t n_draws,
                           const Hyperparams& base, std::size_t k, std::uint64_t rng_seed) {
    if (distributions.empty()) throw Error(Errc::EmptyGrid, "no parameter distributions");
    if (n_draws == 0) throw Error(Errc::InvalidArgument, "n_draws must be >= 1");
    for (const auto& d : distributions) {
        const bool ok = d.type == ParamDistribution::Type::Choice ? !d.choices.empty()
                        : d.type == ParamDistribution::Type::LogUniform ? (d.lo > 0.0 && d.lo <= d.hi)
                                                                         : d.lo <= d.hi;
        if (!ok) throw Error(Errc::InvalidArgument, "bad range for '" + d.name + "'");
    }
    Rng rng(derive_seed(rng_seed, 0x5eed));
    std::vector<SearchPoint> points;
    for (std::size_t draw = 0; draw < n_draws; ++draw) {
        SearchPoint point;
        point.hyperparams = base;
        for (const auto& d : distributions) {
            const double v = d.sample(rng);
            set_hyperparam(point.hyperparams, d.name, v);
            point.values.emplace_back(d.name, v);
        }
        validate(point.hyperparams);
        points.push_back(std::move(point));
    }
    return run_search(kind, extract_all(data, features), std::move(points), k, rng_seed);
}

double BoundaryGrid::entropy_at(std::size_t i) const noexcept {
    if (i + 1 == nx) return entropy_max;
    return entropy_min + (entropy_max - entropy_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double BoundaryGrid::length_at(std::size_t j) const noexcept {
    if (j + 1 == ny) return length_max;
    return length_min + (length_max - length_min) * static_cast<double>(j) / static_cast<double>(ny - 1);
}

BoundaryGrid boundary_grid(const ModelArtifact& model, std::pair<double, double> entropy_range,
                           std::pair<double, double> length_range, std::size_t nx, std::size_t ny) {
    if (model.feature_set != FeatureSet::Core2) {
        throw Error(Errc::FeatureSetMismatch, "boundary grids need a core2 model");
    }
    if (nx < 2 || ny < 2 || !(entropy_range.first < entropy_range.second) ||
        !(length_range.first < length_range.second)) {
        throw Error(Errc::BadRange, "grid needs nx, ny >= 2 and increasing ranges");
    }
    BoundaryGrid grid;
    grid.entropy_min = entropy_range.first;
    grid.entropy_max = entropy_range.second;
    grid.length_min = length_range.first;
    grid.length_max = length_range.second;
    grid.nx = nx;
    grid.ny = ny;
    grid.model_kind = std::string(to_string(model.kind()));
    grid.cells.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::array<double, 2> raw = {grid.length_at(j), grid.entropy_at(i)}; // core2 order
            grid.cells.push_back(predict_raw(model, raw).label);
        }
    }
    return grid;
}

void write_boundary_csv(const BoundaryGrid& grid, std::ostream& out) {
    out << "entropy,length,label\n";
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            out << format_double(grid.entropy_at(i)) << ',' << format_double(grid.length_at(j)) << ','
                << to_int(grid.at(i, j)) << '\n';
        }
    }
}

} // namespace tunnelwatch
