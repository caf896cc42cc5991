#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tunnelwatch/dataset.hpp"
#include "tunnelwatch/model.hpp"
#include "tunnelwatch/random.hpp"

namespace tunnelwatch {

/// Positive class is tunneling.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws LengthMismatch, Empty.
ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    // set when the metric's denominator was zero and 0.0 was substituted
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct EvaluationReport {
    ConfusionMatrix matrix;
    std::array<ClassMetrics, 2> per_class; // indexed by to_int(Label)
    double accuracy = 0.0;
    std::string model_kind;
    std::string feature_set_id;
    double threshold = 0.5;

    const ClassMetrics& tunnel() const noexcept { return per_class[1]; }
};

/// Throws Empty when the matrix holds no examples.
EvaluationReport report(const ConfusionMatrix& cm);

/// Scores `data` with `model` and builds the report (kind/feature set/threshold filled in).
EvaluationReport evaluate(const ModelArtifact& model, const Dataset& data);
EvaluationReport evaluate(const ModelArtifact& model, std::span<const FeatureVector> features,
                          std::span<const Label> truth);

/// Text table in the familiar per-class precision/recall/f1/support layout.
std::string format_report(const EvaluationReport& r);
/// Structured (JSON) rendering.
std::string report_to_json(const EvaluationReport& r);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation (n-1)
};

struct CrossValidationResult {
    std::vector<EvaluationReport> folds;
    std::vector<std::size_t> fold_of; // fold index per dataset example
    MetricSummary accuracy;
    MetricSummary precision;
    MetricSummary recall;
    MetricSummary f1;
};

/// Stratified k-fold assignment: each class is shuffled, then dealt round-robin
/// continuing from where the previous class stopped. Throws InvalidArgument,
/// SingleClass, TooFewExamples.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t rng_seed);

CrossValidationResult kfold_cv(ModelKind kind, const Dataset& data, std::size_t k, FeatureSet features,
                               const Hyperparams& hp, std::uint64_t rng_seed);

/// Named hyperparameter axes; iteration is the cartesian product with the last
/// axis varying fastest.
using ParamGrid = std::vector<std::pair<std::string, std::vector<double>>>;

struct SearchPoint {
    std::vector<std::pair<std::string, double>> values;
    Hyperparams hyperparams;
    double mean_f1 = 0.0;
};

struct SearchResult {
    Hyperparams best;
    std::size_t best_index = 0;
    double best_f1 = 0.0;
    std::vector<SearchPoint> points;
};

/// Selects by mean tunneling-class F1 over k folds; earlier points win ties.
/// Throws EmptyGrid plus kfold_cv errors.
SearchResult grid_search(ModelKind kind, const Dataset& data, FeatureSet features, const ParamGrid& grid,
                         const Hyperparams& base, std::size_t k, std::uint64_t rng_seed);

struct ParamDistribution {
    enum class Type { Uniform, LogUniform, Integer, Choice };
    std::string name;
    Type type = Type::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> choices;

    double sample(Rng& rng) const;
};

/// Throws EmptyGrid for no distributions, InvalidArgument for n_draws == 0 or bad ranges.
SearchResult random_search(ModelKind kind, const Dataset& data, FeatureSet features,
                           const std::vector<ParamDistribution>& distributions, std::size_t n_draws,
                           const Hyperparams& base, std::size_t k, std::uint64_t rng_seed);

/// Predicted labels over an (entropy, length) lattice.
struct BoundaryGrid {
    double entropy_min = 0.0;
    double entropy_max = 6.0;
    double length_min = 1.0;
    double length_max = 100.0;
    std::size_t nx = 200; // entropy resolution
    std::size_t ny = 200; // length resolution
    std::vector<Label> cells; // row-major: cells[j * nx + i] for length_j, entropy_i
    std::string model_kind;

    double entropy_at(std::size_t i) const noexcept;
    double length_at(std::size_t j) const noexcept;
    Label at(std::size_t i, std::size_t j) const { return cells.at(j * nx + i); }
};

/// Requires a core2 model. Throws FeatureSetMismatch, BadRange.
BoundaryGrid boundary_grid(const ModelArtifact& model, std::pair<double, double> entropy_range,
                           std::pair<double, double> length_range, std::size_t nx, std::size_t ny);

/// `entropy,length,label` with shortest round-trip numbers.
void write_boundary_csv(const BoundaryGrid& grid, std::ostream& out);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

} // namespace tunnelwatch
