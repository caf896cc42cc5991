#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tunnelwatch/evaluation.hpp"

using namespace tunnelwatch;

namespace {

std::vector<Label> labels(std::initializer_list<int> v) {
    std::vector<Label> out;
    for (int x : v) out.push_back(x ? Label::Tunnel : Label::Normal);
    return out;
}

const Dataset& cv_data() {
    static const Dataset d = generate_synthetic({.n_normal = 120, .n_tunnel = 80, .rng_seed = 21});
    return d;
}

} // namespace

TEST(Confusion, HandEnumeration) {
    const auto cm = confusion(labels({1, 1, 0, 0}), labels({1, 0, 0, 1}));
    EXPECT_EQ(cm, (ConfusionMatrix{1, 1, 1, 1}));
    EXPECT_EQ(confusion(labels({1, 1, 1}), labels({1, 1, 1})), (ConfusionMatrix{3, 0, 0, 0}));
    EXPECT_EQ(confusion(labels({0, 0, 0}), labels({1, 1, 1})), (ConfusionMatrix{0, 0, 0, 3}));
    EXPECT_TW_ERROR(confusion(labels({1}), labels({1, 0})), Errc::LengthMismatch);
    EXPECT_TW_ERROR(confusion(labels({}), labels({})), Errc::Empty);
}

TEST(Report, BalancedMatrix) {
    const EvaluationReport r = report({1, 1, 1, 1});
    EXPECT_EQ(r.tunnel().precision, 0.5);
    EXPECT_EQ(r.tunnel().recall, 0.5);
    EXPECT_EQ(r.tunnel().f1, 0.5);
    EXPECT_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.per_class[0].precision, 0.5);
    EXPECT_EQ(r.per_class[0].support, 2u);
    EXPECT_EQ(r.tunnel().support, 2u);
}

TEST(Report, PrecisionSevenTenthsRecallOne) {
    // tp 7, fp 3, fn 0 gives precision 0.70 and recall 1.00.
    const EvaluationReport r = report({7, 3, 5, 0});
    EXPECT_DOUBLE_EQ(r.tunnel().precision, 0.7);
    EXPECT_EQ(r.tunnel().recall, 1.0);
    EXPECT_NEAR(r.tunnel().f1, 0.8235294117647058, 1e-12);
    EXPECT_NEAR(r.tunnel().f1, 0.83, 0.01);
}

TEST(Report, ZeroDenominatorsFlagged) {
    const EvaluationReport r = report({0, 0, 5, 0});
    EXPECT_EQ(r.tunnel().precision, 0.0);
    EXPECT_TRUE(r.tunnel().precision_undefined);
    EXPECT_TRUE(r.tunnel().recall_undefined);
    EXPECT_TRUE(r.tunnel().f1_undefined);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_FALSE(r.per_class[0].precision_undefined);
    EXPECT_EQ(r.per_class[0].f1, 1.0);
    EXPECT_TW_ERROR(report({}), Errc::Empty);
}

TEST(Report, MetricIdentitiesOnRandomMatrices) {
    Rng rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        ConfusionMatrix cm{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
        if (cm.total() == 0) continue;
        const EvaluationReport r = report(cm);
        EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()));
        for (const auto& c : r.per_class) {
            for (double m : {c.precision, c.recall, c.f1}) {
                EXPECT_GE(m, 0.0);
                EXPECT_LE(m, 1.0);
            }
            if (c.precision > 0 && c.recall > 0) {
                EXPECT_NEAR(c.f1, 2.0 / (1.0 / c.precision + 1.0 / c.recall), 1e-12);
            }
        }
        const double lo = std::min(r.per_class[0].recall, r.per_class[1].recall);
        const double hi = std::max(r.per_class[0].recall, r.per_class[1].recall);
        if (r.per_class[0].support > 0 && r.per_class[1].support > 0) {
            EXPECT_GE(r.accuracy, lo - 1e-12);
            EXPECT_LE(r.accuracy, hi + 1e-12);
        }
    }
}

TEST(Report, TextAndJsonRendering) {
    EvaluationReport r = report({7, 3, 5, 0});
    r.model_kind = "gaussian_nb";
    r.feature_set_id = "core2";
    const std::string text = format_report(r);
    for (const char* s : {"precision", "recall", "f1-score", "support", "accuracy", "0.70", "1.00", "0.82"}) {
        EXPECT_NE(text.find(s), std::string::npos) << s << "\n" << text;
    }
    const std::string json = report_to_json(r);
    EXPECT_NE(json.find("\"confusion\""), std::string::npos) << json;
    EXPECT_NE(json.find("\"gaussian_nb\""), std::string::npos);
}

TEST(Evaluate, ConservesExampleCount) {
    const auto [train_set, test_set] = stratified_split(cv_data(), 0.8, 42);
    const ModelArtifact m = train(ModelKind::GaussianNb, train_set, FeatureSet::Core2, {});
    const EvaluationReport r = evaluate(m, test_set);
    EXPECT_EQ(r.matrix.total(), test_set.size());
    EXPECT_EQ(r.model_kind, "gaussian_nb");
    EXPECT_EQ(r.feature_set_id, "core2");
    EXPECT_EQ(r.per_class[1].support, test_set.class_counts()[1]);
}

TEST(Folds, PartitionArithmetic) {
    const auto y = labels({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    const auto folds = stratified_folds(y, 5, 3);
    std::array<std::array<int, 2>, 5> per{};
    for (std::size_t i = 0; i < y.size(); ++i) per[folds[i]][to_int(y[i])]++;
    for (const auto& f : per) {
        EXPECT_EQ(f[0] + f[1], 2);
        EXPECT_EQ(f[0], 1);
    }
    EXPECT_EQ(stratified_folds(y, 5, 3), folds);
    EXPECT_TW_ERROR(stratified_folds(labels({0, 0, 0, 1, 1}), 3, 1), Errc::TooFewExamples);
    EXPECT_TW_ERROR(stratified_folds(labels({0, 0, 0}), 2, 1), Errc::SingleClass);
    EXPECT_TW_ERROR(stratified_folds(y, 1, 1), Errc::InvalidArgument);
}

TEST(Folds, StratificationProperty) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto k = static_cast<std::size_t>(rng.between(2, 7));
        const auto n0 = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(k), 60));
        const auto n1 = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(k), 60));
        std::vector<Label> y(n0, Label::Normal);
        y.insert(y.end(), n1, Label::Tunnel);
        rng.shuffle(std::span<Label>(y));
        const auto folds = stratified_folds(y, k, rng.next_u64());
        std::vector<std::array<double, 2>> per(k);
        std::vector<std::size_t> sizes(k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            ASSERT_LT(folds[i], k);
            per[folds[i]][to_int(y[i])] += 1;
            sizes[folds[i]]++;
        }
        for (std::size_t f = 0; f < k; ++f) {
            EXPECT_LE(std::fabs(per[f][0] - static_cast<double>(n0) / static_cast<double>(k)), 1.0);
            EXPECT_LE(std::fabs(per[f][1] - static_cast<double>(n1) / static_cast<double>(k)), 1.0);
        }
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        EXPECT_LE(*hi - *lo, 1u);
    }
}

TEST(CrossValidation, EveryExampleValidatedOnce) {
    const CrossValidationResult cv = kfold_cv(ModelKind::GaussianNb, cv_data(), 5, FeatureSet::Core2, {}, 8);
    ASSERT_EQ(cv.folds.size(), 5u);
    std::size_t total = 0;
    double mean_f1 = 0.0;
    for (const auto& r : cv.folds) {
        total += r.matrix.total();
        mean_f1 += r.tunnel().f1;
    }
    EXPECT_EQ(total, cv_data().size());
    EXPECT_NEAR(cv.f1.mean, mean_f1 / 5.0, 1e-12);
    EXPECT_GE(cv.f1.stddev, 0.0);
    EXPECT_EQ(cv.fold_of.size(), cv_data().size());

    const CrossValidationResult again = kfold_cv(ModelKind::GaussianNb, cv_data(), 5, FeatureSet::Core2, {}, 8);
    EXPECT_EQ(again.fold_of, cv.fold_of);
    EXPECT_EQ(again.f1.mean, cv.f1.mean);
}

TEST(GridSearch, SinglePointAndArgmax) {
    const ParamGrid single{{"k", {3}}};
    const SearchResult one = grid_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, single, {}, 3, 1);
    EXPECT_EQ(one.best.k, 3u);
    ASSERT_EQ(one.points.size(), 1u);

    const ParamGrid grid{{"max_depth", {1, 12}}, {"min_samples_split", {2, 4}}};
    const SearchResult r = grid_search(ModelKind::DecisionTree, cv_data(), FeatureSet::Lex7, grid, {}, 3, 1);
    ASSERT_EQ(r.points.size(), 4u);
    EXPECT_EQ(r.points[0].values, (std::vector<std::pair<std::string, double>>{{"max_depth", 1}, {"min_samples_split", 2}}));
    EXPECT_EQ(r.points[1].values[1].second, 4.0);
    double best = -1.0;
    for (const auto& p : r.points) best = std::max(best, p.mean_f1);
    EXPECT_EQ(r.best_f1, best);
    EXPECT_EQ(r.points[r.best_index].mean_f1, best);
    for (std::size_t i = 0; i < r.best_index; ++i) EXPECT_LT(r.points[i].mean_f1, best);
    EXPECT_EQ(r.best, r.points[r.best_index].hyperparams);
}

TEST(GridSearch, TiesGoToFirstPoint) {
    // Variance floors this small leave every GNB prediction unchanged, so the points tie.
    const ParamGrid grid{{"var_smoothing", {1e-9, 1e-10, 1e-11}}};
    const SearchResult r = grid_search(ModelKind::GaussianNb, cv_data(), FeatureSet::Core2, grid, {}, 3, 2);
    ASSERT_EQ(r.points.size(), 3u);
    EXPECT_EQ(r.points[0].mean_f1, r.points[1].mean_f1);
    EXPECT_EQ(r.best_index, 0u);
    EXPECT_TW_ERROR(grid_search(ModelKind::GaussianNb, cv_data(), FeatureSet::Core2, {}, {}, 3, 2), Errc::EmptyGrid);
    const ParamGrid empty_axis{{"k", {}}};
    EXPECT_TW_ERROR(grid_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, empty_axis, {}, 3, 2), Errc::EmptyGrid);
}

TEST(RandomSearch, DeterministicAndInRange) {
    const std::vector<ParamDistribution> dists{
        {"k", ParamDistribution::Type::Integer, 1, 9, {}},
        {"threshold", ParamDistribution::Type::Uniform, 0.3, 0.7, {}},
        {"lambda", ParamDistribution::Type::LogUniform, 1e-5, 1e-2, {}},
    };
    const SearchResult a = random_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, dists, 4, {}, 3, 11);
    const SearchResult b = random_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, dists, 4, {}, 3, 11);
    ASSERT_EQ(a.points.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(a.points[i].values, b.points[i].values);
        EXPECT_EQ(a.points[i].mean_f1, b.points[i].mean_f1);
        const auto& hp = a.points[i].hyperparams;
        EXPECT_GE(hp.k, 1u);
        EXPECT_LE(hp.k, 9u);
        EXPECT_GE(hp.threshold, 0.3);
        EXPECT_LE(hp.threshold, 0.7);
        EXPECT_GE(hp.svm_lambda, 1e-5);
        EXPECT_LE(hp.svm_lambda, 1e-2);
    }
    const SearchResult one = random_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, dists, 1, {}, 3, 11);
    EXPECT_EQ(one.best_index, 0u);
    EXPECT_EQ(one.best, one.points[0].hyperparams);
    EXPECT_TW_ERROR(random_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, dists, 0, {}, 3, 11),
                    Errc::InvalidArgument);
    EXPECT_TW_ERROR(random_search(ModelKind::Knn, cv_data(), FeatureSet::Core2, {}, 2, {}, 3, 11), Errc::EmptyGrid);
}

TEST(RandomSearch, SamplersRespectRanges) {
    Rng rng(3);
    const ParamDistribution choice{"k", ParamDistribution::Type::Choice, 0, 0, {1, 3, 5}};
    const ParamDistribution integer{"k", ParamDistribution::Type::Integer, 2, 4, {}};
    std::set<double> seen;
    for (int i = 0; i < 300; ++i) {
        const double c = choice.sample(rng);
        EXPECT_TRUE(c == 1 || c == 3 || c == 5);
        const double v = integer.sample(rng);
        EXPECT_EQ(v, std::floor(v));
        seen.insert(v);
    }
    EXPECT_EQ(seen, (std::set<double>{2, 3, 4}));
}

TEST(Boundary, StructureAndConstantModel) {
    const BoundaryGrid g = boundary_grid(tw_test::constant_network(0.0), {0.0, 6.0}, {1.0, 100.0}, 3, 3);
    EXPECT_EQ(g.cells.size(), 9u);
    for (Label l : g.cells) EXPECT_EQ(l, Label::Tunnel);
    EXPECT_EQ(g.entropy_at(0), 0.0);
    EXPECT_EQ(g.entropy_at(1), 3.0);
    EXPECT_EQ(g.entropy_at(2), 6.0);
    EXPECT_EQ(g.length_at(2), 100.0);

    std::ostringstream csv;
    write_boundary_csv(g, csv);
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "entropy,length,label");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
    EXPECT_NE(text.find("\n3,1,1\n"), std::string::npos) << text;
}

TEST(Boundary, MatchesPredictAtTrainingPoints) {
    const Dataset d = generate_synthetic({.n_normal = 150, .n_tunnel = 150, .rng_seed = 30});
    const ModelArtifact m = train(ModelKind::DecisionTree, d, FeatureSet::Core2, {});
    for (std::size_t i = 0; i < 20; ++i) {
        const FeatureVector v = extract_features(d.examples()[i].domain, FeatureSet::Core2);
        // a 2x2 grid whose lower corner is the example's own feature point
        const BoundaryGrid g =
            boundary_grid(m, {v.entropy, v.entropy + 1.0}, {static_cast<double>(v.length), v.length + 10.0}, 2, 2);
        EXPECT_EQ(g.at(0, 0), predict(m, v).label);
    }
    const BoundaryGrid a = boundary_grid(m, {0.0, 6.0}, {1.0, 100.0}, 50, 40);
    const BoundaryGrid b = boundary_grid(m, {0.0, 6.0}, {1.0, 100.0}, 50, 40);
    EXPECT_EQ(a.cells, b.cells);
    EXPECT_EQ(a.cells.size(), 2000u);
}

TEST(Boundary, Errors) {
    ModelArtifact lex = tw_test::constant_network(0.0);
    lex.feature_set = FeatureSet::Lex7;
    EXPECT_TW_ERROR(boundary_grid(lex, {0, 6}, {1, 100}, 3, 3), Errc::FeatureSetMismatch);
    const ModelArtifact m = tw_test::constant_network(0.0);
    EXPECT_TW_ERROR(boundary_grid(m, {0, 6}, {1, 100}, 1, 3), Errc::BadRange);
    EXPECT_TW_ERROR(boundary_grid(m, {6, 6}, {1, 100}, 3, 3), Errc::BadRange);
    EXPECT_TW_ERROR(boundary_grid(m, {0, 6}, {100, 1}, 3, 3), Errc::BadRange);
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(3.0), "3");
    EXPECT_EQ(format_double(0.1), "0.1");
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-1e6, 1e6);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}
