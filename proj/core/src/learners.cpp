#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tunnelwatch/error.hpp"
#include "tunnelwatch/model.hpp"
#include "tunnelwatch/random.hpp"

namespace tunnelwatch {

// -- k nearest neighbours ------------------------------------------------------

double knn_score(const KnnParams& p, std::size_t k, std::span<const double> x) {
    const std::size_t n = p.points.rows();
    if (n == 0) throw Error(Errc::InvalidArgument, "knn model holds no points");
    k = std::min(k, n);

    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = p.points.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (row[j] - x[j]) * (row[j] - x[j]);
        dist[i] = {s, i};
    }
    // Pair ordering breaks distance ties by the smaller training index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < k; ++i) positives += p.labels[dist[i].second] == Label::Tunnel;
    return static_cast<double>(positives) / static_cast<double>(k);
}

// -- CART ----------------------------------------------------------------------

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
};

double gini(double pos, double total) {
    if (total <= 0.0) return 0.0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const Label> y, std::size_t max_depth, std::size_t min_samples_split,
                std::size_t features_per_split, std::uint64_t seed)
        : x_(x), y_(y), max_depth_(max_depth), min_samples_split_(min_samples_split),
          features_per_split_(features_per_split == 0 ? x.cols() : std::min(features_per_split, x.cols())),
          rng_(seed) {}

    TreeParams build(std::vector<std::size_t> sample) {
        grow(std::move(sample), 0);
        return std::move(tree_);
    }

private:
    std::uint32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        std::size_t positives = 0;
        for (std::size_t r : rows) positives += y_[r] == Label::Tunnel;
        tree_.nodes[id].value = static_cast<double>(positives) / static_cast<double>(rows.size());

        const bool pure = positives == 0 || positives == rows.size();
        if (pure || depth >= max_depth_ || rows.size() < min_samples_split_) return id;

        const Split split = best_split(rows, positives);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t r : rows) {
            (x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        tree_.nodes[id].feature = split.feature;
        tree_.nodes[id].threshold = split.threshold;
        const std::uint32_t l = grow(std::move(left), depth + 1);
        const std::uint32_t r = grow(std::move(right), depth + 1);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    // Examines features in a random order until features_per_split
    // non-constant ones have been scanned (at least one valid split if any).
    Split best_split(const std::vector<std::size_t>& rows, std::size_t positives) {
        std::vector<std::size_t> order(x_.cols());
        std::iota(order.begin(), order.end(), 0);
        if (features_per_split_ < x_.cols()) rng_.shuffle(std::span<std::size_t>(order));

        Split best;
        best.impurity = std::numeric_limits<double>::infinity();
        const double total = static_cast<double>(rows.size());
        std::vector<std::pair<double, Label>> column(rows.size());
        std::size_t scanned = 0;
        for (std::size_t feature : order) {
            if (scanned >= features_per_split_) break;
            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], feature), y_[rows[i]]};
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (column.front().first == column.back().first) continue;
            ++scanned;

            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left_pos += column[i].second == Label::Tunnel;
                if (column[i].first == column[i + 1].first) continue;
                const double left_n = static_cast<double>(i + 1);
                const double right_n = total - left_n;
                const double right_pos = static_cast<double>(positives) - left_pos;
                const double impurity = (left_n * gini(left_pos, left_n) + right_n * gini(right_pos, right_n)) / total;
                if (impurity < best.impurity) {
                    double threshold = 0.5 * (column[i].first + column[i + 1].first);
                    if (!(threshold < column[i + 1].first)) threshold = column[i].first;
                    best = {static_cast<int>(feature), threshold, impurity};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const Label> y_;
    std::size_t max_depth_;
    std::size_t min_samples_split_;
    std::size_t features_per_split_;
    Rng rng_;
    TreeParams tree_;
};

} // namespace

TreeParams fit_tree(const Matrix& x, std::span<const Label> y, std::span<const std::size_t> sample, std::size_t max_depth,
                    std::size_t min_samples_split, std::size_t features_per_split, std::uint64_t seed) {
    if (sample.empty()) throw Error(Errc::Empty, "tree needs at least one sample");
    TreeBuilder builder(x, y, max_depth, min_samples_split, features_per_split, seed);
    return builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
}

double tree_score(const TreeParams& tree, std::span<const double> x) {
    std::size_t node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& n = tree.nodes[node];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[node].value;
}

ForestParams fit_forest(const Matrix& x, std::span<const Label> y, const Hyperparams& hp) {
    const std::size_t n = x.rows();
    const std::size_t per_split = hp.features_per_split != 0
                                      ? hp.features_per_split
                                      : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
    ForestParams forest;
    forest.trees.reserve(hp.n_trees);
    std::vector<std::size_t> sample(n);
    for (std::size_t t = 0; t < hp.n_trees; ++t) {
        // Each tree draws from its own derived stream, so trees are independent
        // of fitting order.
        const std::uint64_t tree_seed = derive_seed(hp.rng_seed, t);
        Rng rng(tree_seed);
        if (hp.bootstrap) {
            for (auto& s : sample) s = rng.below(n);
        } else {
            std::iota(sample.begin(), sample.end(), 0);
        }
        forest.trees.push_back(
            fit_tree(x, y, sample, hp.max_depth, hp.min_samples_split, per_split, derive_seed(tree_seed, 1)));
    }
    return forest;
}

// -- hinge-loss SVM ------------------------------------------------------------

std::vector<double> quadratic_expand(std::span<const double> x) {
    const std::size_t d = x.size();
    std::vector<double> out(x.begin(), x.end());
    out.reserve(d + d + d * (d - 1) / 2);
    for (std::size_t i = 0; i < d; ++i) out.push_back(x[i] * x[i]);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) out.push_back(x[i] * x[j]);
    }
    return out;
}

double svm_decision(const LinearParams& p, std::span<const double> x) {
    std::vector<double> expanded;
    std::span<const double> z = x;
    if (p.quadratic) {
        expanded = quadratic_expand(x);
        z = expanded;
    }
    double s = p.bias;
    for (std::size_t j = 0; j < z.size(); ++j) s += p.weights[j] * z[j];
    return s;
}

LinearParams fit_hinge_svm(const Matrix& x, std::span<const Label> y, double lambda, std::size_t epochs,
                           std::uint64_t seed, bool quadratic) {
    Matrix z;
    if (quadratic) {
        for (std::size_t r = 0; r < x.rows(); ++r) z.append_row(quadratic_expand(x.row(r)));
    } else {
        z = x;
    }

    LinearParams p;
    p.quadratic = quadratic;
    p.weights.assign(z.cols(), 0.0);
    Rng rng(seed);
    std::vector<std::size_t> order(z.rows());
    std::iota(order.begin(), order.end(), 0);

    // SGD on lambda/2 |w|^2 + hinge, step eta_t = eta0 / (1 + lambda eta0 t).
    constexpr double eta0 = 1.0;
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t r : order) {
            const double eta = eta0 / (1.0 + lambda * eta0 * static_cast<double>(t++));
            const double target = y[r] == Label::Tunnel ? 1.0 : -1.0;
            const auto row = z.row(r);
            double margin = p.bias;
            for (std::size_t j = 0; j < row.size(); ++j) margin += p.weights[j] * row[j];
            const double shrink = 1.0 - eta * lambda;
            for (double& w : p.weights) w *= shrink;
            if (target * margin < 1.0) {
                for (std::size_t j = 0; j < row.size(); ++j) p.weights[j] += eta * target * row[j];
                p.bias += eta * target;
            }
        }
    }
    return p;
}

} // namespace tunnelwatch
