#include <algorithm>
#include <cmath>
#include <numbers>

#include "tunnelwatch/error.hpp"
#include "tunnelwatch/model.hpp"

namespace tunnelwatch {

namespace {

std::array<double, 2> softmax2(double l0, double l1) {
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m);
    const double e1 = std::exp(l1 - m);
    const double total = e0 + e1;
    return {e0 / total, e1 / total};
}

std::array<std::size_t, 2> count_classes(std::span<const Label> y) {
    std::array<std::size_t, 2> counts{};
    for (Label label : y) ++counts[to_int(label)];
    return counts;
}

} // namespace

GaussianNbParams fit_gaussian_nb(const Matrix& x, std::span<const Label> y, double var_smoothing) {
    const std::size_t d = x.cols();
    const auto counts = count_classes(y);
    if (counts[0] == 0 || counts[1] == 0) throw Error(Errc::SingleClass, "gaussian_nb needs both classes");

    GaussianNbParams p;
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < 2; ++c) {
        p.priors[c] = static_cast<double>(counts[c]) / n;
        p.means[c].assign(d, 0.0);
        p.variances[c].assign(d, 0.0);
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto c = static_cast<std::size_t>(to_int(y[r]));
        for (std::size_t j = 0; j < d; ++j) p.means[c][j] += x(r, j);
    }
    for (std::size_t c = 0; c < 2; ++c) {
        for (double& m : p.means[c]) m /= static_cast<double>(counts[c]);
    }
    // Population variance (divide by n).
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto c = static_cast<std::size_t>(to_int(y[r]));
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x(r, j) - p.means[c][j];
            p.variances[c][j] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < 2; ++c) {
        for (double& v : p.variances[c]) v /= static_cast<double>(counts[c]);
    }

    double max_variance = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, j) - mean) * (x(r, j) - mean);
        max_variance = std::max(max_variance, var / n);
    }
    p.variance_floor = var_smoothing * max_variance;
    for (std::size_t c = 0; c < 2; ++c) {
        for (double& v : p.variances[c]) v = std::max(v, p.variance_floor);
    }
    return p;
}

std::array<double, 2> gaussian_nb_posteriors(const GaussianNbParams& p, std::span<const double> x) {
    std::array<double, 2> log_joint{};
    for (std::size_t c = 0; c < 2; ++c) {
        double l = std::log(p.priors[c]);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double var = p.variances[c][j];
            const double diff = x[j] - p.means[c][j];
            l -= 0.5 * std::log(2.0 * std::numbers::pi * var) + diff * diff / (2.0 * var);
        }
        log_joint[c] = l;
    }
    return softmax2(log_joint[0], log_joint[1]);
}

std::size_t bin_index(const BinnedNbParams& p, std::size_t feature, double value) {
    const double lo = p.bin_lo[feature];
    const double hi = p.bin_hi[feature];
    if (!(hi > lo)) return 0;
    const double pos = (value - lo) / (hi - lo) * static_cast<double>(p.bins);
    if (!(pos > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(pos), p.bins - 1);
}

BinnedNbParams fit_binned_nb(const Matrix& x, std::span<const Label> y, std::size_t bins, double alpha, bool bernoulli) {
    const std::size_t d = x.cols();
    const auto counts = count_classes(y);
    if (counts[0] == 0 || counts[1] == 0) throw Error(Errc::SingleClass, "naive bayes needs both classes");
    if (bins == 0) throw Error(Errc::InvalidArgument, "bin count must be positive");

    BinnedNbParams p;
    p.bins = bins;
    p.bin_lo.assign(d, 0.0);
    p.bin_hi.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double lo = x(0, j);
        double hi = x(0, j);
        for (std::size_t r = 1; r < x.rows(); ++r) {
            lo = std::min(lo, x(r, j));
            hi = std::max(hi, x(r, j));
        }
        p.bin_lo[j] = lo;
        p.bin_hi[j] = hi;
    }

    const std::size_t slots = d * bins;
    std::array<std::vector<double>, 2> occupancy{std::vector<double>(slots, 0.0), std::vector<double>(slots, 0.0)};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto c = static_cast<std::size_t>(to_int(y[r]));
        for (std::size_t j = 0; j < d; ++j) occupancy[c][j * bins + bin_index(p, j, x(r, j))] += 1.0;
    }

    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < 2; ++c) {
        p.priors[c] = static_cast<double>(counts[c]) / n;
        p.prob[c].assign(slots, 0.0);
        if (bernoulli) {
            // Fraction of class-c rows with this bin occupied.
            const double denom = static_cast<double>(counts[c]) + 2.0 * alpha;
            for (std::size_t s = 0; s < slots; ++s) p.prob[c][s] = (occupancy[c][s] + alpha) / denom;
        } else {
            // Each row contributes d counts (one per feature).
            const double denom = static_cast<double>(counts[c] * d) + alpha * static_cast<double>(slots);
            for (std::size_t s = 0; s < slots; ++s) p.prob[c][s] = (occupancy[c][s] + alpha) / denom;
        }
    }
    return p;
}

std::array<double, 2> binned_nb_posteriors(const BinnedNbParams& p, std::span<const double> x, bool bernoulli) {
    const std::size_t d = x.size();
    std::array<double, 2> log_joint{};
    for (std::size_t c = 0; c < 2; ++c) {
        double l = std::log(p.priors[c]);
        if (bernoulli) {
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t hit = bin_index(p, j, x[j]);
                for (std::size_t b = 0; b < p.bins; ++b) {
                    const double q = p.prob[c][j * p.bins + b];
                    l += b == hit ? std::log(q) : std::log1p(-q);
                }
            }
        } else {
            for (std::size_t j = 0; j < d; ++j) l += std::log(p.prob[c][j * p.bins + bin_index(p, j, x[j])]);
        }
        log_joint[c] = l;
    }
    return softmax2(log_joint[0], log_joint[1]);
}

} // namespace tunnelwatch
