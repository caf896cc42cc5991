#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tunnelwatch/matrix.hpp"
#include "tunnelwatch/network.hpp"

namespace tw_test {

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t parameters = 0;
};

/// Compares analytic gradients with central differences for every weight and
/// bias. Relative error is |a - n| / max(|a| + |n|, floor); the floor keeps
/// parameters with vanishing gradient from dividing round-off by ~0.
inline GradientCheck check_gradients(tunnelwatch::NetworkParams net, const tunnelwatch::Matrix& x,
                                     std::span<const double> y, std::span<const double> w, double step = 1e-5,
                                     double floor = 1e-7) {
    using namespace tunnelwatch;
    NetworkGradients analytic;
    network_loss(net, x, y, w, &analytic);

    GradientCheck result;
    auto probe = [&](double& param, double grad) {
        const double saved = param;
        param = saved + step;
        const double plus = network_loss(net, x, y, w, nullptr);
        param = saved - step;
        const double minus = network_loss(net, x, y, w, nullptr);
        param = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double rel = std::fabs(grad - numeric) / std::max(std::fabs(grad) + std::fabs(numeric), floor);
        result.max_relative_error = std::max(result.max_relative_error, rel);
        ++result.parameters;
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t i = 0; i < net.layers[l].weights.size(); ++i) probe(net.layers[l].weights[i], analytic.weights[l][i]);
        for (std::size_t i = 0; i < net.layers[l].bias.size(); ++i) probe(net.layers[l].bias[i], analytic.bias[l][i]);
    }
    return result;
}

} // namespace tw_test
