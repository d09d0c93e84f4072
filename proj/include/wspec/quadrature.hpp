#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "wspec/core.hpp"

namespace wspec {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule make_gauss_legendre(std::size_t n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Newton on P_n, seeded by the Chebyshev-like root estimate.
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int pass = 0; pass < 100; ++pass) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) + 1.0) * x * p1 -
                      static_cast<double>(j) * p2) /
                     (static_cast<double>(j) + 1.0);
            }
            dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double step = p0 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

}  // namespace detail

/// Cached Gauss-Legendre rule; thread-safe, computed once per node count.
inline const GaussLegendreRule& gauss_legendre(std::size_t n) {
    if (n < 1) throw DomainError("quadrature rule needs at least one node");
    static std::mutex mutex;
    static std::map<std::size_t, GaussLegendreRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::make_gauss_legendre(n)).first;
    return it->second;
}

}  // namespace wspec
