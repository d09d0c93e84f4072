#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/ensemble.hpp"

namespace wspec {

enum class MethodTag { replica, bp, exact, mp, trace_form };

inline const char* to_string(MethodTag tag) {
    switch (tag) {
        case MethodTag::replica: return "replica";
        case MethodTag::bp: return "bp";
        case MethodTag::exact: return "exact";
        case MethodTag::mp: return "mp";
        case MethodTag::trace_form: return "trace_form";
    }
    return "?";
}

struct CurveEntry {
    double lambda = 0.0;
    double rho = std::numeric_limits<double>::quiet_NaN();  // NaN when not converged
    Complex chi_w{0.0, 0.0};
    std::size_t iterations = 0;
    bool converged = false;
};

/// Sampled density rho(lambda) with per-point convergence diagnostics.
/// Entries are kept in ascending lambda order; non-converged entries carry a
/// NaN density and are skipped by integrals and comparisons.
struct DensityCurve {
    std::vector<CurveEntry> entries;
    MethodTag method = MethodTag::replica;
    EnsembleSpec ensemble;
    double epsilon = 0.0;  // regularizer the sweep ran at

    std::size_t converged_count() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.converged ? 1 : 0;
        return n;
    }

    void sort_ascending() {
        std::sort(entries.begin(), entries.end(),
                  [](const CurveEntry& a, const CurveEntry& b) { return a.lambda < b.lambda; });
    }
};

/// Trapezoid value of the integral of rho(lambda) * weight(lambda) over the
/// converged part of the curve. Needs at least two converged points.
template <class Weight>
double trapezoid_integrate(const DensityCurve& curve, Weight&& weight) {
    std::vector<std::pair<double, double>> pts;  // (lambda, rho * weight)
    pts.reserve(curve.entries.size());
    for (const auto& e : curve.entries) {
        if (!e.converged) continue;
        const double w = weight(e.lambda);
        if (!std::isfinite(w))
            throw EvaluationError("trapezoid_integrate: non-finite weight at lambda=" +
                                  std::to_string(e.lambda));
        pts.emplace_back(e.lambda, e.rho * w);
    }
    if (pts.size() < 2)
        throw InsufficientGrid("trapezoid_integrate needs >= 2 converged points");
    std::sort(pts.begin(), pts.end());
    double acc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        acc += 0.5 * (pts[i].second + pts[i - 1].second) * (pts[i].first - pts[i - 1].first);
    return acc;
}

inline double curve_mass(const DensityCurve& curve) {
    return trapezoid_integrate(curve, [](double) { return 1.0; });
}

}  // namespace wspec
