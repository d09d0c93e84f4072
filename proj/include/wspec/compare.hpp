#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/curve.hpp"

namespace wspec {

struct SupportEdges {
    double lambda_min_hat = 0.0;
    double lambda_max_hat = 0.0;
};

/// Outermost crossings of rho = threshold, linearly interpolated between
/// neighboring converged grid points. When the density is still above the
/// threshold at a grid end, that end is reported (support clipped by grid).
inline SupportEdges estimate_support_edges(const DensityCurve& curve,
                                           double threshold = 1e-3) {
    if (!(threshold > 0.0)) throw DomainError("edge threshold must be > 0");
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : curve.entries)
        if (e.converged) pts.emplace_back(e.lambda, e.rho);
    if (pts.size() < 10)
        throw DomainError("estimate_support_edges needs >= 10 converged points");
    std::sort(pts.begin(), pts.end());

    std::ptrdiff_t first = -1, last = -1;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pts.size()); ++i) {
        if (pts[i].second > threshold) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) throw NoSupportDetected("density never exceeds the edge threshold");

    auto cross = [&](std::size_t below, std::size_t above) {
        const double la = pts[below].first, ra = pts[below].second;
        const double lb = pts[above].first, rb = pts[above].second;
        return la + (threshold - ra) / (rb - ra) * (lb - la);
    };
    SupportEdges edges;
    edges.lambda_min_hat = first > 0 ? cross(first - 1, first) : pts[first].first;
    edges.lambda_max_hat = last + 1 < static_cast<std::ptrdiff_t>(pts.size())
                               ? cross(last + 1, last)
                               : pts[last].first;
    return edges;
}

/// Linear interpolation of the converged part of a curve onto new abscissae.
/// Points outside the curve's converged span evaluate to 0.
inline std::vector<double> resample_density(const DensityCurve& curve,
                                            const std::vector<double>& lambdas) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : curve.entries)
        if (e.converged) pts.emplace_back(e.lambda, e.rho);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out(lambdas.size(), 0.0);
    if (pts.empty()) return out;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double x = lambdas[i];
        if (x < pts.front().first || x > pts.back().first) continue;
        auto it = std::lower_bound(pts.begin(), pts.end(), std::make_pair(x, -1.0));
        if (it == pts.begin()) {
            out[i] = it->second;
            continue;
        }
        const auto hi = it == pts.end() ? pts.end() - 1 : it;
        const auto lo = hi - (hi->first > x ? 1 : 0);
        if (lo == hi || hi->first == lo->first) {
            out[i] = lo->second;
        } else {
            const double u = (x - lo->first) / (hi->first - lo->first);
            out[i] = (1.0 - u) * lo->second + u * hi->second;
        }
    }
    return out;
}

struct CurveSummary {
    MethodTag method = MethodTag::replica;
    SupportEdges edges;
    double mass = 0.0;
    bool edges_detected = false;
};

struct PairDistance {
    std::size_t first = 0;
    std::size_t second = 0;
    double sup_norm = 0.0;
    double l1 = 0.0;
};

struct CompareReport {
    std::vector<CurveSummary> curves;
    std::vector<PairDistance> pairwise;  // bulk-restricted distances
    double bulk_lo = 0.0;
    double bulk_hi = 0.0;
    bool disjoint_supports = false;
};

/// Resample every curve onto the common grid and measure pairwise sup-norm
/// and L1 distances over the shared bulk: the intersection of the detected
/// supports shrunk by bulk_margin_bins grid steps on each side (edge
/// broadening is grid- and finite-N-limited, so full-line norms would
/// measure discretization rather than method error).
inline CompareReport compare(const std::vector<DensityCurve>& curves,
                             const LambdaGrid& grid, std::size_t bulk_margin_bins = 2,
                             double edge_threshold = 1e-3) {
    if (curves.size() < 2) throw DomainError("compare needs at least two curves");
    require_valid(grid);

    CompareReport report;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& curve : curves) {
        CurveSummary summary;
        summary.method = curve.method;
        try {
            summary.edges = estimate_support_edges(curve, edge_threshold);
            summary.edges_detected = true;
            lo = std::max(lo, summary.edges.lambda_min_hat);
            hi = std::min(hi, summary.edges.lambda_max_hat);
        } catch (const NoSupportDetected&) {
            summary.edges_detected = false;
        }
        try {
            summary.mass = curve_mass(curve);
        } catch (const InsufficientGrid&) {
            summary.mass = std::numeric_limits<double>::quiet_NaN();
        }
        report.curves.push_back(summary);
    }

    const double step = std::abs(grid.step());
    const double margin = static_cast<double>(bulk_margin_bins) * step;
    report.bulk_lo = lo + margin;
    report.bulk_hi = hi - margin;
    std::vector<double> xs;
    for (const auto& pt : grid.points)
        if (pt.lambda >= report.bulk_lo && pt.lambda <= report.bulk_hi)
            xs.push_back(pt.lambda);
    if (xs.size() < 2) {
        report.disjoint_supports = true;
        return report;
    }

    std::vector<std::vector<double>> sampled;
    sampled.reserve(curves.size());
    for (const auto& curve : curves) sampled.push_back(resample_density(curve, xs));

    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t j = i + 1; j < curves.size(); ++j) {
            PairDistance dist;
            dist.first = i;
            dist.second = j;
            double sup = 0.0, l1 = 0.0;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                const double diff = std::abs(sampled[i][k] - sampled[j][k]);
                sup = std::max(sup, diff);
                if (k + 1 < xs.size()) {
                    const double next =
                        std::abs(sampled[i][k + 1] - sampled[j][k + 1]);
                    l1 += 0.5 * (diff + next) * (xs[k + 1] - xs[k]);
                }
            }
            dist.sup_norm = sup;
            dist.l1 = l1;
            report.pairwise.push_back(dist);
        }
    }
    return report;
}

}  // namespace wspec
