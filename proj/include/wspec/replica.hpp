#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/curve.hpp"
#include "wspec/ensemble.hpp"
#include "wspec/laws.hpp"

namespace wspec {

// ---------------------------------------------------------------------------
// Order parameters
// ---------------------------------------------------------------------------

/// The four complex order parameters at one spectral point. At a converged
/// point on the physical (retarded) branch, Im chi_w < 0 inside the bulk and
/// the consistency identities
///
///   chi_s = (1 - z*chi_w) / (alpha*chi_t),   chi_t = (1 + chi_u) / chi_s
///
/// hold within solver tolerance, where z = lambda + i*epsilon.
struct OrderParams {
    Complex chi_w{};
    Complex chi_s{};
    Complex chi_u{};
    Complex chi_t{};
    SpectralPoint point{};
};

struct SolveResult {
    OrderParams params{};
    std::size_t iterations = 0;
    bool converged = false;
    double residual = 0.0;
};

/// rho = -Im(chi_w)/pi. Values in (-1e-8, 0) are clamped to zero; a larger
/// negative density means the iteration left the retarded branch.
inline double density_from_chi(const OrderParams& params) {
    const double rho = -params.chi_w.imag() / kPi;
    if (rho < -1e-8)
        throw NegativeDensity("density " + std::to_string(rho) +
                              " < -1e-8: wrong branch at lambda=" +
                              std::to_string(params.point.lambda));
    return rho < 0.0 ? 0.0 : rho;
}

namespace detail {

inline constexpr double kDenomFloor = 1e-13;

inline void guard_denominator(Complex denom, const char* what) {
    if (std::abs(denom) < kDenomFloor)
        throw SingularDenominator(std::string("singular denominator in ") + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Saddle-point solvers
// ---------------------------------------------------------------------------

/// Row-variance ensemble (M = diag(s), Theta = I). Solves
///
///   chi_s = < s / (z + alpha*s/(chi_s - 1)) >_s
///
/// by damped iteration, then evaluates chi_w = < 1/(z + alpha*s/(chi_s-1)) >_s
/// once at the fixed point. chi_u = chi_t = 1/(chi_s - 1).
inline SolveResult solve_case1(const HyperparameterLaw& law_s, double alpha,
                               SpectralPoint point, const SolverConfig& cfg,
                               std::optional<Complex> init = std::nullopt) {
    if (!(alpha > 0.0)) throw DomainError("solve_case1 requires alpha > 0");
    require_valid(point);
    const Complex z = point.z();
    const Complex chi_s0 = init ? *init : law_s.mean() / z;

    auto map = [&](Complex chi_s) {
        const Complex den = chi_s - 1.0;
        detail::guard_denominator(den, "case-1 map (chi_s - 1)");
        const Complex shift = alpha / den;
        return law_s.expect([&](double s) {
            const Complex d = z + shift * s;
            detail::guard_denominator(d, "case-1 map node");
            return s / d;
        });
    };
    const auto fp = damped_fixed_point(map, chi_s0, cfg);

    const Complex chi_s = fp.solution;
    const Complex den = chi_s - 1.0;
    detail::guard_denominator(den, "case-1 result (chi_s - 1)");
    const Complex shift = alpha / den;
    SolveResult out;
    out.params.chi_s = chi_s;
    out.params.chi_w = law_s.expect([&](double s) { return 1.0 / (z + shift * s); });
    out.params.chi_u = 1.0 / den;
    out.params.chi_t = 1.0 / den;
    out.params.point = point;
    out.iterations = fp.iterations;
    out.converged = fp.converged;
    out.residual = fp.residual;
    return out;
}

/// Column-variance ensemble (M = I, Theta = diag(t)). Solves the pair
///
///   chi_w = 1 / (z + tilde_chi_w),   tilde_chi_w = alpha * < t/(t*chi_w - 1) >_t
///
/// as one damped iteration in chi_w. Reported as chi_s = chi_w and
/// chi_t = tilde_chi_w / alpha, chi_u = < 1/(t*chi_w - 1) >_t.
inline SolveResult solve_case2(const HyperparameterLaw& law_t, double alpha,
                               SpectralPoint point, const SolverConfig& cfg,
                               std::optional<Complex> init = std::nullopt) {
    if (!(alpha > 0.0)) throw DomainError("solve_case2 requires alpha > 0");
    require_valid(point);
    const Complex z = point.z();
    const Complex chi_w0 = init ? *init : 1.0 / z;

    auto conjugate = [&](Complex chi_w) {
        return alpha * law_t.expect([&](double t) {
            const Complex d = t * chi_w - 1.0;
            detail::guard_denominator(d, "case-2 map node (t*chi_w - 1)");
            return t / d;
        });
    };
    auto map = [&](Complex chi_w) { return 1.0 / (z + conjugate(chi_w)); };
    const auto fp = damped_fixed_point(map, chi_w0, cfg);

    const Complex chi_w = fp.solution;
    SolveResult out;
    out.params.chi_w = chi_w;
    out.params.chi_s = chi_w;
    out.params.chi_t = conjugate(chi_w) / alpha;
    out.params.chi_u = law_t.expect([&](double t) { return 1.0 / (t * chi_w - 1.0); });
    out.params.point = point;
    out.iterations = fp.iterations;
    out.converged = fp.converged;
    out.residual = fp.residual;
    return out;
}

/// Kronecker ensemble (M = W S W^T, Theta = U T U^T). Solves the coupled pair
///
///   chi_s = < s / (z + alpha*s*chi_t) >_s,   chi_t = < t / (t*chi_s - 1) >_t
///
/// by synchronous damped iteration on (chi_s, chi_t), then
/// chi_w = < 1/(z + alpha*s*chi_t) >_s and chi_u = < 1/(t*chi_s - 1) >_t.
inline SolveResult solve_case3(const HyperparameterLaw& law_s,
                               const HyperparameterLaw& law_t, double alpha,
                               SpectralPoint point, const SolverConfig& cfg,
                               std::optional<std::array<Complex, 2>> init = std::nullopt) {
    if (!(alpha > 0.0)) throw DomainError("solve_case3 requires alpha > 0");
    require_valid(point);
    const Complex z = point.z();

    std::array<Complex, 2> state0;
    if (init) {
        state0 = *init;
    } else {
        const Complex chi_s0 = law_s.mean() / z;
        const Complex chi_t0 = law_t.expect([&](double t) {
            const Complex d = t * chi_s0 - 1.0;
            detail::guard_denominator(d, "case-3 init node (t*chi_s - 1)");
            return t / d;
        });
        state0 = {chi_s0, chi_t0};
    }

    auto map = [&](const std::array<Complex, 2>& st) {
        const Complex chi_s = st[0];
        const Complex chi_t = st[1];
        const Complex next_s = law_s.expect([&](double s) {
            const Complex d = z + alpha * s * chi_t;
            detail::guard_denominator(d, "case-3 map node (z + alpha*s*chi_t)");
            return s / d;
        });
        const Complex next_t = law_t.expect([&](double t) {
            const Complex d = t * chi_s - 1.0;
            detail::guard_denominator(d, "case-3 map node (t*chi_s - 1)");
            return t / d;
        });
        return std::array<Complex, 2>{next_s, next_t};
    };
    const auto fp = damped_fixed_point(map, state0, cfg);

    const Complex chi_s = fp.solution[0];
    const Complex chi_t = fp.solution[1];
    SolveResult out;
    out.params.chi_s = chi_s;
    out.params.chi_t = chi_t;
    out.params.chi_w =
        law_s.expect([&](double s) { return 1.0 / (z + alpha * s * chi_t); });
    out.params.chi_u =
        law_t.expect([&](double t) { return 1.0 / (t * chi_s - 1.0); });
    out.params.point = point;
    out.iterations = fp.iterations;
    out.converged = fp.converged;
    out.residual = fp.residual;
    return out;
}

// ---------------------------------------------------------------------------
// Marcenko-Pastur closed form
// ---------------------------------------------------------------------------

inline std::pair<double, double> mp_edges(double alpha, double v) {
    if (!(alpha > 0.0) || !(v > 0.0)) throw DomainError("mp law needs alpha > 0, v > 0");
    const double r = std::sqrt(alpha);
    return {(1.0 - r) * (1.0 - r) * v, (1.0 + r) * (1.0 + r) * v};
}

/// Continuous part of the MP density with mean entry variance v:
/// sqrt([l+ - l]^+ [l - l-]^+) / (2 pi lambda v), edges l± = (1 ± sqrt(alpha))^2 v.
/// The point mass [1-alpha]^+ at lambda = 0 is reported by mp_atom, never
/// folded into this value.
inline double mp_density(double alpha, double v, double lambda) {
    const auto [lo, hi] = mp_edges(alpha, v);
    if (lambda < 0.0) throw DomainError("mp_density requires lambda >= 0");
    if (lambda == 0.0) return 0.0;
    const double a = std::max(hi - lambda, 0.0);
    const double b = std::max(lambda - lo, 0.0);
    return std::sqrt(a * b) / (2.0 * kPi * lambda * v);
}

inline double mp_atom(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("mp_atom requires alpha > 0");
    return std::max(1.0 - alpha, 0.0);
}

/// Retarded MP resolvent at complex z (Im z > 0): the root of
/// z*v*chi^2 + (alpha*v - v - z)*chi + 1 = 0 on the physical branch
/// (the root with the smaller imaginary part).
inline Complex mp_stieltjes(double alpha, double v, Complex z) {
    if (!(alpha > 0.0) || !(v > 0.0)) throw DomainError("mp law needs alpha > 0, v > 0");
    const Complex a = z * v;
    const Complex b = alpha * v - v - z;
    const Complex disc = std::sqrt(b * b - 4.0 * a);
    const Complex r1 = (-b + disc) / (2.0 * a);
    const Complex r2 = (-b - disc) / (2.0 * a);
    return r1.imag() <= r2.imag() ? r1 : r2;
}

// ---------------------------------------------------------------------------
// Density curves
// ---------------------------------------------------------------------------

struct CurveOptions {
    /// Run each sweep at epsilon and epsilon/2 and extrapolate the density
    /// linearly in epsilon. chi_w is reported from the epsilon/2 run.
    bool richardson_epsilon = false;
};

namespace detail {

/// Warm-started sweep shared by all replica cases; descending by default
/// (the branch-tracking direction), ascending when the grid says so.
/// solve_one is called point by point and keeps its own warm state.
template <class SolveOne>
DensityCurve sweep_curve(const EnsembleSpec& spec, const LambdaGrid& grid,
                         MethodTag tag, SolveOne&& solve_one) {
    require_valid(grid);
    std::vector<SpectralPoint> order = grid.points;
    std::sort(order.begin(), order.end(),
              [&](const SpectralPoint& a, const SpectralPoint& b) {
                  return grid.descending_sweep ? a.lambda > b.lambda
                                               : a.lambda < b.lambda;
              });
    DensityCurve curve;
    curve.method = tag;
    curve.ensemble = spec;
    curve.epsilon = order.empty() ? 0.0 : order.front().epsilon;
    curve.entries.reserve(order.size());
    for (const auto& pt : order) {
        CurveEntry entry;
        entry.lambda = pt.lambda;
        try {
            const SolveResult res = solve_one(pt);
            entry.chi_w = res.params.chi_w;
            entry.iterations = res.iterations;
            entry.converged = res.converged;
            if (res.converged) entry.rho = density_from_chi(res.params);
        } catch (const NegativeDensity&) {
            entry.converged = false;
        } catch (const SingularDenominator&) {
            entry.converged = false;
        } catch (const NonFiniteIterate&) {
            entry.converged = false;
        }
        curve.entries.push_back(entry);
    }
    curve.sort_ascending();
    return curve;
}

template <class SweepFn>
DensityCurve with_richardson(const LambdaGrid& grid, const CurveOptions& opts,
                             SweepFn&& run) {
    DensityCurve full = run(grid);
    if (!opts.richardson_epsilon) return full;
    LambdaGrid half = grid;
    for (auto& pt : half.points) pt.epsilon *= 0.5;
    DensityCurve fine = run(half);
    // rho(eps) = rho(0) + c*eps  =>  rho(0) ~ 2*rho(eps/2) - rho(eps)
    DensityCurve out = fine;
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        auto& e = out.entries[i];
        const auto& coarse = full.entries[i];
        e.converged = e.converged && coarse.converged;
        e.iterations += coarse.iterations;
        e.rho = e.converged ? 2.0 * e.rho - coarse.rho
                            : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

}  // namespace detail

/// Asymptotic density curve for any of the three covariance structures.
/// The sweep runs from the largest lambda down, warm-starting each point from
/// the previous solution; the first point starts from the large-lambda
/// asymptote (chi_s ~ <s>/z, chi_w ~ 1/z). Non-converged points are recorded
/// with NaN density; the sweep never aborts. With cfg.warm_start disabled
/// every point starts from the asymptote instead (points become independent).
inline DensityCurve replica_density_curve(const EnsembleSpec& spec, const LambdaGrid& grid,
                                          const SolverConfig& cfg,
                                          const CurveOptions& opts = {}) {
    require_valid(spec);
    auto run = [&](const LambdaGrid& g) -> DensityCurve {
        switch (spec.structure) {
            case CovarianceCase::row_variance: {
                std::optional<Complex> warm;
                return detail::sweep_curve(spec, g, MethodTag::replica,
                                           [&](SpectralPoint pt) {
                                               auto res = solve_case1(spec.law_s, spec.alpha,
                                                                      pt, cfg, warm);
                                               if (cfg.warm_start) warm = res.params.chi_s;
                                               return res;
                                           });
            }
            case CovarianceCase::column_variance: {
                std::optional<Complex> warm;
                return detail::sweep_curve(spec, g, MethodTag::replica,
                                           [&](SpectralPoint pt) {
                                               auto res = solve_case2(spec.law_t, spec.alpha,
                                                                      pt, cfg, warm);
                                               if (cfg.warm_start) warm = res.params.chi_w;
                                               return res;
                                           });
            }
            case CovarianceCase::kronecker: {
                std::optional<std::array<Complex, 2>> warm;
                return detail::sweep_curve(
                    spec, g, MethodTag::replica, [&](SpectralPoint pt) {
                        auto res = solve_case3(spec.law_s, spec.law_t, spec.alpha, pt, cfg,
                                               warm);
                        if (cfg.warm_start)
                            warm = std::array<Complex, 2>{res.params.chi_s, res.params.chi_t};
                        return res;
                    });
            }
        }
        throw DomainError("unreachable covariance case");
    };
    return detail::with_richardson(grid, opts, run);
}

/// Closed-form MP law evaluated on a grid (chi_w from the analytic resolvent).
inline DensityCurve mp_density_curve(double alpha, double v, const LambdaGrid& grid) {
    require_valid(grid);
    DensityCurve curve;
    curve.method = MethodTag::mp;
    curve.ensemble = EnsembleSpec::row_variance(alpha, HyperparameterLaw::Constant(v));
    curve.epsilon = grid.points.front().epsilon;
    curve.entries.reserve(grid.points.size());
    for (const auto& pt : grid.points) {
        CurveEntry e;
        e.lambda = pt.lambda;
        e.rho = mp_density(alpha, v, pt.lambda);
        e.chi_w = mp_stieltjes(alpha, v, pt.z());
        e.iterations = 0;
        e.converged = true;
        curve.entries.push_back(e);
    }
    curve.sort_ascending();
    return curve;
}

// ---------------------------------------------------------------------------
// Closed-form moments (row-variance ensembles, alpha > 1)
// ---------------------------------------------------------------------------

struct InverseMoments {
    double m1 = 0.0;  // < lambda^-1 >
    double m2 = 0.0;  // < lambda^-2 >
};

namespace detail {

inline void require_moment_domain(const HyperparameterLaw& law_s, double alpha) {
    if (!(alpha > 1.0)) throw DomainError("moment identities require alpha > 1");
    if (!(law_s.support_min() > 0.0))
        throw DomainError("moment identities need strictly positive law support");
}

}  // namespace detail

/// <1/lambda> = <1/s>/(alpha-1) and
/// <1/lambda^2> = <1/s>^2/(alpha-1)^3 + <1/s^2>/(alpha-1)^2.
inline InverseMoments inverse_moments_case1(const HyperparameterLaw& law_s, double alpha) {
    detail::require_moment_domain(law_s, alpha);
    const double inv1 = law_s.expect([](double s) { return 1.0 / s; });
    const double inv2 = law_s.expect([](double s) { return 1.0 / (s * s); });
    const double am1 = alpha - 1.0;
    return InverseMoments{inv1 / am1, inv1 * inv1 / (am1 * am1 * am1) + inv2 / (am1 * am1)};
}

struct PortfolioQuantities {
    double epsilon_min = 0.0;  // minimal investment risk = (alpha-1)/(2 <1/s>)
    double q_w = 0.0;          // <1/s^2>/<1/s>^2 + 1/(alpha-1)
};

inline PortfolioQuantities portfolio_quantities(const HyperparameterLaw& law_s,
                                                double alpha) {
    detail::require_moment_domain(law_s, alpha);
    const double inv1 = law_s.expect([](double s) { return 1.0 / s; });
    const double inv2 = law_s.expect([](double s) { return 1.0 / (s * s); });
    return PortfolioQuantities{(alpha - 1.0) / (2.0 * inv1),
                               inv2 / (inv1 * inv1) + 1.0 / (alpha - 1.0)};
}

}  // namespace wspec
