#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/curve.hpp"
#include "wspec/ensemble.hpp"

namespace wspec {

/// Message state of the diagonal-resolvent recursion on one sampled matrix:
/// per-row pairs (chi_wk, tilde_chi_wk) and per-column pairs
/// (chi_umu, tilde_chi_umu). At a converged point the closing half-step
/// enforces chi_wk = 1/(z + tilde_chi_wk) and chi_umu = 1/(tilde_chi_umu - 1)
/// exactly, and Im chi_wk <= 1e-8 for every row (retarded branch).
struct BPState {
    std::vector<Complex> chi_w;        // per row k
    std::vector<Complex> chi_tilde_w;  // per row k
    std::vector<Complex> chi_u;        // per column mu
    std::vector<Complex> chi_tilde_u;  // per column mu
    SpectralPoint point{};
    std::size_t iterations = 0;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
};

inline Complex bp_mean_chi_w(const BPState& state) {
    Complex acc{};
    for (const auto& c : state.chi_w) acc += c;
    return acc / static_cast<double>(state.chi_w.size());
}

/// rho(lambda | X) = -Im( (1/N) sum_k chi_wk ) / pi, clamped like
/// density_from_chi. The state must be converged.
inline double bp_density_point(const BPState& state) {
    if (!state.converged) throw DomainError("bp_density_point needs a converged state");
    const double rho = -bp_mean_chi_w(state).imag() / kPi;
    if (rho < -1e-8)
        throw NegativeDensity("bp density " + std::to_string(rho) +
                              " < -1e-8: wrong branch at lambda=" +
                              std::to_string(state.point.lambda));
    return rho < 0.0 ? 0.0 : rho;
}

/// Message-passing density estimator for one sampled matrix. Precomputes the
/// squared entries once (row-major; each row pass feeds both the row update
/// and the column accumulator, so every iteration streams the matrix exactly
/// once). The recursion per iteration, with x the unscaled entries so that
/// (1/N) x_{k mu}^2 is exactly the square of the stored matrix entry:
///
///   tilde_chi_wk  = (1/N) sum_mu x_{k mu}^2 chi_umu     (old chi_u)
///   chi_wk       <- damped 1/(z + tilde_chi_wk)
///   tilde_chi_umu = (1/N) sum_k  x_{k mu}^2 chi_wk      (updated chi_w)
///   chi_umu      <- damped 1/(tilde_chi_umu - 1)
///
/// Only the realized entries are read; the covariance factors are never used.
class BPSolver {
public:
    explicit BPSolver(const SampledEnsemble& sample)
        : n_(sample.n_rows), p_(sample.n_cols), x2_(n_ * p_) {
        const double* src = sample.matrix.data();
        for (std::size_t i = 0; i < n_ * p_; ++i) x2_[i] = src[i] * src[i];
    }

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return p_; }

    BPState solve(SpectralPoint point, const SolverConfig& cfg,
                  const BPState* init = nullptr) const {
        require_valid(point);
        require_valid(cfg);
        const Complex z = point.z();
        const double d = cfg.damping;

        std::vector<double> wr(n_), wi(n_), ur(p_), ui(p_);
        if (init && init->chi_w.size() == n_ && init->chi_u.size() == p_) {
            for (std::size_t k = 0; k < n_; ++k) {
                wr[k] = init->chi_w[k].real();
                wi[k] = init->chi_w[k].imag();
            }
            for (std::size_t m = 0; m < p_; ++m) {
                ur[m] = init->chi_u[m].real();
                ui[m] = init->chi_u[m].imag();
            }
        } else {
            const Complex w0 = 1.0 / z;
            for (std::size_t k = 0; k < n_; ++k) {
                wr[k] = w0.real();
                wi[k] = w0.imag();
            }
            for (std::size_t m = 0; m < p_; ++m) {
                ur[m] = -1.0;
                ui[m] = 0.0;
            }
        }

        std::vector<double> au_r(p_), au_i(p_);
        std::vector<double> snap_wr, snap_wi, snap_ur, snap_ui;

        BPState out;
        out.point = point;
        std::size_t it = 0;
        bool converged = false;
        double residual = std::numeric_limits<double>::infinity();
        for (it = 1; it <= cfg.max_iterations; ++it) {
            snap_wr = wr; snap_wi = wi; snap_ur = ur; snap_ui = ui;
            std::fill(au_r.begin(), au_r.end(), 0.0);
            std::fill(au_i.begin(), au_i.end(), 0.0);
            double max_dw2 = 0.0;
            for (std::size_t k = 0; k < n_; ++k) {
                const double* row = x2_.data() + k * p_;
                double ar = 0.0, ai = 0.0;
                for (std::size_t m = 0; m < p_; ++m) {
                    ar += row[m] * ur[m];
                    ai += row[m] * ui[m];
                }
                const Complex wnew = 1.0 / (z + Complex(ar, ai));
                const double dre = wnew.real() - wr[k];
                const double dim = wnew.imag() - wi[k];
                max_dw2 = std::max(max_dw2, dre * dre + dim * dim);
                const double wkr = wr[k] + d * dre;
                const double wki = wi[k] + d * dim;
                wr[k] = wkr;
                wi[k] = wki;
                for (std::size_t m = 0; m < p_; ++m) {
                    au_r[m] += row[m] * wkr;
                    au_i[m] += row[m] * wki;
                }
            }
            double max_du2 = 0.0;
            for (std::size_t m = 0; m < p_; ++m) {
                const Complex unew = 1.0 / (Complex(au_r[m], au_i[m]) - 1.0);
                const double dre = unew.real() - ur[m];
                const double dim = unew.imag() - ui[m];
                max_du2 = std::max(max_du2, dre * dre + dim * dim);
                ur[m] += d * dre;
                ui[m] += d * dim;
            }
            residual = std::sqrt(std::max(max_dw2, max_du2));
            if (!std::isfinite(residual)) {
                // poisoned update: report the last clean state, flagged
                wr = snap_wr; wi = snap_wi; ur = snap_ur; ui = snap_ui;
                break;
            }
            if (residual <= cfg.tolerance) {
                converged = true;
                break;
            }
        }

        // closing half-steps (undamped) so the stored pairs satisfy the
        // defining relations exactly
        out.chi_w.resize(n_);
        out.chi_tilde_w.resize(n_);
        out.chi_u.resize(p_);
        out.chi_tilde_u.resize(p_);
        std::fill(au_r.begin(), au_r.end(), 0.0);
        std::fill(au_i.begin(), au_i.end(), 0.0);
        for (std::size_t k = 0; k < n_; ++k) {
            const double* row = x2_.data() + k * p_;
            double ar = 0.0, ai = 0.0;
            for (std::size_t m = 0; m < p_; ++m) {
                ar += row[m] * ur[m];
                ai += row[m] * ui[m];
            }
            const Complex htw(ar, ai);
            const Complex w = 1.0 / (z + htw);
            out.chi_tilde_w[k] = htw;
            out.chi_w[k] = w;
            for (std::size_t m = 0; m < p_; ++m) {
                au_r[m] += row[m] * w.real();
                au_i[m] += row[m] * w.imag();
            }
        }
        for (std::size_t m = 0; m < p_; ++m) {
            const Complex htu(au_r[m], au_i[m]);
            out.chi_tilde_u[m] = htu;
            out.chi_u[m] = 1.0 / (htu - 1.0);
        }
        out.iterations = std::min(it, cfg.max_iterations);
        out.converged = converged;
        out.residual = residual;
        return out;
    }

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> x2_;
};

/// One-shot solve at a single spectral point.
inline BPState bp_solve_point(const SampledEnsemble& sample, SpectralPoint point,
                              const SolverConfig& cfg, const BPState* init = nullptr) {
    return BPSolver(sample).solve(point, cfg, init);
}

/// Density curve on one sample: descending sweep with BPState warm starts,
/// mirroring replica_density_curve. Non-converged points are flagged, never
/// fatal.
inline DensityCurve bp_density_curve(const SampledEnsemble& sample, const LambdaGrid& grid,
                                     const SolverConfig& cfg) {
    require_valid(grid);
    BPSolver solver(sample);
    std::vector<SpectralPoint> order = grid.points;
    std::sort(order.begin(), order.end(),
              [&](const SpectralPoint& a, const SpectralPoint& b) {
                  return grid.descending_sweep ? a.lambda > b.lambda
                                               : a.lambda < b.lambda;
              });
    DensityCurve curve;
    curve.method = MethodTag::bp;
    curve.epsilon = order.empty() ? 0.0 : order.front().epsilon;
    curve.entries.reserve(order.size());
    BPState warm;
    bool have_warm = false;
    for (const auto& pt : order) {
        const BPState state =
            solver.solve(pt, cfg, cfg.warm_start && have_warm ? &warm : nullptr);
        CurveEntry entry;
        entry.lambda = pt.lambda;
        entry.chi_w = bp_mean_chi_w(state);
        entry.iterations = state.iterations;
        entry.converged = state.converged;
        if (state.converged) {
            try {
                entry.rho = bp_density_point(state);
            } catch (const NegativeDensity&) {
                entry.converged = false;
                entry.rho = std::numeric_limits<double>::quiet_NaN();
            }
        }
        curve.entries.push_back(entry);
        if (cfg.warm_start) {
            warm = state;
            have_warm = true;
        }
    }
    curve.sort_ascending();
    return curve;
}

}  // namespace wspec
