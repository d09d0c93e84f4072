#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/curve.hpp"
#include "wspec/ensemble.hpp"
#include "wspec/linalg.hpp"
#include "wspec/replica.hpp"

namespace wspec {

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver: Householder reduction + Sturm bisection
// ---------------------------------------------------------------------------

struct Tridiagonal {
    std::vector<double> diag;     // N entries
    std::vector<double> offdiag;  // N-1 entries
};

/// Orthogonal-similarity reduction of a symmetric matrix to tridiagonal form.
/// The spectrum is preserved; eigenvectors are not accumulated.
inline Tridiagonal householder_tridiagonalize(const Matrix& a_in) {
    if (a_in.rows() != a_in.cols()) throw DomainError("tridiagonalize needs a square matrix");
    if (!is_symmetric(a_in, 1e-12))
        throw DomainError("tridiagonalize needs a symmetric matrix (rel 1e-12)");
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    std::vector<double> d(n, 0.0), e(n, 0.0);

    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k) scale += std::abs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k)
                        a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }

    Tridiagonal out;
    out.diag.resize(n);
    out.offdiag.assign(n > 1 ? n - 1 : 0, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.diag[i] = a(i, i);
    for (std::size_t i = 1; i < n; ++i) out.offdiag[i - 1] = e[i];
    return out;
}

/// Number of eigenvalues of the tridiagonal matrix strictly below x
/// (sign changes of the Sturm sequence / LDL^T pivots).
inline std::size_t sturm_count(const std::vector<double>& diag,
                               const std::vector<double>& offdiag, double x) {
    const std::size_t n = diag.size();
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e2 = i == 0 ? 0.0 : offdiag[i - 1] * offdiag[i - 1];
        q = diag[i] - x - (i == 0 ? 0.0 : e2 / q);
        if (q == 0.0) q = -1e-290;
        if (q < 0.0) ++count;
    }
    return count;
}

/// All N eigenvalues, ascending, each within abs_tol of the true value.
/// Bisection on the Sturm count starting from the Gershgorin enclosure.
inline std::vector<double> sturm_bisection_eigenvalues(const std::vector<double>& diag,
                                                       const std::vector<double>& offdiag,
                                                       double abs_tol) {
    if (!(abs_tol > 0.0)) throw DomainError("sturm bisection needs abs_tol > 0");
    const std::size_t n = diag.size();
    if (n == 0) return {};
    if (offdiag.size() + 1 != n)
        throw DomainError("tridiagonal form requires N-1 off-diagonal entries");

    double glo = std::numeric_limits<double>::infinity();
    double ghi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
                         (i + 1 < n ? std::abs(offdiag[i]) : 0.0);
        glo = std::min(glo, diag[i] - r);
        ghi = std::max(ghi, diag[i] + r);
    }
    const double pad = std::max(abs_tol, 1e-12 * std::max(std::abs(glo), std::abs(ghi)));
    ghi += pad;

    std::vector<double> evs(n);
    double floor_bound = glo;
    for (std::size_t k = 0; k < n; ++k) {
        double lo = floor_bound;
        double hi = ghi;
        while (hi - lo > abs_tol) {
            const double mid = 0.5 * (lo + hi);
            if (sturm_count(diag, offdiag, mid) <= k)
                lo = mid;
            else
                hi = mid;
        }
        evs[k] = 0.5 * (lo + hi);
        floor_bound = lo;
    }
    return evs;
}

/// Eigenvalues of X X^T for one sample (ascending).
inline std::vector<double> wishart_eigenvalues(const SampledEnsemble& sample,
                                               double abs_tol = 1e-10) {
    const Matrix w = gram_rows(sample.matrix);
    const Tridiagonal t = householder_tridiagonalize(w);
    return sturm_bisection_eigenvalues(t.diag, t.offdiag, abs_tol);
}

// ---------------------------------------------------------------------------
// Empirical histograms
// ---------------------------------------------------------------------------

/// Mean histogram of eigenvalue mass over independently sampled matrices.
/// mass[b] is the average fraction of the N eigenvalues landing in bin b;
/// bins are half-open [e_b, e_{b+1}) with the last bin closed.
struct Histogram {
    std::vector<double> bin_edges;
    std::vector<double> mass;
    std::vector<double> std_error;  // standard error of the per-sample bin mass
    std::size_t n_samples = 0;
    std::size_t n_matrix = 0;

    double width(std::size_t b) const { return bin_edges[b + 1] - bin_edges[b]; }
    double density(std::size_t b) const { return mass[b] / width(b); }
    double center(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

/// Sample n_samples matrices (seed base_seed + i), eigensolve each, and
/// accumulate the normalized histogram with its per-bin standard error.
inline Histogram empirical_density(const EnsembleSpec& spec, std::size_t n_rows,
                                   std::size_t n_samples, std::uint64_t base_seed,
                                   const std::vector<double>& bin_edges) {
    require_valid(spec);
    if (n_samples < 1) throw DomainError("empirical_density needs n_samples >= 1");
    if (bin_edges.size() < 2) throw DomainError("histogram needs at least one bin");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i - 1] < bin_edges[i]))
            throw DomainError("histogram bin edges must be strictly ascending");

    const std::size_t n_bins = bin_edges.size() - 1;
    std::vector<double> sum(n_bins, 0.0), sum_sq(n_bins, 0.0), one(n_bins, 0.0);
    for (std::size_t sidx = 0; sidx < n_samples; ++sidx) {
        const SampledEnsemble sample = sample_matrix(spec, n_rows, base_seed + sidx);
        const std::vector<double> evs = wishart_eigenvalues(sample);
        std::fill(one.begin(), one.end(), 0.0);
        const double w = 1.0 / static_cast<double>(n_rows);
        for (double ev : evs) {
            if (ev < bin_edges.front() || ev > bin_edges.back()) continue;
            auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), ev);
            std::size_t b = static_cast<std::size_t>(it - bin_edges.begin());
            b = b == 0 ? 0 : b - 1;
            if (b >= n_bins) b = n_bins - 1;
            one[b] += w;
        }
        for (std::size_t b = 0; b < n_bins; ++b) {
            sum[b] += one[b];
            sum_sq[b] += one[b] * one[b];
        }
    }

    Histogram hist;
    hist.bin_edges = bin_edges;
    hist.n_samples = n_samples;
    hist.n_matrix = n_rows;
    hist.mass.resize(n_bins);
    hist.std_error.assign(n_bins, 0.0);
    const double ns = static_cast<double>(n_samples);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double mean = sum[b] / ns;
        hist.mass[b] = mean;
        if (n_samples > 1) {
            const double var = std::max(0.0, (sum_sq[b] - ns * mean * mean) / (ns - 1.0));
            hist.std_error[b] = std::sqrt(var / ns);
        }
    }
    return hist;
}

/// Histogram reinterpreted as a density curve (bin centers vs mass/width).
inline DensityCurve histogram_to_curve(const Histogram& hist, const EnsembleSpec& spec) {
    DensityCurve curve;
    curve.method = MethodTag::exact;
    curve.ensemble = spec;
    curve.entries.reserve(hist.mass.size());
    for (std::size_t b = 0; b < hist.mass.size(); ++b) {
        CurveEntry e;
        e.lambda = hist.center(b);
        e.rho = hist.density(b);
        e.converged = true;
        curve.entries.push_back(e);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Trace-form resolvent recursion
// ---------------------------------------------------------------------------

namespace detail {

struct TracePair {
    Complex plain{};     // (1/n) Tr A^-1
    Complex weighted{};  // (1/n) Tr [F A^-1]
};

/// LU with partial pivoting followed by column solves. Returns the raw trace
/// of A^-1 and, when weight is given, the trace of weight * A^-1. O(n^3);
/// this path backs the accuracy oracle, not a fast path.
inline TracePair lu_inverse_traces(std::vector<Complex> a, std::size_t n,
                                   const Matrix* weight) {
    std::vector<std::size_t> piv(n);
    double norm = 0.0;
    for (const auto& v : a) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) throw SingularShift("trace-form: zero shifted matrix");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pk = k;
        double best = std::abs(a[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(a[i * n + k]);
            if (m > best) {
                best = m;
                pk = i;
            }
        }
        if (best < 1e-14 * norm)
            throw SingularShift("trace-form: numerically singular shifted matrix");
        piv[k] = pk;
        if (pk != k)
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[pk * n + j]);
        const Complex inv_pivot = 1.0 / a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex l = a[i * n + k] * inv_pivot;
            a[i * n + k] = l;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= l * a[k * n + j];
        }
    }
    TracePair out;
    std::vector<Complex> x(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::fill(x.begin(), x.end(), Complex{});
        x[col] = 1.0;
        for (std::size_t k = 0; k < n; ++k)
            if (piv[k] != k) std::swap(x[k], x[piv[k]]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= a[i * n + j] * x[j];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = i + 1; j < n; ++j) x[i] -= a[i * n + j] * x[j];
            x[i] /= a[i * n + i];
        }
        out.plain += x[col];
        if (weight) {
            Complex fx{};
            for (std::size_t k = 0; k < n; ++k) fx += (*weight)(col, k) * x[k];
            out.weighted += fx;
        }
    }
    return out;
}

/// Trace of the inverse of an explicit dense complex matrix.
inline Complex complex_trace_inverse(std::vector<Complex> a, std::size_t n) {
    return lu_inverse_traces(std::move(a), n, nullptr).plain;
}

struct TraceFactor {
    const Matrix* dense = nullptr;
    std::vector<double> diag;  // used when the factor is diagonal
    std::size_t n = 0;
    bool diagonal = false;
};

inline TraceFactor make_trace_factor(const Matrix& m) {
    TraceFactor f;
    f.dense = &m;
    f.n = m.rows();
    f.diagonal = is_diagonal(m);
    if (f.diagonal) {
        f.diag.resize(f.n);
        for (std::size_t i = 0; i < f.n; ++i) f.diag[i] = m(i, i);
    }
    return f;
}

/// (1/n) Tr (shift*I + scale*F)^-1 and (1/n) Tr [F (shift*I + scale*F)^-1].
/// Diagonal factors reduce to scalar sums; dense factors pay one O(n^3) LU.
inline TracePair mean_traces(const TraceFactor& f, Complex shift, Complex scale) {
    TracePair out;
    if (f.diagonal) {
        for (double v : f.diag) {
            const Complex d = shift + scale * v;
            if (std::abs(d) < 1e-290)
                throw SingularShift("trace-form: singular diagonal shift");
            out.plain += 1.0 / d;
            out.weighted += v / d;
        }
    } else {
        std::vector<Complex> a(f.n * f.n);
        for (std::size_t i = 0; i < f.n; ++i)
            for (std::size_t j = 0; j < f.n; ++j)
                a[i * f.n + j] = scale * (*f.dense)(i, j) + (i == j ? shift : Complex{});
        out = lu_inverse_traces(std::move(a), f.n, f.dense);
    }
    out.plain /= static_cast<double>(f.n);
    out.weighted /= static_cast<double>(f.n);
    return out;
}

}  // namespace detail

/// Matrix-trace form of the resolvent recursion on explicit covariance
/// factors M (N x N) and Theta (p x p), with alpha = p/N:
///
///   chi_w = (1/N) Tr (z I + alpha chi_t M)^-1
///   chi_s = (1 - z chi_w) / (alpha chi_t)
///   chi_u = (1/p) Tr (chi_s Theta - I)^-1
///   chi_t = (1 + chi_u) / chi_s
///
/// iterated (damped, in chi_t) to the fixed point. Dense factors cost O(N^3)
/// per pass; diagonal factors reduce to scalar sums. Exists as an accuracy
/// oracle for the law-level solvers and for rotation-invariance checks.
inline SolveResult trace_form_resolvent(const Matrix& m, const Matrix& theta,
                                        SpectralPoint point, const SolverConfig& cfg,
                                        std::optional<Complex> init = std::nullopt) {
    require_valid(point);
    if (!is_symmetric(m, 1e-12) || !is_symmetric(theta, 1e-12))
        throw DomainError("trace_form_resolvent needs symmetric factors");
    const std::size_t n = m.rows();
    const std::size_t p = theta.rows();
    if (n == 0 || p == 0) throw DomainError("trace_form_resolvent needs nonempty factors");
    const double alpha = static_cast<double>(p) / static_cast<double>(n);
    const Complex z = point.z();
    const auto fm = detail::make_trace_factor(m);
    const auto ft = detail::make_trace_factor(theta);

    auto stage = [&](Complex chi_t) {
        // chi_s = (1 - z chi_w)/(alpha chi_t) and chi_t = (1 + chi_u)/chi_s
        // are evaluated through their trace forms (1/N) Tr[M A^-1] and
        // (1/p) Tr[Theta B^-1]: algebraically identical, and free of the
        // 1 - z*chi_w cancellation at large lambda.
        const auto row = detail::mean_traces(fm, z, alpha * chi_t);
        const Complex chi_s = row.weighted;
        const auto col = detail::mean_traces(ft, Complex{-1.0, 0.0}, chi_s);
        return OrderParams{row.plain, chi_s, col.plain, col.weighted, point};
    };
    auto map = [&](Complex chi_t) { return stage(chi_t).chi_t; };

    Complex start;
    if (init) {
        start = *init;
    } else {
        // large-lambda asymptote chi_t -> -Tr(Theta)/p
        double tr = 0.0;
        for (std::size_t i = 0; i < p; ++i) tr += theta(i, i);
        start = Complex{-tr / static_cast<double>(p), 0.0};
    }
    const auto fp = damped_fixed_point(map, start, cfg);

    SolveResult out;
    out.params = stage(fp.solution);
    out.iterations = fp.iterations;
    out.converged = fp.converged;
    out.residual = fp.residual;
    return out;
}

}  // namespace wspec
