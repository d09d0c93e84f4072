#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/laws.hpp"
#include "wspec/linalg.hpp"
#include "wspec/rng.hpp"

namespace wspec {

/// Covariance structure of the random rectangular matrix entries,
/// E[x_{i mu} x_{j nu}] = m_{ij} theta_{mu nu}:
///
///   row_variance     M = diag(s), Theta = I        (case 1)
///   column_variance  M = I,       Theta = diag(t)  (case 2)
///   kronecker        M = W S W^T, Theta = U T U^T  (case 3)
enum class CovarianceCase { row_variance = 1, column_variance = 2, kronecker = 3 };

inline const char* to_string(CovarianceCase c) {
    switch (c) {
        case CovarianceCase::row_variance: return "row_variance";
        case CovarianceCase::column_variance: return "column_variance";
        case CovarianceCase::kronecker: return "kronecker";
    }
    return "?";
}

struct EnsembleSpec {
    double alpha = 1.0;  // aspect ratio p/N
    CovarianceCase structure = CovarianceCase::row_variance;
    HyperparameterLaw law_s = HyperparameterLaw::Constant(1.0);
    HyperparameterLaw law_t = HyperparameterLaw::Constant(1.0);
    bool rotate_rows = false;
    bool rotate_cols = false;

    static EnsembleSpec row_variance(double alpha, HyperparameterLaw law_s) {
        EnsembleSpec spec;
        spec.alpha = alpha;
        spec.structure = CovarianceCase::row_variance;
        spec.law_s = std::move(law_s);
        return spec;
    }

    static EnsembleSpec column_variance(double alpha, HyperparameterLaw law_t) {
        EnsembleSpec spec;
        spec.alpha = alpha;
        spec.structure = CovarianceCase::column_variance;
        spec.law_t = std::move(law_t);
        return spec;
    }

    static EnsembleSpec kronecker(double alpha, HyperparameterLaw law_s,
                                  HyperparameterLaw law_t, bool rotate_rows = false,
                                  bool rotate_cols = false) {
        EnsembleSpec spec;
        spec.alpha = alpha;
        spec.structure = CovarianceCase::kronecker;
        spec.law_s = std::move(law_s);
        spec.law_t = std::move(law_t);
        spec.rotate_rows = rotate_rows;
        spec.rotate_cols = rotate_cols;
        return spec;
    }

    /// v = <s><t>, the mean entry variance entering the MP comparison.
    double mean_variance() const { return law_s.mean() * law_t.mean(); }
};

inline void require_valid(const EnsembleSpec& spec) {
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
        throw DomainError("ensemble alpha must be finite and > 0");
}

inline std::size_t column_count(const EnsembleSpec& spec, std::size_t n_rows) {
    const double p = std::round(spec.alpha * static_cast<double>(n_rows));
    if (!(p >= 1.0)) throw DomainError("alpha * N rounds to p < 1");
    return static_cast<std::size_t>(p);
}

/// One covariance factor (M or Theta): the drawn diagonal plus an optional
/// orthogonal rotation. An empty rotation means the factor is diagonal.
struct SymmetricFactor {
    std::vector<double> eigenvalues;  // the drawn s (or t) values
    Matrix rotation;                  // empty => identity

    bool diagonal() const { return rotation.empty(); }
    std::size_t dim() const { return eigenvalues.size(); }

    double trace() const {
        double sum = 0.0;
        for (double v : eigenvalues) sum += v;
        return sum;
    }

    /// Dense W diag(e) W^T (or diag(e) when unrotated).
    Matrix dense() const { return dense_power(1.0); }

    /// Dense W diag(sqrt(e)) W^T; requires nonnegative eigenvalues.
    Matrix sqrt_dense() const { return dense_power(0.5); }

    /// Diagonal entry (W diag(e) W^T)_{kk}.
    double diag_entry(std::size_t k) const {
        if (diagonal()) return eigenvalues[k];
        double acc = 0.0;
        for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
            const double w = rotation(k, j);
            acc += w * w * eigenvalues[j];
        }
        return acc;
    }

private:
    Matrix dense_power(double power) const {
        const std::size_t n = eigenvalues.size();
        std::vector<double> e(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (power != 1.0 && eigenvalues[i] < 0.0)
                throw InvalidLaw("negative variance draw: cannot take square root");
            e[i] = power == 1.0 ? eigenvalues[i] : std::sqrt(eigenvalues[i]);
        }
        Matrix out(n, n, 0.0);
        if (diagonal()) {
            for (std::size_t i = 0; i < n; ++i) out(i, i) = e[i];
            return out;
        }
        // W diag(e) W^T
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += rotation(i, k) * e[k] * rotation(j, k);
                out(i, j) = acc;
                out(j, i) = acc;
            }
        return out;
    }
};

struct CovarianceFactors {
    SymmetricFactor m;      // N x N row factor
    SymmetricFactor theta;  // p x p column factor
    const std::vector<double>& s_draws() const { return m.eigenvalues; }
    const std::vector<double>& t_draws() const { return theta.eigenvalues; }
};

namespace detail {

inline double law_draw(const HyperparameterLaw& law, RandomSource& rng) {
    switch (law.kind()) {
        case LawKind::constant:
            return law.value();
        case LawKind::uniform:
            return law.min() + (law.max() - law.min()) * rng.uniform();
        case LawKind::discrete: {
            const auto& vals = law.values();
            auto idx = static_cast<std::size_t>(rng.uniform() *
                                                static_cast<double>(vals.size()));
            if (idx >= vals.size()) idx = vals.size() - 1;
            return vals[idx];
        }
    }
    throw DomainError("unreachable law kind");
}

inline std::vector<double> law_draws(const HyperparameterLaw& law, std::size_t n,
                                     RandomSource& rng) {
    std::vector<double> out(n);
    for (auto& v : out) {
        v = law_draw(law, rng);
        if (v < 0.0) throw InvalidLaw("negative variance draw");
    }
    return out;
}

}  // namespace detail

/// Draw the covariance factors for spec at size N. Stream order: s draws,
/// t draws, then the W and U Gaussians (only for rotated sides).
inline CovarianceFactors build_covariance_factors(const EnsembleSpec& spec,
                                                  std::size_t n_rows,
                                                  std::uint64_t seed) {
    require_valid(spec);
    if (n_rows < 2) throw DomainError("covariance factors need N >= 2");
    const std::size_t p = column_count(spec, n_rows);
    RandomSource rng(seed);
    CovarianceFactors out;
    out.m.eigenvalues = detail::law_draws(spec.law_s, n_rows, rng);
    out.theta.eigenvalues = detail::law_draws(spec.law_t, p, rng);
    if (spec.rotate_rows) out.m.rotation = haar_orthogonal(n_rows, rng);
    if (spec.rotate_cols) out.theta.rotation = haar_orthogonal(p, rng);
    return out;
}

struct SampledEnsemble {
    std::size_t n_rows = 0;      // N
    std::size_t n_cols = 0;      // p = round(alpha N)
    Matrix matrix;               // X, entries already scaled by 1/sqrt(N)
    CovarianceFactors factors;   // M and Theta actually used
    std::uint64_t seed = 0;

    double realized_alpha() const {
        return static_cast<double>(n_cols) / static_cast<double>(n_rows);
    }
};

namespace detail {

/// X = M^{1/2} G Theta^{1/2} / sqrt(N) for a given Gaussian block G.
inline Matrix shape_sample(const CovarianceFactors& factors, Matrix g) {
    const std::size_t n = factors.m.dim();
    const std::size_t p = factors.theta.dim();
    Matrix x = std::move(g);
    if (factors.m.diagonal()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::sqrt(factors.m.eigenvalues[i]);
            double* row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) row[j] *= r;
        }
    } else {
        x = matmul(factors.m.sqrt_dense(), x);
    }
    if (factors.theta.diagonal()) {
        std::vector<double> r(p);
        for (std::size_t j = 0; j < p; ++j) r[j] = std::sqrt(factors.theta.eigenvalues[j]);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) row[j] *= r[j];
        }
    } else {
        x = matmul(x, factors.theta.sqrt_dense());
    }
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double* row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) row[j] *= inv_sqrt_n;
    }
    return x;
}

}  // namespace detail

/// Draw one X for fixed covariance factors, consuming only the Gaussian block
/// from rng. Used when many samples share one (M, Theta).
inline Matrix sample_matrix_with_factors(const CovarianceFactors& factors,
                                         RandomSource& rng) {
    return detail::shape_sample(
        factors, gaussian_matrix(factors.m.dim(), factors.theta.dim(), rng));
}

/// Draw a full sample: X = (1/sqrt(N)) M^{1/2} G Theta^{1/2} with G an N x p
/// block of i.i.d. standard Gaussians. Stream order: s draws, t draws, G
/// (row-major), then rotation Gaussians — so the same seed yields the same G
/// whether or not rotations are enabled. Same seed, same output, bit for bit.
inline SampledEnsemble sample_matrix(const EnsembleSpec& spec, std::size_t n_rows,
                                     std::uint64_t seed) {
    require_valid(spec);
    if (n_rows < 2) throw DomainError("sample_matrix needs N >= 2");
    const std::size_t p = column_count(spec, n_rows);
    RandomSource rng(seed);

    SampledEnsemble out;
    out.n_rows = n_rows;
    out.n_cols = p;
    out.seed = seed;
    out.factors.m.eigenvalues = detail::law_draws(spec.law_s, n_rows, rng);
    out.factors.theta.eigenvalues = detail::law_draws(spec.law_t, p, rng);
    Matrix g = gaussian_matrix(n_rows, p, rng);
    if (spec.rotate_rows) out.factors.m.rotation = haar_orthogonal(n_rows, rng);
    if (spec.rotate_cols) out.factors.theta.rotation = haar_orthogonal(p, rng);
    out.matrix = detail::shape_sample(out.factors, std::move(g));
    return out;
}

}  // namespace wspec
