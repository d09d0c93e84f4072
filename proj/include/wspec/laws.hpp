#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "wspec/core.hpp"
#include "wspec/quadrature.hpp"

namespace wspec {

enum class LawKind { uniform, constant, discrete };

inline const char* to_string(LawKind kind) {
    switch (kind) {
        case LawKind::uniform: return "uniform";
        case LawKind::constant: return "constant";
        case LawKind::discrete: return "discrete";
    }
    return "?";
}

/// Distribution of a nonnegative variance hyperparameter (row variances s or
/// column variances t). Three shapes are supported:
///
///   Uniform(min, max)   density 1/(max-min) on [min, max], 0 <= min < max
///   Constant(value)     a point mass at value >= 0
///   Discrete(values)    equal weights on a finite nonnegative set
///
/// The bracket <f> is exact for Constant and Discrete and evaluated by
/// Gauss-Legendre quadrature for Uniform, so downstream solvers stay fully
/// deterministic.
class HyperparameterLaw {
public:
    static HyperparameterLaw Uniform(double min, double max) {
        if (!std::isfinite(min) || !std::isfinite(max))
            throw InvalidLaw("uniform law bounds must be finite");
        if (min < 0.0) throw InvalidLaw("uniform law requires min >= 0");
        if (!(min < max)) throw InvalidLaw("uniform law requires min < max");
        HyperparameterLaw law;
        law.kind_ = LawKind::uniform;
        law.lo_ = min;
        law.hi_ = max;
        return law;
    }

    static HyperparameterLaw Constant(double value) {
        if (!std::isfinite(value) || value < 0.0)
            throw InvalidLaw("constant law requires a finite value >= 0");
        HyperparameterLaw law;
        law.kind_ = LawKind::constant;
        law.lo_ = law.hi_ = value;
        return law;
    }

    static HyperparameterLaw Discrete(std::vector<double> values) {
        if (values.empty()) throw InvalidLaw("discrete law requires at least one value");
        for (double v : values)
            if (!std::isfinite(v) || v < 0.0)
                throw InvalidLaw("discrete law values must be finite and >= 0");
        HyperparameterLaw law;
        law.kind_ = LawKind::discrete;
        law.values_ = std::move(values);
        law.lo_ = *std::min_element(law.values_.begin(), law.values_.end());
        law.hi_ = *std::max_element(law.values_.begin(), law.values_.end());
        return law;
    }

    LawKind kind() const { return kind_; }
    double min() const { return lo_; }
    double max() const { return hi_; }
    double value() const { return lo_; }
    const std::vector<double>& values() const { return values_; }

    double support_min() const { return lo_; }
    double support_max() const { return hi_; }

    /// The bracket <f> over this law. f maps a nonnegative real to double or
    /// Complex; the return type follows f. Uniform laws use the n_nodes-point
    /// Gauss-Legendre rule (relative accuracy ~1e-12 for smooth f at the
    /// default 128 nodes).
    template <class F>
    auto expect(F&& f, std::size_t n_nodes = 128) const
        -> std::invoke_result_t<F, double> {
        using R = std::invoke_result_t<F, double>;
        auto check = [](R v, double x) -> R {
            bool ok;
            if constexpr (std::is_same_v<R, Complex>)
                ok = std::isfinite(v.real()) && std::isfinite(v.imag());
            else
                ok = std::isfinite(v);
            if (!ok)
                throw EvaluationError("law expectation: non-finite integrand at " +
                                      std::to_string(x));
            return v;
        };
        switch (kind_) {
            case LawKind::constant:
                return check(f(lo_), lo_);
            case LawKind::discrete: {
                R sum{};
                for (double v : values_) sum += check(f(v), v);
                return sum / static_cast<double>(values_.size());
            }
            case LawKind::uniform: {
                const auto& rule = gauss_legendre(n_nodes);
                const double mid = 0.5 * (lo_ + hi_);
                const double half = 0.5 * (hi_ - lo_);
                R sum{};
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    const double x = mid + half * rule.nodes[i];
                    sum += rule.weights[i] * check(f(x), x);
                }
                // weights sum to 2, and the 1/(max-min) density cancels the
                // half-width Jacobian up to that factor
                return sum * 0.5;
            }
        }
        throw DomainError("unreachable law kind");
    }

    double mean() const {
        return expect([](double x) { return x; });
    }

    /// The law of c*s for c > 0 (used by scale-covariance checks).
    HyperparameterLaw scaled(double c) const {
        if (!(c > 0.0)) throw InvalidLaw("scale factor must be positive");
        switch (kind_) {
            case LawKind::uniform: return Uniform(c * lo_, c * hi_);
            case LawKind::constant: return Constant(c * lo_);
            case LawKind::discrete: {
                std::vector<double> vals = values_;
                for (double& v : vals) v *= c;
                return Discrete(std::move(vals));
            }
        }
        throw DomainError("unreachable law kind");
    }

    bool operator==(const HyperparameterLaw& other) const {
        return kind_ == other.kind_ && lo_ == other.lo_ && hi_ == other.hi_ &&
               values_ == other.values_;
    }

private:
    HyperparameterLaw() = default;
    LawKind kind_ = LawKind::constant;
    double lo_ = 1.0;
    double hi_ = 1.0;
    std::vector<double> values_;
};

template <class F>
auto expect_law(const HyperparameterLaw& law, F&& f, std::size_t n_nodes = 128) {
    return law.expect(std::forward<F>(f), n_nodes);
}

}  // namespace wspec
