#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wspec {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidLaw : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularDenominator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularShift : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientGrid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NegativeDensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoSupportDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iteration map produces a NaN or infinity; carries the
/// 1-based index of the offending iteration.
struct NonFiniteIterate : std::runtime_error {
    explicit NonFiniteIterate(std::size_t iteration_index)
        : std::runtime_error("non-finite iterate produced at iteration " +
                             std::to_string(iteration_index)),
          iteration(iteration_index) {}
    std::size_t iteration;
};

// ---------------------------------------------------------------------------
// Spectral abscissae
// ---------------------------------------------------------------------------

/// One evaluation abscissa lambda with its resolvent regularizer epsilon.
///
/// The retarded convention lambda + i*epsilon is used throughout, so the
/// physical branch has Im chi_w < 0 inside the bulk and the density
/// -Im(chi_w)/pi is nonnegative. epsilon must stay strictly positive; the
/// epsilon -> 0+ limit is approached by shrinking it (or by Richardson
/// extrapolation), never by setting it to zero.
struct SpectralPoint {
    double lambda = 0.0;
    double epsilon = 1e-6;

    Complex z() const { return Complex(lambda, epsilon); }
};

inline void require_valid(const SpectralPoint& pt) {
    if (!std::isfinite(pt.lambda) || !std::isfinite(pt.epsilon) || pt.epsilon <= 0.0)
        throw DomainError("spectral point requires finite lambda and epsilon > 0");
}

/// Strictly monotone list of spectral points sharing one epsilon.
struct LambdaGrid {
    std::vector<SpectralPoint> points;
    bool descending_sweep = true;

    /// n equally spaced points on [lambda_min, lambda_max], ascending order.
    static LambdaGrid linear(double lambda_min, double lambda_max, std::size_t n,
                             double epsilon) {
        if (n < 1) throw DomainError("lambda grid needs at least one point");
        if (n > 1 && !(lambda_min < lambda_max))
            throw DomainError("lambda grid requires lambda_min < lambda_max");
        LambdaGrid grid;
        grid.points.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = n == 1 ? lambda_min
                                    : lambda_min + (lambda_max - lambda_min) *
                                                       static_cast<double>(i) /
                                                       static_cast<double>(n - 1);
            grid.points.push_back(SpectralPoint{x, epsilon});
        }
        return grid;
    }

    double step() const {
        return points.size() > 1 ? points[1].lambda - points[0].lambda : 0.0;
    }
};

inline void require_valid(const LambdaGrid& grid) {
    if (grid.points.empty()) throw DomainError("empty lambda grid");
    for (const auto& pt : grid.points) require_valid(pt);
    for (std::size_t i = 1; i < grid.points.size(); ++i) {
        const double prev = grid.points[i - 1].lambda;
        const double cur = grid.points[i].lambda;
        if (!(prev < cur) && !(prev > cur))
            throw DomainError("lambda grid must be strictly monotone");
        if (i > 1) {
            const bool asc = grid.points[1].lambda > grid.points[0].lambda;
            if (asc != (cur > prev))
                throw DomainError("lambda grid must be strictly monotone");
        }
        if (grid.points[i].epsilon != grid.points[0].epsilon)
            throw DomainError("lambda grid points must share one epsilon");
    }
}

// ---------------------------------------------------------------------------
// Fixed-point driver
// ---------------------------------------------------------------------------

/// Stopping and damping parameters shared by every iterative solver.
struct SolverConfig {
    double damping = 0.5;                 // in (0, 1]; 1 means undamped
    double tolerance = 1e-12;             // component-wise |x - map(x)| target
    std::size_t max_iterations = 100000;
    bool warm_start = true;               // curve sweeps reuse the previous solution
};

inline void require_valid(const SolverConfig& cfg) {
    if (!(cfg.damping > 0.0) || cfg.damping > 1.0)
        throw DomainError("solver damping must lie in (0, 1]");
    if (!(cfg.tolerance > 0.0) || cfg.tolerance >= 1.0)
        throw DomainError("solver tolerance must lie in (0, 1)");
    if (cfg.max_iterations < 1)
        throw DomainError("solver needs max_iterations >= 1");
}

namespace detail {

inline double max_abs_diff(Complex a, Complex b) { return std::abs(a - b); }

template <std::size_t K>
double max_abs_diff(const std::array<Complex, K>& a, const std::array<Complex, K>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < K; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline bool all_finite(Complex v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

template <std::size_t K>
bool all_finite(const std::array<Complex, K>& v) {
    for (const auto& c : v)
        if (!all_finite(c)) return false;
    return true;
}

inline Complex blend(Complex x, Complex y, double d) { return x + d * (y - x); }

template <std::size_t K>
std::array<Complex, K> blend(const std::array<Complex, K>& x,
                             const std::array<Complex, K>& y, double d) {
    std::array<Complex, K> out;
    for (std::size_t i = 0; i < K; ++i) out[i] = x[i] + d * (y[i] - x[i]);
    return out;
}

}  // namespace detail

template <class State>
struct FixedPointResult {
    State solution{};
    std::size_t iterations = 0;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
};

/// Damped fixed-point iteration x <- (1-d)*x + d*map(x).
///
/// State is a Complex or a small std::array of Complex. The run is
/// deterministic: identical inputs produce bit-identical iterates. On
/// convergence the returned solution x satisfies |x - map(x)| <= tolerance
/// component-wise; otherwise converged is false and the best iterate is
/// returned. A NaN or infinity coming out of the map throws NonFiniteIterate.
template <class State, class Map>
FixedPointResult<State> damped_fixed_point(Map&& map, State init, const SolverConfig& cfg) {
    require_valid(cfg);
    State x = init;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        State y = map(x);
        if (!detail::all_finite(y)) throw NonFiniteIterate(it);
        residual = detail::max_abs_diff(y, x);
        if (residual <= cfg.tolerance)
            return FixedPointResult<State>{x, it, true, residual};
        x = detail::blend(x, y, cfg.damping);
    }
    return FixedPointResult<State>{x, cfg.max_iterations, false, residual};
}

}  // namespace wspec
