#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include "wspec/core.hpp"

using namespace wspec;

TEST_CASE("linear contraction reaches its fixed point", "[core]") {
    SolverConfig cfg;
    cfg.damping = 1.0;
    auto r = damped_fixed_point([](Complex x) { return 0.5 * x + 1.0; }, Complex{0.0, 0.0},
                                cfg);
    REQUIRE(r.converged);
    REQUIRE(std::abs(r.solution - Complex{2.0, 0.0}) <= 2.0 * cfg.tolerance);
}

TEST_CASE("identity map converges immediately", "[core]") {
    SolverConfig cfg;
    const Complex init{7.0, 2.0};
    auto r = damped_fixed_point([](Complex x) { return x; }, init, cfg);
    REQUIRE(r.converged);
    REQUIRE(r.iterations == 1);
    REQUIRE(r.solution == init);
}

TEST_CASE("bulk resolvent map converges from a real start", "[core]") {
    // s = 1, alpha = 4, lambda = 4: the map chi -> 1/(z + 4/(chi-1)) starting
    // from <s>/lambda = 0.25 on the real axis must escape to the retarded
    // attractor (1 - i sqrt(15))/8, giving rho = sqrt(15)/(8 pi).
    SolverConfig cfg;
    const Complex z{4.0, 1e-9};
    auto map = [&](Complex chi) { return 1.0 / (z + 4.0 / (chi - 1.0)); };
    auto r = damped_fixed_point(map, Complex{0.25, 0.0}, cfg);
    REQUIRE(r.converged);
    const double rho = -r.solution.imag() / kPi;
    REQUIRE(std::abs(rho - 0.15410111101537496) <= 2e-6);
}

TEST_CASE("identical inputs give bit-identical results", "[core]") {
    SolverConfig cfg;
    const Complex z{4.0, 1e-9};
    auto map = [&](Complex chi) { return 1.0 / (z + 4.0 / (chi - 1.0)); };
    auto a = damped_fixed_point(map, Complex{0.25, 0.0}, cfg);
    auto b = damped_fixed_point(map, Complex{0.25, 0.0}, cfg);
    REQUIRE(a.solution.real() == b.solution.real());
    REQUIRE(a.solution.imag() == b.solution.imag());
    REQUIRE(a.iterations == b.iterations);
}

TEST_CASE("halving the damping keeps the same attractor", "[core]") {
    const Complex z{4.0, 1e-9};
    auto map = [&](Complex chi) { return 1.0 / (z + 4.0 / (chi - 1.0)); };
    SolverConfig half;
    half.damping = 0.5;
    SolverConfig quarter;
    quarter.damping = 0.25;
    auto a = damped_fixed_point(map, Complex{0.25, 0.0}, half);
    auto b = damped_fixed_point(map, Complex{0.25, 0.0}, quarter);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    REQUIRE(std::abs(a.solution - b.solution) <= 10.0 * half.tolerance);
}

TEST_CASE("non-finite map output names the iteration", "[core]") {
    SolverConfig cfg;
    int calls = 0;
    auto map = [&](Complex x) {
        ++calls;
        if (calls >= 3) return Complex{std::numeric_limits<double>::quiet_NaN(), 0.0};
        return x + 1.0;
    };
    try {
        damped_fixed_point(map, Complex{0.0, 0.0}, cfg);
        FAIL("expected NonFiniteIterate");
    } catch (const NonFiniteIterate& err) {
        REQUIRE(err.iteration == 3);
    }
}

TEST_CASE("vector-valued states converge component-wise", "[core]") {
    SolverConfig cfg;
    using State = std::array<Complex, 2>;
    auto map = [](const State& s) {
        return State{0.5 * s[0] + 1.0, 0.3 * s[1] + Complex{0.0, 2.0}};
    };
    auto r = damped_fixed_point(map, State{Complex{0, 0}, Complex{0, 0}}, cfg);
    REQUIRE(r.converged);
    REQUIRE(std::abs(r.solution[0] - Complex{2.0, 0.0}) <= 1e-11);
    REQUIRE(std::abs(r.solution[1] - Complex{0.0, 2.0 / 0.7}) <= 1e-11);
}

TEST_CASE("non-convergence is flagged with the best iterate", "[core]") {
    SolverConfig cfg;
    cfg.max_iterations = 4;
    auto r = damped_fixed_point([](Complex x) { return 0.9 * x + 1.0; }, Complex{0, 0},
                                cfg);
    REQUIRE_FALSE(r.converged);
    REQUIRE(r.iterations == 4);
    REQUIRE(r.residual > cfg.tolerance);
}

TEST_CASE("config invariants are enforced", "[core]") {
    SolverConfig bad;
    bad.damping = 0.0;
    REQUIRE_THROWS_AS(
        damped_fixed_point([](Complex x) { return x; }, Complex{}, bad), DomainError);
    bad = SolverConfig{};
    bad.tolerance = 1.0;
    REQUIRE_THROWS_AS(
        damped_fixed_point([](Complex x) { return x; }, Complex{}, bad), DomainError);
    bad = SolverConfig{};
    bad.max_iterations = 0;
    REQUIRE_THROWS_AS(
        damped_fixed_point([](Complex x) { return x; }, Complex{}, bad), DomainError);
}
