#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>

#include "wspec/replica.hpp"

using namespace wspec;

namespace {

// sqrt(15)/(8 pi), the MP density at alpha = 4, v = 1, lambda = 4
constexpr double kMpRho4 = 0.15410111101537496;

SolverConfig tight() {
    SolverConfig cfg;
    return cfg;  // defaults: damping 0.5, tol 1e-12, 1e5 iterations
}

}  // namespace

TEST_CASE("all three solvers reproduce the MP point", "[replica]") {
    const auto one = HyperparameterLaw::Constant(1.0);
    const SpectralPoint pt{4.0, 1e-9};

    auto r1 = solve_case1(one, 4.0, pt, tight());
    REQUIRE(r1.converged);
    REQUIRE(std::abs(density_from_chi(r1.params) - kMpRho4) <= 2e-6);
    REQUIRE(std::abs(r1.params.chi_s - Complex{0.125, -0.4841229182759271}) <= 1e-8);

    auto r2 = solve_case2(one, 4.0, pt, tight());
    REQUIRE(std::abs(density_from_chi(r2.params) - kMpRho4) <= 2e-6);

    auto r3 = solve_case3(one, one, 4.0, pt, tight());
    REQUIRE(std::abs(density_from_chi(r3.params) - kMpRho4) <= 2e-6);
}

TEST_CASE("outside the support the density vanishes", "[replica]") {
    const auto one = HyperparameterLaw::Constant(1.0);
    auto r = solve_case1(one, 4.0, {20.0, 1e-9}, tight());
    REQUIRE(r.converged);
    REQUIRE(density_from_chi(r.params) <= 1e-6);
}

TEST_CASE("zero column variances give the bare resolvent", "[replica]") {
    const auto zero = HyperparameterLaw::Constant(0.0);
    const SpectralPoint pt{5.0, 1e-6};
    auto r = solve_case2(zero, 4.0, pt, tight());
    REQUIRE(r.converged);
    REQUIRE(std::abs(r.params.chi_w - 1.0 / pt.z()) <= 1e-12);
    REQUIRE(density_from_chi(r.params) <= 1e-6);
}

TEST_CASE("kronecker solver collapses to the simpler cases", "[replica]") {
    const auto one = HyperparameterLaw::Constant(1.0);
    const auto law_s = HyperparameterLaw::Uniform(1.0, 5.0);
    const auto law_t = HyperparameterLaw::Uniform(2.5, 3.5);
    for (double lambda : {2.5, 4.0, 7.0, 12.0}) {
        const SpectralPoint pt{lambda, 1e-7};
        auto c3s = solve_case3(law_s, one, 4.0, pt, tight());
        auto c1 = solve_case1(law_s, 4.0, pt, tight());
        REQUIRE(std::abs(c3s.params.chi_w - c1.params.chi_w) <= 1e-10);
        REQUIRE(std::abs(c3s.params.chi_s - c1.params.chi_s) <= 1e-10);

        auto c3t = solve_case3(one, law_t, 4.0, pt, tight());
        auto c2 = solve_case2(law_t, 4.0, pt, tight());
        REQUIRE(std::abs(c3t.params.chi_w - c2.params.chi_w) <= 1e-10);
    }
}

TEST_CASE("MP closed form: values, edges, atom, domain", "[replica]") {
    REQUIRE(std::abs(mp_density(4.0, 3.0, 15.0) - 0.042441318157838755) <= 1e-15);
    REQUIRE(mp_density(4.0, 3.0, 2.0) == 0.0);
    REQUIRE(mp_density(4.0, 3.0, 28.0) == 0.0);
    const auto [lo, hi] = mp_edges(4.0, 3.0);
    REQUIRE(lo == 3.0);
    REQUIRE(hi == 27.0);
    REQUIRE_THROWS_AS(mp_density(4.0, 3.0, -1.0), DomainError);
    REQUIRE(mp_atom(0.5) == 0.5);
    REQUIRE(mp_atom(4.0) == 0.0);
    REQUIRE(mp_density(0.5, 1.0, 0.0) == 0.0);
}

TEST_CASE("analytic MP resolvent matches the solver across the line", "[replica]") {
    const auto v3 = HyperparameterLaw::Constant(3.0);
    for (double lambda : {0.5, 2.0, 3.5, 9.0, 15.0, 26.5, 29.0, 60.0}) {
        const SpectralPoint pt{lambda, 1e-9};
        auto r = solve_case2(v3, 4.0, pt, tight());
        REQUIRE(r.converged);
        REQUIRE(std::abs(mp_stieltjes(4.0, 3.0, pt.z()) - r.params.chi_w) <= 1e-8);
    }
}

TEST_CASE("density accessor clamps and rejects", "[replica]") {
    OrderParams p;
    p.chi_w = Complex{0.0, -kPi};
    REQUIRE(density_from_chi(p) == 1.0);
    p.chi_w = Complex{0.3, 0.0};
    REQUIRE(density_from_chi(p) == 0.0);
    p.chi_w = Complex{0.0, kPi * 1e-9};  // rho = -1e-9: roundoff clamp
    REQUIRE(density_from_chi(p) == 0.0);
    p.chi_w = Complex{0.0, kPi * 1e-7};
    REQUIRE_THROWS_AS(density_from_chi(p), NegativeDensity);
}

TEST_CASE("inverse moment identities", "[replica]") {
    const auto one = HyperparameterLaw::Constant(1.0);
    auto unit = inverse_moments_case1(one, 2.0);
    REQUIRE(std::abs(unit.m1 - 1.0) <= 1e-14);
    REQUIRE(std::abs(unit.m2 - 2.0) <= 1e-14);

    const auto u15 = HyperparameterLaw::Uniform(1.0, 5.0);
    auto m = inverse_moments_case1(u15, 4.0);
    const double inv1 = std::log(5.0) / 4.0;
    REQUIRE(std::abs(m.m1 - inv1 / 3.0) <= 1e-12);              // 0.134119826...
    REQUIRE(std::abs(m.m2 - (inv1 * inv1 / 27.0 + 0.2 / 9.0)) <= 1e-12);  // 0.028218264...

    REQUIRE_THROWS_AS(inverse_moments_case1(u15, 1.0), DomainError);
    REQUIRE_THROWS_AS(inverse_moments_case1(HyperparameterLaw::Uniform(0.0, 2.0), 4.0),
                      DomainError);
    REQUIRE_THROWS_AS(inverse_moments_case1(HyperparameterLaw::Constant(0.0), 4.0),
                      DomainError);
}

TEST_CASE("portfolio quantities", "[replica]") {
    const auto one = HyperparameterLaw::Constant(1.0);
    auto unit = portfolio_quantities(one, 2.0);
    REQUIRE(std::abs(unit.epsilon_min - 0.5) <= 1e-14);
    REQUIRE(std::abs(unit.q_w - 2.0) <= 1e-14);

    const auto u15 = HyperparameterLaw::Uniform(1.0, 5.0);
    auto pq = portfolio_quantities(u15, 4.0);
    REQUIRE(std::abs(pq.epsilon_min - 3.728009607357671) <= 1e-12);
    REQUIRE(std::abs(pq.q_w - 1.5687160562267641) <= 1e-12);
}

TEST_CASE("curve sweep: mass, shape, diagnostics", "[replica]") {
    auto spec = EnsembleSpec::row_variance(4.0, HyperparameterLaw::Constant(1.0));
    auto curve = replica_density_curve(spec, LambdaGrid::linear(0.5, 30.0, 1000, 1e-6),
                                       tight());
    REQUIRE(curve.entries.size() == 1000);
    REQUIRE(curve.converged_count() == 1000);
    for (std::size_t i = 1; i < curve.entries.size(); ++i)
        REQUIRE(curve.entries[i - 1].lambda < curve.entries[i].lambda);
    REQUIRE(std::abs(curve_mass(curve) - 1.0) <= 0.005);

    auto single = replica_density_curve(spec, LambdaGrid::linear(4.0, 4.0, 1, 1e-6),
                                        tight());
    REQUIRE(single.entries.size() == 1);
    REQUIRE(std::abs(single.entries[0].rho - kMpRho4) <= 1e-5);
}

TEST_CASE("consistency identities hold at converged kronecker points", "[replica]") {
    const auto law_s = HyperparameterLaw::Uniform(1.0, 5.0);
    const auto law_t = HyperparameterLaw::Uniform(0.0, 2.0);
    const SolverConfig cfg = tight();
    for (double lambda : {3.0, 8.0, 20.0}) {
        const SpectralPoint pt{lambda, 1e-6};
        auto r = solve_case3(law_s, law_t, 4.0, pt, cfg);
        REQUIRE(r.converged);
        const Complex z = pt.z();
        const auto& q = r.params;
        REQUIRE(std::abs(q.chi_s - (1.0 - z * q.chi_w) / (4.0 * q.chi_t)) <=
                100.0 * cfg.tolerance);
        REQUIRE(std::abs(q.chi_t - (1.0 + q.chi_u) / q.chi_s) <= 100.0 * cfg.tolerance);
    }
}

TEST_CASE("rescaling the law rescales the density", "[replica]") {
    const auto law = HyperparameterLaw::Uniform(1.0, 5.0);
    const auto law2 = law.scaled(2.0);
    for (double lambda : {3.0, 6.0, 14.0}) {
        auto base = solve_case1(law, 4.0, {lambda, 1e-6}, tight());
        auto scaled = solve_case1(law2, 4.0, {2.0 * lambda, 2e-6}, tight());
        REQUIRE(base.converged);
        REQUIRE(scaled.converged);
        REQUIRE(std::abs(density_from_chi(scaled.params) -
                         density_from_chi(base.params) / 2.0) <= 1e-8);
    }
}

TEST_CASE("constant laws match the MP law across the bulk", "[replica]") {
    const auto v3 = HyperparameterLaw::Constant(3.0);
    for (double lambda : {3.2, 5.0, 10.0, 15.0, 22.0, 26.9}) {
        const SpectralPoint pt{lambda, 1e-9};
        const double want = mp_density(4.0, 3.0, lambda);
        const double band = std::max(10.0 * pt.epsilon, 1e-6);
        REQUIRE(std::abs(density_from_chi(solve_case1(v3, 4.0, pt, tight()).params) -
                         want) <= band);
        REQUIRE(std::abs(density_from_chi(solve_case2(v3, 4.0, pt, tight()).params) -
                         want) <= band);
        REQUIRE(std::abs(density_from_chi(
                    solve_case3(v3, HyperparameterLaw::Constant(1.0), 4.0, pt, tight())
                        .params) -
                         want) <= band);
    }
}

TEST_CASE("richardson extrapolation removes the linear epsilon bias", "[replica]") {
    auto spec = EnsembleSpec::row_variance(4.0, HyperparameterLaw::Constant(1.0));
    auto grid = LambdaGrid::linear(3.5, 4.5, 3, 1e-3);  // large epsilon on purpose
    auto plain = replica_density_curve(spec, grid, tight());
    CurveOptions opts;
    opts.richardson_epsilon = true;
    auto extrapolated = replica_density_curve(spec, grid, tight(), opts);
    const double want = mp_density(4.0, 1.0, 4.0);
    const double err_plain = std::abs(plain.entries[1].rho - want);
    const double err_rich = std::abs(extrapolated.entries[1].rho - want);
    REQUIRE(err_plain > 1e-6);  // the bias being removed is visible
    REQUIRE(err_rich <= 0.2 * err_plain);
}

TEST_CASE("cold starts find the same branch as the warm sweep", "[replica]") {
    auto spec = EnsembleSpec::row_variance(4.0, HyperparameterLaw::Uniform(1.0, 5.0));
    auto grid = LambdaGrid::linear(3.0, 30.0, 50, 1e-6);
    SolverConfig cold = tight();
    cold.warm_start = false;
    auto warm_curve = replica_density_curve(spec, grid, tight());
    auto cold_curve = replica_density_curve(spec, grid, cold);
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        REQUIRE(warm_curve.entries[i].converged);
        REQUIRE(cold_curve.entries[i].converged);
        REQUIRE(std::abs(warm_curve.entries[i].rho - cold_curve.entries[i].rho) <= 1e-9);
    }
}

TEST_CASE("starved iteration budgets are flagged, not fatal", "[replica]") {
    SolverConfig starved = tight();
    starved.max_iterations = 3;
    auto r = solve_case1(HyperparameterLaw::Constant(1.0), 4.0, {4.0, 1e-9}, starved);
    REQUIRE_FALSE(r.converged);
    REQUIRE(r.residual > starved.tolerance);

    auto spec = EnsembleSpec::row_variance(4.0, HyperparameterLaw::Constant(1.0));
    auto curve = replica_density_curve(spec, LambdaGrid::linear(3.0, 5.0, 5, 1e-9),
                                       starved);
    REQUIRE(curve.entries.size() == 5);
    for (const auto& e : curve.entries) {
        REQUIRE_FALSE(e.converged);
        REQUIRE(std::isnan(e.rho));
    }
}
