#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "wspec/laws.hpp"

using namespace wspec;

TEST_CASE("uniform bracket of 1/s has its analytic value", "[laws]") {
    auto law = HyperparameterLaw::Uniform(1.0, 5.0);
    const double got = law.expect([](double s) { return 1.0 / s; });
    const double want = std::log(5.0) / 4.0;  // 0.40235947810852507
    REQUIRE(std::abs(got - want) <= 1e-12 * want);
}

TEST_CASE("constant bracket is plain evaluation", "[laws]") {
    auto law = HyperparameterLaw::Constant(3.0);
    REQUIRE(law.expect([](double s) { return s; }) == 3.0);
}

TEST_CASE("discrete bracket averages the atoms", "[laws]") {
    auto law = HyperparameterLaw::Discrete({1.0, 2.0, 3.0});
    const double got = law.expect([](double s) { return s * s; });
    REQUIRE(std::abs(got - 14.0 / 3.0) <= 1e-14);
}

TEST_CASE("bracket is linear and normalized", "[laws]") {
    const std::vector<HyperparameterLaw> laws = {
        HyperparameterLaw::Uniform(0.5, 2.5), HyperparameterLaw::Constant(2.0),
        HyperparameterLaw::Discrete({1.0, 2.0, 5.0})};
    for (const auto& law : laws) {
        auto f = [](double s) { return Complex{s * s, std::sin(s)}; };
        auto g = [](double s) { return Complex{1.0 / (1.0 + s), std::cos(s)}; };
        const Complex lhs =
            law.expect([&](double s) { return 2.5 * f(s) - 1.25 * g(s); });
        const Complex rhs = 2.5 * law.expect(f) - 1.25 * law.expect(g);
        REQUIRE(std::abs(lhs - rhs) <= 1e-12);
        const double one = law.expect([](double) { return 1.0; });
        REQUIRE(std::abs(one - 1.0) <= 1e-13);
    }
}

TEST_CASE("law invariants reject bad parameters", "[laws]") {
    REQUIRE_THROWS_AS(HyperparameterLaw::Uniform(2.0, 1.0), InvalidLaw);
    REQUIRE_THROWS_AS(HyperparameterLaw::Uniform(3.0, 3.0), InvalidLaw);
    REQUIRE_THROWS_AS(HyperparameterLaw::Uniform(-1.0, 3.0), InvalidLaw);
    REQUIRE_THROWS_AS(HyperparameterLaw::Constant(-2.0), InvalidLaw);
    REQUIRE_THROWS_AS(HyperparameterLaw::Discrete({}), InvalidLaw);
    REQUIRE_THROWS_AS(HyperparameterLaw::Discrete({1.0, -1.0}), InvalidLaw);
}

TEST_CASE("non-finite integrand reports the node", "[laws]") {
    auto law = HyperparameterLaw::Uniform(1.0, 3.0);
    auto f = [](double s) {
        return s > 2.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    };
    REQUIRE_THROWS_AS(law.expect(f), EvaluationError);
}

TEST_CASE("doubling the node count leaves smooth brackets unchanged", "[laws]") {
    auto law = HyperparameterLaw::Uniform(1.0, 5.0);
    auto f = [](double s) { return 1.0 / (s + 0.1); };
    const double a = law.expect(f, 128);
    const double b = law.expect(f, 256);
    REQUIRE(std::abs(a - b) <= 1e-12);
}

TEST_CASE("scaled laws rescale the support", "[laws]") {
    auto law = HyperparameterLaw::Uniform(1.0, 5.0).scaled(2.0);
    REQUIRE(law.kind() == LawKind::uniform);
    REQUIRE(law.min() == 2.0);
    REQUIRE(law.max() == 10.0);
    REQUIRE(std::abs(law.mean() - 6.0) <= 1e-12);
    auto atoms = HyperparameterLaw::Discrete({1.0, 3.0}).scaled(0.5);
    REQUIRE(atoms.values() == std::vector<double>{0.5, 1.5});
}

TEST_CASE("mean matches the law parameters", "[laws]") {
    REQUIRE(std::abs(HyperparameterLaw::Uniform(1.0, 5.0).mean() - 3.0) <= 1e-13);
    REQUIRE(HyperparameterLaw::Constant(2.5).mean() == 2.5);
}
