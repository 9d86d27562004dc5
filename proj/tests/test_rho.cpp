#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "fhk/error.hpp"
#include "fhk/rho.hpp"

using namespace fhk;

TEST_CASE("rho formula") {
    rho::Exponents e{0.5, 1.0, 1};
    const double x = 0.25;
    CHECK(rho::rho(e, 0.3, std::span<const double>(&x, 1)) ==
          doctest::Approx(0.3 * std::sqrt(0.25) / (0.0625 + 0.09)).epsilon(1e-14));
    CHECK(rho::rho1(0.5, 1.0, 0.3, x) == doctest::Approx(rho::rho(e, 0.3, std::span<const double>(&x, 1))));
    // the cap saturates at |x| >= 1
    CHECK(rho::rho1(0.5, 0.0, 1.0, 3.0) == doctest::Approx(1.0 / 10.0));
    rho::Exponents e2{0.0, 0.0, 2};
    std::vector<double> y{0.3, 0.4};
    CHECK(rho::rho(e2, 1.0, y) == doctest::Approx(std::pow(1.25, -1.5)));
}

TEST_CASE("space integral against an independent quadrature") {
    quad::QuadratureSpec qs;
    // β = 0: t^γ π / t
    for (double t : {0.1, 1.0, 3.0}) {
        const auto r = rho::rho_space_integral({0.0, 1.0, 1}, t, qs);
        CHECK(r.value == doctest::Approx(std::numbers::pi).epsilon(1e-9));
    }
    for (double beta : {0.25, 0.5})
        for (double t : {0.05, 0.5}) {
            auto f = [&](double x) { return rho::rho1(beta, 0.5, t, x); };
            const double inner = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-13);
            const double outer = std::pow(t, 0.5) * (std::numbers::pi / 2 - std::atan(1.0 / t)) / t;
            const double ref = 2.0 * (inner + outer);
            const auto r = rho::rho_space_integral({beta, 0.5, 1}, t, qs);
            CHECK(r.value == doctest::Approx(ref).epsilon(1e-8));
        }
}

TEST_CASE("three-point inequality on fixed tuples") {
    // collinear chain: RC is largest relative to RA + RB
    auto c = rho::three_p_check({1.0, {2.0}}, {0.5, {0.0}}, {0.0, {-2.0}});
    CHECK(c.pass());
    CHECK(c.fitted_constant <= 2.0);
    auto c2 = rho::three_p_check({1.0, {0.0, 0.0}}, {0.9, {5.0, 5.0}}, {0.0, {0.0, 0.1}});
    CHECK(c2.pass());
    CHECK_THROWS_AS(rho::three_p_check({1.0, {0.0}}, {1.5, {0.0}}, {0.0, {0.0}}), Error);
}

TEST_CASE("three-point fuzz finds no violations and is deterministic") {
    for (int d : {1, 2, 3}) {
        const auto a = rho::three_p_fuzz(d, 20000, 5, 1);
        CHECK(a.pass());
        CHECK(a.lhs == 0.0);
        CHECK(a.fitted_constant <= std::ldexp(1.0, d));
        const auto b = rho::three_p_fuzz(d, 20000, 5, 2);
        CHECK(b.fitted_constant == a.fitted_constant);
    }
}

TEST_CASE("beta function matches Boost") {
    for (double g : {0.02, 0.3, 1.0, 1.7, 2.0})
        for (double b : {0.05, 0.5, 2.0})
            CHECK(rho::beta_function(g, b) == doctest::Approx(boost::math::beta(g, b)).epsilon(1e-13));
}

TEST_CASE("time convolution of power weights") {
    quad::QuadratureSpec qs;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> E(0.02, 2.0);
    for (int i = 0; i < 10; ++i) {
        const auto c = rho::beta_time_identity_check(E(rng), E(rng), 0.1, 0.9, qs);
        CHECK(c.pass());
        CHECK(c.lhs == doctest::Approx(c.rhs).epsilon(1e-6));
    }
}

TEST_CASE("spatial convolution obeys the four-term bound") {
    quad::QuadratureSpec qs;
    rho::Chain ch{1.0, 0.4, 0.0, {0.3}, {-1.2}};
    const auto c = rho::conv_space_bound({0.0, 0.0, 1}, {0.25, 0.0, 1}, ch, qs);
    CHECK(std::isfinite(c.fitted_constant));
    CHECK(c.fitted_constant > 0.0);
    CHECK(c.lhs > 0.0);
}
