#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/distributions/cauchy.hpp>

#include "fhk/error.hpp"
#include "fhk/poisson.hpp"
#include "fhk/quadrature.hpp"

using namespace fhk;

TEST_CASE("d = 1 density is the Cauchy law with scale t") {
    for (double t : {0.01, 0.3, 1.0, 7.5})
        for (double x : {-40.0, -1.3, 0.0, 0.2, 3.0}) {
            const boost::math::cauchy_distribution<double> C(0.0, t);
            const double v = poisson::density(t, std::span<const double>(&x, 1));
            CHECK(v == doctest::Approx(boost::math::pdf(C, x)).epsilon(1e-14));
            CHECK(poisson::rho1(t, x) == doctest::Approx(v).epsilon(1e-15));
        }
}

TEST_CASE("prefactor matches Gamma((d+1)/2) / pi^((d+1)/2)") {
    CHECK(poisson::prefactor(1) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
    CHECK(poisson::prefactor(2) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-15));
    CHECK(poisson::prefactor(3) == doctest::Approx(1.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("mass is one in d = 1, 2, 3") {
    quad::QuadratureSpec qs;
    for (int d = 1; d <= 3; ++d)
        for (double t : {0.3, 1.0}) {
            std::vector<quad::SpaceCenter> c{{std::vector<double>(d, 0.0), t}};
            const auto r = quad::integrate_space([&](std::span<const double> x) { return poisson::density(t, x); },
                                                 d, c, qs);
            CHECK(std::abs(r.value - 1.0) < 1e-8);
        }
}

TEST_CASE("closed-form derivatives agree with central differences") {
    const double h = 1e-5;
    for (double t : {0.2, 1.0})
        for (double x : {-0.7, 0.1, 2.0}) {
            const double dx = (poisson::rho1(t, x + h) - poisson::rho1(t, x - h)) / (2 * h);
            const double dt = (poisson::rho1(t + h, x) - poisson::rho1(t - h, x)) / (2 * h);
            CHECK(poisson::rho1_dx(t, x) == doctest::Approx(dx).epsilon(1e-7));
            CHECK(poisson::rho1_dt(t, x) == doctest::Approx(dt).epsilon(1e-7));
            const auto g = poisson::derivatives(t, std::span<const double>(&x, 1), poisson::Deriv::grad);
            CHECK(g.at(0) == doctest::Approx(dx).epsilon(1e-7));
        }
    // d = 2 gradient
    std::vector<double> x{0.3, -0.4};
    const double t = 0.5;
    const auto g = poisson::derivatives(t, x, poisson::Deriv::grad);
    for (int k = 0; k < 2; ++k) {
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        CHECK(g[k] == doctest::Approx((poisson::density(t, xp) - poisson::density(t, xm)) / (2 * h)).epsilon(1e-7));
    }
}

TEST_CASE("half-Laplacian of the kernel is its time derivative") {
    quad::QuadratureSpec qs;
    for (double t : {0.5, 1.0})
        for (double x : {0.0, 0.7, 2.5}) {
            const double exact = poisson::rho1_dt(t, x);
            CHECK(poisson::frac_laplacian_on_poisson(t, std::span<const double>(&x, 1)) ==
                  doctest::Approx(exact).epsilon(1e-12));
            const auto pv = poisson::frac_laplacian_pv_1d([&](double y) { return poisson::rho1(t, y); }, x, t, qs);
            CHECK(pv.value == doctest::Approx(exact).epsilon(1e-8));
        }
}

TEST_CASE("cosine principal value fixes the normalization") {
    quad::QuadratureSpec qs;
    qs.pv.far = 4096;
    qs.pv.max_panel = 1.0;
    qs.pv.tail = "average";
    const auto pv = poisson::frac_laplacian_pv_1d([](double y) { return std::cos(y); }, 0.0, 1.0, qs);
    CHECK(std::abs(pv.unnormalized + std::numbers::pi) < 1e-6);
    // Δ^{1/2} cos = -|ξ| cos at ξ = 1
    CHECK(pv.value == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("semigroup: rho(t) * rho(s) = rho(t + s)") {
    quad::QuadratureSpec qs;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> T(0.05, 2.0), X(-4.0, 4.0);
    for (int i = 0; i < 20; ++i) {
        const double t = T(rng), s = T(rng), x = X(rng);
        quad::LineHints h;
        h.centers = {{0.0, t}, {x, s}};
        const auto r = quad::integrate_line([&](double z) { return poisson::rho1(t, z) * poisson::rho1(s, x - z); }, h, qs);
        CHECK(r.value == doctest::Approx(poisson::rho1(t + s, x)).epsilon(1e-8));
    }
}

TEST_CASE("domain errors") {
    double x = 0.0;
    CHECK_THROWS_AS(poisson::parse_deriv("nope"), Error);
    quad::QuadratureSpec qs;
    CHECK_THROWS_AS(poisson::frac_laplacian_pv_1d([](double) { return 0.0; }, x, -1.0, qs), Error);
}
