#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "fhk/error.hpp"
#include "fhk/poisson.hpp"
#include "fhk/quadrature.hpp"

using namespace fhk;

TEST_CASE("Gauss-Legendre nodes match Boost") {
    const auto& r = quad::gauss_legendre(10);
    const auto& bx = boost::math::quadrature::gauss<double, 10>::abscissa();
    const auto& bw = boost::math::quadrature::gauss<double, 10>::weights();
    // Boost stores the non-negative half
    for (size_t k = 0; k < bx.size(); ++k) {
        bool found = false;
        for (size_t i = 0; i < r.x.size(); ++i)
            if (std::abs(r.x[i] - bx[k]) < 1e-13) {
                CHECK(r.w[i] == doctest::Approx(bw[k]).epsilon(1e-13));
                found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("Gauss-Jacobi integrates polynomial moments exactly") {
    // ∫ (1-x)^a (1+x)^b ((1+x)/2)^k dx = 2^{a+b+1} B(b+k+1, a+1)
    for (double a : {-0.75, -0.3, 0.0, 1.5})
        for (double b : {-0.5, 0.0, 0.25}) {
            const auto& r = quad::gauss_jacobi(12, a, b);
            for (int k = 0; k <= 20; k += 5) {
                double v = 0.0;
                for (size_t i = 0; i < r.x.size(); ++i) v += r.w[i] * std::pow(0.5 * (1 + r.x[i]), k);
                const double exact = std::pow(2.0, a + b + 1) * boost::math::beta(b + k + 1, a + 1);
                CHECK(v == doctest::Approx(exact).epsilon(1e-12));
            }
        }
}

TEST_CASE("singular time integrals") {
    quad::QuadratureSpec qs;
    // ∫_s^t (r-s)^{-0.7} (t-r)^{-0.2} dr = (t-s)^{0.1} B(0.3, 0.8)
    const double s = 0.2, t = 1.1;
    const auto r = quad::integrate_time_singular([](double) { return 1.0; }, s, t, -0.7, -0.2, qs);
    CHECK(r.value == doctest::Approx(std::pow(t - s, 0.1) * boost::math::beta(0.3, 0.8)).epsilon(1e-10));
    std::vector<double> n, w;
    quad::split_time_rule(s, t, -0.7, -0.2, 16, n, w);
    double v = 0.0;
    for (size_t i = 0; i < n.size(); ++i) v += w[i] * std::pow(n[i] - s, -0.7) * std::pow(t - n[i], -0.2) * std::exp(n[i]);
    // reference by substitution with Boost's tanh-sinh is overkill; compare two rule sizes instead
    std::vector<double> n2, w2;
    quad::split_time_rule(s, t, -0.7, -0.2, 32, n2, w2);
    double v2 = 0.0;
    for (size_t i = 0; i < n2.size(); ++i)
        v2 += w2[i] * std::pow(n2[i] - s, -0.7) * std::pow(t - n2[i], -0.2) * std::exp(n2[i]);
    CHECK(v == doctest::Approx(v2).epsilon(1e-12));
}

TEST_CASE("line rule handles narrow peaks and heavy tails") {
    quad::QuadratureSpec qs;
    for (double w : {1e-4, 1e-2, 1.0, 30.0}) {
        quad::LineHints h;
        h.centers = {{0.37, w}};
        const auto r = quad::integrate_line([&](double z) { return poisson::rho1(w, z - 0.37); }, h, qs);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
    }
    // integrand with a kink
    quad::LineHints h;
    h.centers = {{0.0, 1.0}};
    h.breakpoints = {0.5};
    const auto r = quad::integrate_line([](double z) { return std::exp(-std::abs(z - 0.5)); }, h, qs);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("interval rule") {
    std::vector<double> n, w;
    quad::LineHints h;
    h.centers = {{0.0, 0.1}};
    quad::interval_rule(-1.0, 2.0, h, quad::SpatialRule{}, 0, n, w);
    double v = 0.0;
    for (size_t i = 0; i < n.size(); ++i) v += w[i] * n[i] * n[i];
    CHECK(v == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("spec json round trip and validation") {
    quad::QuadratureSpec s;
    s.pv.levels = 5;
    s.pv.tail = "average";
    s.spatial.far = 12.0;
    nlohmann::json j = s;
    const auto back = j.get<quad::QuadratureSpec>();
    CHECK(back.pv.levels == 5);
    CHECK(back.pv.tail == "average");
    CHECK(back.spatial.far == 12.0);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"pv":{"tail":"other"}})").get<quad::QuadratureSpec>(), Error);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"pv":{"levels":1}})").get<quad::QuadratureSpec>(), Error);
}
