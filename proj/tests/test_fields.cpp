#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fhk/error.hpp"
#include "fhk/fields.hpp"

using namespace fhk;
using nlohmann::json;

namespace {
fields::ScalarField field(const char* s) { return fields::ScalarField::from_json(json::parse(s), 1); }
} // namespace

TEST_CASE("field kinds evaluate as declared") {
    auto s = field(R"({"kind":"sinusoid","params":{"amplitude":0.3}})");
    CHECK(s.at(0.0, 1.0) == doctest::Approx(0.3 * std::sin(1.0)));
    CHECK(s.lower() == doctest::Approx(-0.3));
    CHECK(s.bounded());
    auto r = field(R"({"kind":"rational_bump","params":{"base":1,"amplitude":0.2}})");
    CHECK(r.at(0.0, 2.0) == doctest::Approx(1.0 + 0.2 / 5.0));
    auto h = field(R"({"kind":"holder_cap","params":{"amplitude":1,"exponent":0.5}})");
    CHECK(h.at(0.0, 0.25) == doctest::Approx(0.5));
    CHECK(h.at(0.0, 4.0) == doctest::Approx(1.0));
    CHECK(h.declared_beta() == 0.5);
    auto p = field(R"({"kind":"singular_power","params":{"exponent":0.5}})");
    CHECK(p.at(0.0, 0.25) == doctest::Approx(2.0));
    CHECK(p.at(0.0, 1.5) == 0.0);
    CHECK_FALSE(p.bounded());
    auto tc = field(R"({"kind":"time_cosine","params":{"base":1,"amplitude":0.1}})");
    CHECK_FALSE(tc.time_homogeneous());
    CHECK(tc.at(0.5, 3.0) == doctest::Approx(1.0 + 0.1 * std::cos(0.5)));
    // f(t, .) = 0 for t < 0
    CHECK(tc.at(-0.1, 0.0) == 0.0);
}

TEST_CASE("config errors name the problem") {
    CHECK_THROWS_AS(field(R"({"params":{}})"), Error);
    CHECK_THROWS_AS(field(R"({"kind":"unknown"})"), Error);
    CHECK_THROWS_AS(field(R"({"kind":"sinusoid","params":{}})"), Error);
    try {
        field(R"({"kind":"holder_cap","params":{"amplitude":1,"exponent":1.5}})");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("exponent") != std::string::npos);
    }
}

TEST_CASE("coefficients with non-positive a are rejected") {
    try {
        auto co = fields::Coefficients::from_json(json::parse(R"({"a":{"kind":"sinusoid","params":{"amplitude":2}}})"), 1);
        fields::validate(co);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
    auto ok = fields::Coefficients::from_json(
        json::parse(R"({"a":{"kind":"rational_bump","params":{"base":1,"amplitude":0.2}},
                        "b":{"kind":"sinusoid","params":{"amplitude":0.3}}})"),
        1);
    CHECK_NOTHROW(fields::validate(ok));
    CHECK(ok.a0() == doctest::Approx(1.0));
    CHECK(ok.a1() == doctest::Approx(1.2));
    CHECK(ok.b1() == doctest::Approx(0.3));
    CHECK(ok.time_homogeneous());
    CHECK_FALSE(ok.constant_ab());
    // json round trip
    auto back = fields::Coefficients::from_json(ok.to_json(), 1);
    CHECK(back.a.at(0, 0.7) == ok.a.at(0, 0.7));
    CHECK(back.b[0].at(0, 0.7) == ok.b[0].at(0, 0.7));
}

TEST_CASE("sampled Holder seminorm is a lower bound of the true one") {
    auto s = field(R"({"kind":"sinusoid","params":{"amplitude":1}})");
    fields::SampleSpec sp;
    const double q1 = fields::holder_seminorm(s, 1.0, sp);
    CHECK(q1 <= 1.0 + 1e-12);
    CHECK(q1 > 0.95);
    // |sin x - sin y| <= 2^{1-β} |x-y|^β
    const double qh = fields::holder_seminorm(s, 0.5, sp);
    CHECK(qh <= std::sqrt(2.0) + 1e-12);
    auto h = field(R"({"kind":"holder_cap","params":{"amplitude":1,"exponent":0.5}})");
    CHECK(fields::holder_seminorm(h, 0.5, sp) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Kato functional of a constant potential is linear") {
    quad::QuadratureSpec qs;
    auto one = fields::ScalarField::constant(1.0);
    fields::KatoGrid g;
    g.points = {{0.0}};
    g.random_probes = 0;
    // 2 ∫_0^ε ∫ s / (z² + s²) dz ds = 2π ε
    for (double eps : {0.1, 0.01}) {
        const auto k = fields::kato_functional(one, 1.0, eps, fields::KatoForm::ell, g, qs);
        CHECK(k.value == doctest::Approx(2.0 * std::numbers::pi * eps).epsilon(1e-8));
    }
}

TEST_CASE("Kato functional of a singular potential decays like sqrt(eps)") {
    quad::QuadratureSpec qs;
    auto p = field(R"({"kind":"singular_power","params":{"exponent":0.5}})");
    fields::KatoGrid g;
    g.points = {{0.0}};
    g.random_probes = 0;
    // oracle at the singular point x = 0: 2 ∫_0^ε ∫_{-1}^{1} s/(z²+s²) |z|^{-1/2} dz ds
    const double eps = 0.01;
    // z = w² removes the |z|^{-1/2} singularity: ∫_0^1 2s/(z²+s²) z^{-1/2} dz = ∫_0^1 4s/(w⁴+s²) dw
    auto inner = [&](double s) {
        auto f = [&](double w) { return 4.0 * s / (w * w * w * w + s * s); };
        const double m = std::sqrt(s);
        double a = 0.0;
        for (auto [lo, hi] : {std::pair{0.0, m}, std::pair{m, 1.0}})
            a += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 12, 1e-12);
        return 2.0 * a;
    };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, 0.0, eps, 12, 1e-11);
    const auto k = fields::kato_functional(p, 1.0, eps, fields::KatoForm::ell, g, qs);
    CHECK(k.value >= ref * (1.0 - 1e-6));
    CHECK(k.value == doctest::Approx(ref).epsilon(1e-3));
    std::vector<double> ladder{0.1, 0.01, 0.001}, vals;
    for (double e : ladder) vals.push_back(fields::kato_functional(p, 1.0, e, fields::KatoForm::ell, g, qs).value);
    CHECK(fields::loglog_slope(ladder, vals) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(vals[2] < vals[1]);
    CHECK(vals[1] < vals[0]);
}

TEST_CASE("loglog slope") {
    CHECK(fields::loglog_slope({1, 10, 100}, {3, 30, 300}) == doctest::Approx(1.0));
    CHECK(fields::loglog_slope({1, 4, 16}, {1, 2, 4}) == doctest::Approx(0.5));
}
