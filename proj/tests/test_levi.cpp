#include <doctest.h>

#include <cmath>

#include "fhk/error.hpp"
#include "fhk/frozen.hpp"
#include "fhk/levi.hpp"
#include "fhk/levi_checks.hpp"
#include "fhk/poisson.hpp"

using namespace fhk;
using nlohmann::json;

namespace {
fields::Coefficients coeffs(const char* text) { return fields::Coefficients::from_json(json::parse(text), 1); }

const char* set_a = R"({"a":{"kind":"rational_bump","params":{"base":1,"amplitude":0.2}},
                        "b":{"kind":"sinusoid","params":{"amplitude":0.3}}})";
const char* set_s = R"({"a":{"kind":"rational_bump","params":{"base":1,"amplitude":0.2}}})";

// Composite Gauss-Legendre on (0, T), halving toward both endpoints.
template <class F>
double graded(F&& f, double T, int levels = 40) {
    const auto& R = quad::gauss_legendre(10);
    double acc = 0;
    auto seg = [&](double a, double b) {
        for (size_t i = 0; i < R.x.size(); ++i) acc += 0.5 * (b - a) * R.w[i] * f(0.5 * (a + b) + 0.5 * (b - a) * R.x[i]);
    };
    const double m = 0.5 * T;
    double hi = m;
    for (int k = 0; k < levels; ++k) {
        seg(0.5 * hi, hi);
        hi *= 0.5;
    }
    double lo = m;
    for (int k = 0; k < levels; ++k) {
        const double d = 0.5 * (T - lo);
        seg(lo, lo + d);
        lo += d;
    }
    return acc;
}
} // namespace

TEST_CASE("constant coefficients reproduce the drifted Poisson kernel") {
    const auto co = coeffs(R"({"a":{"kind":"constant","params":{"value":1.5}},
                               "b":{"kind":"constant","params":{"value":0.4}}})");
    levi::Kernel K(co, levi::SeriesSpec{}, quad::QuadratureSpec{});
    CHECK(K.translation_invariant());
    for (double tau : {0.05, 0.3, 1.0})
        for (double u : {-3.0, -0.2, 0.0, 0.7, 5.0}) {
            const double y = 0.3, x = y + u;
            const double ref = poisson::rho1(1.5 * tau, u + 0.4 * tau);
            CHECK(K.p(0.2 + tau, x, 0.2, y) == doctest::Approx(ref).epsilon(1e-12));
            CHECK(std::abs(K.phi(0.2 + tau, x, 0.2, y)) < 1e-14);
        }
}

TEST_CASE("series ledger and recursion structure for a smooth set") {
    levi::Kernel K(coeffs(set_a), levi::SeriesSpec{}, quad::QuadratureSpec{});
    const auto A = K.anchor(0, 0.0);
    const auto led = levi::ledger_check(*A);
    CHECK_MESSAGE(led.pass(), led.notes);
    CHECK(A->ledger().N <= 8);
    CHECK(A->ledger().truncation_bound < 1e-4);
    // the fitted profile decays superexponentially
    for (size_t n = 1; n < A->ledger().fit.size(); ++n) CHECK(A->ledger().fit[n] < A->ledger().fit[n - 1]);

    const auto lin = levi::linearity_check(*A, 5, 1e-10);
    CHECK_MESSAGE(lin.pass(), lin.notes);

    const auto lim = levi::phi_slice_limit_check(*A, 0.3, 0.4, {0.1, 0.03, 0.01, 0.003});
    CHECK_MESSAGE(lim.pass(), lim.notes);
}

TEST_CASE("phi and the integral equation against an independent space-time quadrature") {
    const auto co = coeffs(set_s);
    quad::QuadratureSpec qs;
    qs.spatial.panel_order = 10;
    qs.spatial.far = 30;
    levi::Kernel K(co, levi::SeriesSpec{}, quad::QuadratureSpec{});
    const auto A = K.anchor(0, 0.0);
    auto a = [&](double x) { return co.a.at(0, x); };

    for (double tau : {1.0, 0.25})
        for (double x : {0.0, 1.0, 3.0}) {
            auto space = [&](double s, auto&& kernel) {
                std::vector<double> zs, zw;
                quad::LineHints h;
                h.centers = {{x, a(x) * (tau - s)}, {0.0, s}};
                quad::line_rule(h, qs.spatial, 1, zs, zw);
                double v = 0;
                for (size_t i = 0; i < zs.size(); ++i) v += zw[i] * kernel(s, zs[i]) * A->q(s, zs[i]);
                return v;
            };
            const double phi = graded(
                [&](double s) { return space(s, [&](double r, double z) { return poisson::rho1(a(z) * (tau - r), x - z); }); },
                tau);
            const double conv = graded(
                [&](double s) {
                    return space(s, [&](double r, double z) { return frozen::q0_1(a(x), 0, a(z), 0, tau - r, x - z); });
                },
                tau);
            const double scale = 1.0 / (x * x + tau * tau);
            CHECK(A->phi(tau, x) == doctest::Approx(phi).epsilon(5e-3));
            CHECK(std::abs(A->q(tau, x) - A->q0_direct(tau, x) - conv) < 1e-3 * scale);
        }
}

TEST_CASE("even diffusivity without drift gives a symmetric kernel") {
    levi::Kernel K(coeffs(set_s), levi::SeriesSpec{}, quad::QuadratureSpec{});
    const auto A = K.anchor(0, 0.0);
    for (double tau : {0.1, 0.5, 1.0})
        for (double x : {0.3, 1.2, 4.0}) {
            CHECK(A->p(tau, x) == doctest::Approx(A->p(tau, -x)).epsilon(1e-9));
            CHECK(A->p(tau, x) > 0);
        }
    // off-diagonal anchors pair y with -y
    const auto g = levi::ScanGrid::uniform(3.0, 7, {0.1, 0.5}, {0.7});
    const auto sym = levi::symmetry_check(K, g, 1e-8);
    CHECK_MESSAGE(sym.pass(), sym.notes);
}

TEST_CASE("positivity where the perturbation is small") {
    levi::Kernel K(coeffs(set_a), levi::SeriesSpec{}, quad::QuadratureSpec{});
    const auto g = levi::ScanGrid::uniform(4.0, 9, {0.05, 0.2, 0.5, 1.0}, {0.0});
    const auto r = levi::perturbation_bound_check(K, g);
    CHECK_MESSAGE(r.pass(), r.notes);
    CHECK(r.fitted_constant > 0);
}

TEST_CASE("series spec validation") {
    auto bad = [](const char* text) {
        try {
            levi::SeriesSpec s = json::parse(text);
            (void)s;
        } catch (const Error& e) {
            return e.kind() == ErrorKind::config;
        }
        return false;
    };
    CHECK(bad(R"({"horizon":-1})"));
    CHECK(bad(R"({"row_ratio":1.0})"));
    CHECK(bad(R"({"lattice_far_step":0})"));
    levi::SeriesSpec s;
    s.n_max = 7;
    const json j = s;
    CHECK(j.get<levi::SeriesSpec>().n_max == 7);
}
