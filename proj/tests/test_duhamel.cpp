#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "fhk/duhamel.hpp"
#include "fhk/error.hpp"
#include "fhk/poisson.hpp"

using namespace fhk;
using nlohmann::json;

namespace {
std::shared_ptr<const levi::Kernel> pab(const char* text) {
    return std::make_shared<levi::Kernel>(fields::Coefficients::from_json(json::parse(text), 1), levi::SeriesSpec{},
                                          quad::QuadratureSpec{});
}
} // namespace

TEST_CASE("constant killing rate multiplies the kernel by exp(-t)") {
    duhamel::FullKernel K(pab(R"({"a":{"kind":"constant","params":{"value":1}},
                                  "b":{"kind":"constant","params":{"value":0.3}},
                                  "c":{"kind":"constant","params":{"value":-1}}})"),
                          duhamel::DuhamelSpec{});
    for (double t : {0.1, 0.5, 1.0})
        for (double u : {-2.0, -0.3, 0.0, 0.4, 3.0}) {
            const double ref = std::exp(-t) * poisson::rho1(t, u + 0.3 * t);
            CHECK(K.p(t, 0.25 + u, 0.0, 0.25) == doctest::Approx(ref).epsilon(1e-6));
        }
    const auto cf = duhamel::closed_form_check(K, {0.25, 1.0}, 4.0, 9, 1e-6);
    CHECK_MESSAGE(cf.pass(), cf.notes);

    const auto geo = duhamel::geometric_decay_check(K, 0.0);
    CHECK_MESSAGE(geo.pass(), geo.notes);
    const auto comp = duhamel::composition_check(K, 0.0, {0.2, 0.6}, {-1.0, 0.0, 0.5}, 1e-4);
    CHECK_MESSAGE(comp.pass(), comp.notes);

    // mass decays exactly as exp(-t)
    const auto m = K.apply([](double) { return 1.0; }, 0.8, 0.1, 0.0);
    CHECK(m.value == doctest::Approx(std::exp(-0.8)).epsilon(1e-5));
}

TEST_CASE("a non-positive potential only removes mass") {
    duhamel::DuhamelSpec spec;
    spec.horizon = 0.5;
    spec.xi_step = 0.5;
    spec.row_ratio = 2;
    spec.time_nodes = 6;
    spec.extent = 8;
    duhamel::FullKernel K(pab(R"({"a":{"kind":"constant","params":{"value":1}},
                                  "c":{"kind":"rational_bump","params":{"base":0,"amplitude":-0.5}}})"),
                          spec);
    const auto sign = duhamel::theta_sign_check(K, 0.0, {0.1, 0.3, 0.5}, {-1.0, 0.0, 0.5, 2.0});
    CHECK_MESSAGE(sign.pass(), sign.notes);
    const auto res = duhamel::residual_check(K, 0.0);
    CHECK_MESSAGE(res.pass(), res.notes);
    const auto geo = duhamel::geometric_decay_check(K, 0.0);
    CHECK_MESSAGE(geo.pass(), geo.notes);
    for (double u : {-1.0, 0.0, 0.7}) CHECK(K.p(0.4, u, 0.0, 0.0) <= K.pab().p(0.4, u, 0.0, 0.0) + 1e-10);

    // ∫ p dy with y = x + τ tan θ, which turns the Cauchy profile into a smooth integrand in θ
    const double tau = 0.3, x = 0.2;
    const auto& R = quad::gauss_legendre(40);
    double mass = 0;
    for (size_t i = 0; i < R.x.size(); ++i) {
        const double th = 0.5 * std::numbers::pi * R.x[i], y = x + tau * std::tan(th);
        mass += 0.5 * std::numbers::pi * R.w[i] * K.p(tau, x, 0.0, y) * tau / std::pow(std::cos(th), 2);
    }
    CHECK(mass <= 1.0 + 1e-4);
    // the killing rate near x is about 0.5, so at least a few percent of the mass is gone
    CHECK(mass < 0.95);
    CHECK(mass > std::exp(-0.5 * tau) - 1e-3);
}

TEST_CASE("duhamel spec validation") {
    auto kind_of = [](const char* text) {
        try {
            duhamel::DuhamelSpec s = json::parse(text);
            (void)s;
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::internal;
    };
    CHECK(kind_of(R"({"horizon":0})") == ErrorKind::config);
    CHECK(kind_of(R"({"tol":-1})") == ErrorKind::config);
}
