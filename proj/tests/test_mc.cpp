#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "fhk/error.hpp"
#include "fhk/mc.hpp"
#include "fhk/poisson.hpp"

using namespace fhk;
using nlohmann::json;

namespace {
fields::Coefficients coeffs(const char* text) { return fields::Coefficients::from_json(json::parse(text), 1); }

// Asymptotic Kolmogorov distribution, P(sqrt(n) D > x).
double ks_pvalue(double x) {
    double s = 0;
    for (int k = 1; k <= 100; ++k) s += 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * x * x);
    return std::clamp(s, 0.0, 1.0);
}
} // namespace

TEST_CASE("Cauchy increments follow the arctan law") {
    mc::Rng rng(2024);
    const double h = 0.37;
    const int n = 20000;
    std::vector<double> v(n);
    for (auto& x : v) x = mc::sample_cauchy_increment(1, h, rng)[0];
    std::sort(v.begin(), v.end());
    double D = 0;
    for (int i = 0; i < n; ++i) {
        const double F = 0.5 + std::atan(v[i] / h) / std::numbers::pi;
        D = std::max({D, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
    }
    CHECK(ks_pvalue(std::sqrt(double(n)) * D) > 0.01);
    // median of |C| is h
    std::vector<double> a(n);
    std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
    std::nth_element(a.begin(), a.begin() + n / 2, a.end());
    CHECK(a[n / 2] / h == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("isotropic increments in three dimensions") {
    mc::Rng rng(5);
    const int n = 20000;
    int inside = 0;
    for (int i = 0; i < n; ++i) {
        const auto v = mc::sample_cauchy_increment(3, 1.0, rng);
        if (std::hypot(v[0], v[1], v[2]) < 1.0) ++inside;
    }
    // P(|C| < 1) for the 3-d Cauchy law: (2/π)(arctan 1 - 1/2)
    const double p = 2.0 / std::numbers::pi * (std::atan(1.0) - 0.5);
    CHECK(double(inside) / n == doctest::Approx(p).epsilon(0.05));
}

TEST_CASE("ensembles are reproducible and thread independent") {
    const auto co = coeffs(R"({"a":{"kind":"rational_bump","params":{"base":1,"amplitude":0.2}},
                               "b":{"kind":"sinusoid","params":{"amplitude":0.3}},
                               "c":{"kind":"constant","params":{"value":-0.5}}})");
    mc::EnsembleSpec s;
    s.n_paths = 4000;
    s.step = 0.003;
    s.horizon = 0.3;
    s.batches = 8;
    s.seed = 11;
    const auto e1 = mc::euler_paths(co, s);
    s.threads = 4;
    const auto e2 = mc::euler_paths(co, s);
    CHECK(e1.endpoints == e2.endpoints);
    CHECK(e1.weights == e2.weights);
    for (double w : e1.weights) CHECK(w == doctest::Approx(std::exp(-0.5 * 0.3)).epsilon(1e-12));
    s.seed = 12;
    CHECK(mc::euler_paths(co, s).endpoints != e1.endpoints);

    const auto dir = std::filesystem::temp_directory_path() / "fhk_test_mc";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "ens.bin").string();
    mc::save_ensemble(e1, path);
    const auto back = mc::load_ensemble(path);
    CHECK(back.endpoints == e1.endpoints);
    CHECK(back.weights == e1.weights);
    CHECK(back.spec.seed == 11);
    std::filesystem::remove_all(dir);
}

TEST_CASE("constant coefficients: KDE agrees with the smoothed closed form") {
    const auto co = coeffs(R"({"a":{"kind":"constant","params":{"value":1}},
                               "b":{"kind":"constant","params":{"value":0.5}}})");
    mc::EnsembleSpec s;
    s.n_paths = 100000;
    s.step = 0.005;
    s.horizon = 0.5;
    s.batches = 50;
    const auto e = mc::euler_paths(co, s);
    mc::KdeSpec ks;
    ks.bootstrap = 200;
    const auto ref = mc::constant_reference(1, 0.5, 0, 0.5, 0.0);
    const auto r = mc::kde_compare(e, ref, {-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5}, ks, 3.0, 6);
    CHECK_MESSAGE(r.pass(), r.notes);
    const auto tail = mc::tail_slope_check(e, {4.0, 8.0, 16.0}, 0.15);
    CHECK_MESSAGE(tail.pass(), tail.notes);
}

TEST_CASE("Gauss-Hermite rule integrates Gaussian moments") {
    std::vector<double> x, w;
    mc::gauss_hermite(20, x, w);
    double m0 = 0, m2 = 0, m4 = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        m0 += w[i];
        m2 += w[i] * x[i] * x[i];
        m4 += w[i] * std::pow(x[i], 4);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("ensemble spec validation") {
    const auto co = coeffs(R"({"a":{"kind":"constant","params":{"value":1}}})");
    auto rejected = [&](const char* text) {
        try {
            mc::EnsembleSpec s = json::parse(text);
            mc::euler_paths(co, s);
        } catch (const Error& e) {
            return e.kind() == ErrorKind::config;
        }
        return false;
    };
    CHECK(rejected(R"({"n_paths":0})"));
    CHECK(rejected(R"({"step":-0.1})"));
    CHECK(rejected(R"({"step":0.1,"horizon":0.5})"));
    CHECK(rejected(R"({"step":0.001,"horizon":0.5,"start":[0,0]})"));
    CHECK(rejected(R"({"step":0.0015,"horizon":0.5})"));
}
