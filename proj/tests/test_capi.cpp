#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>

#include <json.hpp>

#include <fhk/fhk.h>

extern "C" int capi_poisson_from_c(double t, double x, double* out);

using nlohmann::json;

namespace {
std::string take(char* s) {
    std::string r = s ? s : "";
    fhk_free_string(s);
    return r;
}
} // namespace

TEST_CASE("version and registry") {
    CHECK(std::strlen(fhk_version()) > 0);
    const int n = fhk_experiment_count();
    CHECK(n >= 13);
    const char *name = nullptr, *desc = nullptr, *prop = nullptr;
    CHECK(fhk_experiment_info(0, &name, &desc, &prop) == FHK_OK);
    CHECK(name != nullptr);
    CHECK(fhk_experiment_info(n, &name, &desc, &prop) == FHK_ERR_ARGUMENT);
    CHECK(fhk_experiment_info(-1, &name, &desc, &prop) == FHK_ERR_ARGUMENT);
}

TEST_CASE("Poisson density through the C interface") {
    double v = 0;
    const double x1 = 0.0;
    CHECK(fhk_poisson_density(1.0, &x1, 1, &v) == FHK_OK);
    CHECK(v == doctest::Approx(1 / std::numbers::pi).epsilon(1e-15));
    const double x3[3] = {0, 0, 0};
    CHECK(fhk_poisson_density(1.0, x3, 3, &v) == FHK_OK);
    CHECK(v == doctest::Approx(1 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-15));
    CHECK(capi_poisson_from_c(2.0, 1.0, &v) == FHK_OK);
    CHECK(v == doctest::Approx(2.0 / (5.0 * std::numbers::pi)).epsilon(1e-15));

    CHECK(fhk_poisson_density(-1.0, &x1, 1, &v) == FHK_ERR_DOMAIN);
    CHECK(std::strlen(fhk_last_error()) > 0);
    CHECK(fhk_poisson_density(1.0, nullptr, 1, &v) == FHK_ERR_ARGUMENT);
    CHECK(fhk_poisson_density(1.0, &x1, 1, nullptr) == FHK_ERR_ARGUMENT);
}

TEST_CASE("kernel handles") {
    fhk_kernel* k = nullptr;
    REQUIRE(fhk_kernel_create(R"({"a":{"kind":"constant","params":{"value":1.5}},
                                  "b":{"kind":"constant","params":{"value":0.4}}})",
                              nullptr, nullptr, &k) == FHK_OK);
    double p = 0, p0 = 0, phi = 1;
    CHECK(fhk_kernel_p(k, 0.7, 1.0, 0.2, 0.3, &p) == FHK_OK);
    CHECK(fhk_kernel_p0(k, 0.7, 1.0, 0.2, 0.3, &p0) == FHK_OK);
    CHECK(fhk_kernel_phi(k, 0.7, 1.0, 0.2, 0.3, &phi) == FHK_OK);
    const double tau = 0.5, u = 0.7 + 0.4 * tau, at = 1.5 * tau;
    CHECK(p == doctest::Approx(at / (std::numbers::pi * (u * u + at * at))).epsilon(1e-12));
    CHECK(p0 == doctest::Approx(p).epsilon(1e-14));
    CHECK(std::abs(phi) < 1e-14);
    CHECK(fhk_kernel_p(k, 0.1, 1.0, 0.2, 0.3, &p) == FHK_ERR_DOMAIN);

    fhk_full_kernel* f = nullptr;
    fhk_kernel* kc = nullptr;
    REQUIRE(fhk_kernel_create(R"({"a":{"kind":"constant","params":{"value":1}},
                                  "c":{"kind":"constant","params":{"value":-1}}})",
                              nullptr, nullptr, &kc) == FHK_OK);
    REQUIRE(fhk_full_kernel_create(kc, nullptr, &f) == FHK_OK);
    CHECK(fhk_full_kernel_p(f, 0.5, 0.3, 0.0, 0.0, &p) == FHK_OK);
    CHECK(p == doctest::Approx(std::exp(-0.5) * 0.5 / (std::numbers::pi * (0.09 + 0.25))).epsilon(1e-6));
    fhk_full_kernel_destroy(f);
    fhk_kernel_destroy(kc);
    fhk_kernel_destroy(k);
    fhk_kernel_destroy(nullptr);

    fhk_kernel* bad = nullptr;
    CHECK(fhk_kernel_create("{not json", nullptr, nullptr, &bad) == FHK_ERR_CONFIG);
    CHECK(bad == nullptr);
    CHECK(fhk_kernel_create(R"({"a":{"kind":"constant","params":{"value":-1}}})", nullptr, nullptr, &bad) ==
          FHK_ERR_CONFIG);
    CHECK(fhk_kernel_create(nullptr, nullptr, nullptr, &bad) == FHK_ERR_ARGUMENT);
}

TEST_CASE("experiments through the C interface") {
    fhk_run_options o{};
    o.has_seed = 1;
    o.seed = 7;
    char* resolved = nullptr;
    REQUIRE(fhk_resolve_config("lemma23_fuzz", R"({"params":{"n":2000}})", &o, &resolved) == FHK_OK);
    const auto cfg = json::parse(take(resolved));
    CHECK(cfg.at("seed") == 7);
    CHECK(cfg.at("params").at("n") == 2000);

    CHECK(fhk_resolve_config("lemma23_fuzz", R"({"nope":1})", &o, &resolved) == FHK_ERR_CONFIG);
    CHECK(std::string(fhk_last_error()).find("nope") != std::string::npos);
    CHECK(fhk_resolve_config("missing", nullptr, nullptr, &resolved) == FHK_ERR_CONFIG);

    const auto dir = std::filesystem::temp_directory_path() / "fhk_test_capi";
    std::filesystem::remove_all(dir);
    const std::string out = dir.string();
    o.out_dir = out.c_str();
    char* report = nullptr;
    int failed = -1;
    REQUIRE(fhk_run_experiment("lemma23_fuzz", R"({"params":{"n":2000}})", &o, &report, &failed) == FHK_OK);
    CHECK(failed == 0);
    const auto rep = json::parse(take(report));
    CHECK(rep.at("experiment") == "lemma23_fuzz");
    CHECK(std::filesystem::exists(dir / "lemma23_fuzz" / "report.json"));
    CHECK(std::filesystem::exists(dir / "lemma23_fuzz" / "checks.csv"));
    std::filesystem::remove_all(dir);

    o = fhk_run_options{};
    o.has_tol = 1;
    o.tol = 1e-3;
    CHECK(fhk_run_experiment("lemma23_fuzz", nullptr, &o, &report, &failed) == FHK_ERR_CONFIG);
}
