// Runs every acceptance experiment with its default configuration and prints one line per criterion.
// Usage: acceptance [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "fhk/error.hpp"
#include "fhk/experiments.hpp"

namespace {

struct Criterion {
    int id;
    const char* title;
    const char* experiment;
    double max_seconds; // 0: no runtime requirement
};

const std::vector<Criterion> criteria = {
    {1, "constant-coefficient exactness", "constant_exact", 60},
    {2, "Poisson normalization and semigroup", "poisson_normalization", 0},
    {3, "Fourier normalization of the PV operator", "fourier_normalization", 0},
    {4, "three-point inequality fuzz", "lemma23_fuzz", 30},
    {5, "Beta time identity", "beta_identity", 0},
    {6, "series ledger", "series_ledger", 0},
    {7, "mass and Chapman-Kolmogorov", "mass_chapman_kolmogorov", 0},
    {8, "two-sided bounds", "two_sided_bounds", 0},
    {9, "forward equation residual", "pde_residual", 0},
    {10, "gradient and Holder estimates", "gradient_holder", 0},
    {11, "Feynman-Kac closed form and Duhamel residual", "feynman_kac_closed_form", 0},
    {12, "Monte Carlo cross-check", "mc_crosscheck", 600},
    {13, "Kato functionals", "kato_functionals", 0},
};

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0, run = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++run;
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            const auto r = fhk::exp::run_experiment(c.experiment, nlohmann::json::object(), {});
            ok = !r.failed();
            for (const auto& ch : r.checks) {
                if (ch.status != fhk::Status::pass) {
                    char buf[256];
                    std::snprintf(buf, sizeof buf, " %s:%s(lhs=%.4g rhs=%.4g)", ch.check_name.c_str(),
                                  fhk::status_name(ch.status), ch.lhs, ch.rhs);
                    detail += buf;
                }
            }
        } catch (const std::exception& e) {
            detail = std::string(" error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.max_seconds > 0 && secs > c.max_seconds) {
            ok = false;
            char buf[96];
            std::snprintf(buf, sizeof buf, " runtime %.1f s exceeds %.0f s", secs, c.max_seconds);
            detail += buf;
        }
        failed += !ok;
        std::printf("criterion %2d %s  %-45s [%s, %.1f s]%s\n", c.id, ok ? "PASS" : "FAIL", c.title, c.experiment,
                    secs, detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", run - failed, run);
    return failed ? 1 : 0;
}
