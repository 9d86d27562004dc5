#include "fhk/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>

#include "fhk/duhamel.hpp"
#include "fhk/error.hpp"
#include "fhk/fields.hpp"
#include "fhk/levi.hpp"
#include "fhk/levi_checks.hpp"
#include "fhk/mc.hpp"
#include "fhk/poisson.hpp"
#include "fhk/quadrature.hpp"
#include "fhk/rho.hpp"

namespace fhk::exp {

using nlohmann::json;

bool ExperimentResult::failed() const {
    for (const auto& c : checks)
        if (c.failed()) return true;
    return false;
}

json ExperimentResult::report() const {
    json j;
    j["schema_version"] = report_schema_version;
    j["experiment"] = name;
    j["property"] = property;
    j["config"] = config;
    j["checks"] = to_json(checks);
    int failed_n = 0, passed = 0, na = 0;
    for (const auto& c : checks) {
        failed_n += c.status == Status::fail;
        passed += c.status == Status::pass;
        na += c.status == Status::not_applicable;
    }
    j["summary"] = {{"pass", passed}, {"fail", failed_n}, {"not_applicable", na}};
    return j;
}

namespace {

const json set_a = json::parse(R"({"a":{"kind":"rational_bump","params":{"base":1,"amplitude":0.2}},
                                   "b":{"kind":"sinusoid","params":{"amplitude":0.3}}})");
const json set_b = json::parse(R"({"a":{"kind":"constant","params":{"value":1}},
                                   "b":{"kind":"sinusoid","params":{"amplitude":0.3}}})");

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

std::vector<double> linspace(const json& j) {
    return linspace(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("n").get<int>());
}

double num(const json& cfg, const char* key) { return cfg.at("params").at(key).get<double>(); }

fields::Coefficients coefficients(const json& cfg) {
    auto co = fields::Coefficients::from_json(cfg.at("coefficients"), cfg.at("dim").get<int>());
    fields::validate(co);
    return co;
}

quad::QuadratureSpec quadrature(const json& cfg) { return cfg.at("quadrature").get<quad::QuadratureSpec>(); }

levi::SeriesSpec series(const json& cfg) {
    auto s = cfg.at("series").get<levi::SeriesSpec>();
    s.threads = cfg.at("threads").get<int>();
    return s;
}

// Kernels are expensive; experiments in one process share them by configuration.
std::shared_ptr<const levi::Kernel> kernel(const json& cfg) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const levi::Kernel>> cache;
    json key = {{"coefficients", cfg.at("coefficients")},
                {"series", cfg.at("series")},
                {"quadrature", cfg.at("quadrature")},
                {"dim", cfg.at("dim")}};
    const std::string k = key.dump();
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    auto K = std::make_shared<const levi::Kernel>(coefficients(cfg), series(cfg), quadrature(cfg));
    cache.emplace(k, K);
    return K;
}

ExperimentResult start(const std::string& name, const std::string& property, const json& cfg) {
    ExperimentResult r;
    r.name = name;
    r.property = property;
    r.config = cfg;
    return r;
}

CheckReport check(const std::string& name, const std::string& property, double lhs, double rhs, bool ok,
                  const std::string& notes = "") {
    CheckReport c;
    c.check_name = name;
    c.property = property;
    c.lhs = lhs;
    c.rhs = rhs;
    c.fitted_constant = lhs;
    c.status = ok ? Status::pass : Status::fail;
    c.notes = notes;
    return c;
}

// ---------------------------------------------------------------------------------------------

ExperimentResult constant_exact(const json& cfg, const RunOptions&) {
    auto r = start("constant_exact", "constant-coefficient-exactness", cfg);
    const auto K = kernel(cfg);
    const auto& co = K->coefficients();
    require(co.constant_ab(), ErrorKind::config, "constant_exact needs constant a and b");
    const double a = co.a.at(0.0, 0.0), b = co.b[0].at(0.0, 0.0), tol = num(cfg, "tol");
    const auto xs = linspace(cfg.at("params").at("xs")), ys = linspace(cfg.at("params").at("ys"));
    Table t{"kernel_grid", {"t", "x", "y", "p", "closed_form", "rel_err"}, {}};
    double worst = 0.0;
    for (double tt : cfg.at("params").at("times").get<std::vector<double>>())
        for (double x : xs)
            for (double y : ys) {
                const double p = K->p(tt, x, 0.0, y), exact = poisson::rho1(a * tt, x - y + b * tt);
                const double e = std::abs(p - exact) / exact;
                worst = std::max(worst, e);
                t.rows.push_back({tt, x, y, p, exact, e});
            }
    auto c = check("constant_exact", "constant-coefficient-exactness", worst, tol, worst < tol,
                   "largest relative error against rho(a t, x - y + b t)");
    c.params = {{"points", t.rows.size()}, {"a", a}, {"b", b}};
    r.checks.push_back(c);
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult poisson_normalization(const json& cfg, const RunOptions&) {
    auto r = start("poisson_normalization", "poisson-normalization-and-semigroup", cfg);
    auto qs = quadrature(cfg);
    const double mass_tol = num(cfg, "mass_tol"), conv_tol = num(cfg, "conv_tol");
    Table t{"poisson_mass", {"dim", "t", "mass", "err_estimate"}, {}};
    for (int d : cfg.at("params").at("dims").get<std::vector<int>>()) {
        double worst = 0.0;
        for (double tt : cfg.at("params").at("times").get<std::vector<double>>()) {
            quad::SpaceCenter c{std::vector<double>(d, 0.0), tt};
            const auto q = quad::integrate_space([&](std::span<const double> x) { return poisson::density(tt, x); },
                                                 d, {c}, qs);
            worst = std::max(worst, std::abs(q.value - 1.0));
            t.rows.push_back({d, tt, q.value, q.err_estimate});
        }
        auto c = check("poisson_mass_d" + std::to_string(d), "poisson-normalization", worst, mass_tol,
                       worst < mass_tol, "largest |integral of rho(t, .) - 1|");
        c.params = {{"dim", d}};
        r.checks.push_back(c);
    }
    std::mt19937_64 rng(cfg.at("seed").get<std::uint64_t>());
    std::uniform_real_distribution<double> T(0.05, 1.0), X(-3.0, 3.0);
    Table s{"poisson_semigroup", {"t", "s", "x", "convolution", "rho_t_plus_s", "rel_err"}, {}};
    double worst = 0.0;
    for (int i = 0; i < cfg.at("params").at("n_points").get<int>(); ++i) {
        const double tt = T(rng), ss = T(rng), x = X(rng);
        quad::LineHints h;
        h.centers = {{x, tt}, {0.0, ss}};
        const auto q = quad::integrate_line(
            [&](double z) { return poisson::rho1(tt, x - z) * poisson::rho1(ss, z); }, h, qs);
        const double exact = poisson::rho1(tt + ss, x), e = std::abs(q.value - exact) / exact;
        worst = std::max(worst, e);
        s.rows.push_back({tt, ss, x, q.value, exact, e});
    }
    r.checks.push_back(check("poisson_semigroup", "poisson-semigroup", worst, conv_tol, worst < conv_tol,
                             "largest relative error of rho(t) * rho(s) against rho(t + s)"));
    r.tables.push_back(std::move(t));
    r.tables.push_back(std::move(s));
    return r;
}

ExperimentResult fourier_normalization(const json& cfg, const RunOptions&) {
    auto r = start("fourier_normalization", "fractional-laplacian-normalization", cfg);
    auto qs = quadrature(cfg);
    const double tol = num(cfg, "tol");
    const auto pv = poisson::frac_laplacian_pv_1d([](double y) { return std::cos(y); }, 0.0, 1.0, qs);
    auto c = check("pv_cosine", "fractional-laplacian-normalization", pv.unnormalized, -std::numbers::pi,
                   std::abs(pv.unnormalized + std::numbers::pi) < tol,
                   "lhs: PV integral of (cos y - 1)/y^2; rhs: -pi");
    c.quadrature_error = pv.err_estimate;
    c.params = {{"normalized", pv.value}, {"ladder", pv.ladder}, {"tol", tol}};
    r.checks.push_back(c);
    // the normalized operator applied to the Poisson kernel is its time derivative
    double worst = 0.0;
    Table t{"fraclap_on_poisson", {"t", "x", "pv", "dt_rho", "rel_err"}, {}};
    for (double tt : {0.5, 1.0})
        for (double x : {0.0, 0.7, 2.5}) {
            const auto v = poisson::frac_laplacian_pv_1d([&](double y) { return poisson::rho1(tt, y); }, x, tt, qs);
            const double exact = poisson::rho1_dt(tt, x), e = std::abs(v.value - exact) / std::abs(exact);
            worst = std::max(worst, e);
            t.rows.push_back({tt, x, v.value, exact, e});
        }
    r.checks.push_back(check("pv_on_poisson", "fractional-laplacian-normalization", worst, 1e-5, worst < 1e-5,
                             "relative error of PV half-Laplacian of rho against d/dt rho"));
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult lemma23_fuzz(const json& cfg, const RunOptions&) {
    auto r = start("lemma23_fuzz", "three-point-inequality", cfg);
    const auto n = cfg.at("params").at("n").get<std::int64_t>();
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    for (int d : cfg.at("params").at("dims").get<std::vector<int>>())
        r.checks.push_back(rho::three_p_fuzz(d, n, seed + static_cast<std::uint64_t>(d), cfg.at("threads")));
    return r;
}

ExperimentResult beta_identity(const json& cfg, const RunOptions&) {
    auto r = start("beta_identity", "beta-time-identity", cfg);
    auto qs = quadrature(cfg);
    std::mt19937_64 rng(cfg.at("seed").get<std::uint64_t>());
    std::uniform_real_distribution<double> E(0.0, 1.0), S(0.0, 1.0), D(0.05, 1.0);
    const int n = cfg.at("params").at("n").get<int>();
    const double lo = num(cfg, "exponent_min");
    Table t{"beta_identity", {"gamma", "beta", "s", "t", "lhs", "rhs", "status"}, {}};
    double worst = 0.0;
    int bad = 0;
    for (int i = 0; i < n; ++i) {
        // (0, 2] sampled as 2(1 - U), U in [0, 1), floored at exponent_min
        const double g = std::max(lo, 2.0 * (1.0 - E(rng))), b = std::max(lo, 2.0 * (1.0 - E(rng)));
        const double s = S(rng), tt = s + D(rng);
        const auto c = rho::beta_time_identity_check(g, b, s, tt, qs);
        worst = std::max(worst, std::abs(c.lhs - c.rhs) / std::max(1.0, std::abs(c.rhs)));
        bad += c.failed();
        t.rows.push_back({g, b, s, tt, c.lhs, c.rhs, status_name(c.status)});
    }
    auto c = check("beta_identity", "beta-time-identity", worst, 1e-6, bad == 0,
                   "largest |lhs - rhs| / max(1, |rhs|) over the random draws");
    c.params = {{"draws", n}, {"failures", bad}};
    r.checks.push_back(c);
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult series_ledger(const json& cfg, const RunOptions&) {
    auto r = start("series_ledger", "parametrix-series-gamma-ratio-ledger", cfg);
    const auto K = kernel(cfg);
    const auto a = K->anchor(0.0, num(cfg, "anchor_y"));
    r.checks.push_back(levi::ledger_check(*a, cfg.at("params").at("n_limit").get<int>(), num(cfg, "fit_limit")));
    const auto& L = a->ledger();
    const double tol = num(cfg, "tol");
    auto c = check("series_truncation", "parametrix-series-gamma-ratio-ledger", L.truncation_bound, tol,
                   L.truncation_bound < tol && L.N <= cfg.at("params").at("n_limit").get<int>(),
                   "fitted tail bound at the truncation horizon");
    c.params = {{"N", L.N}, {"tol_horizon", K->model()->series.tol_horizon}};
    r.checks.push_back(c);
    r.checks.push_back(levi::term_bound_check(*a));
    Table t{"ledger", {"n", "nu", "fit"}, {}};
    for (size_t n = 0; n < L.nu.size(); ++n) t.rows.push_back({n, L.nu[n], n < L.fit.size() ? L.fit[n] : 0.0});
    r.tables.push_back(std::move(t));
    return r;
}

std::vector<std::pair<double, double>> pairs(const json& j) {
    std::vector<std::pair<double, double>> v;
    for (const auto& p : j) v.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return v;
}

ExperimentResult mass_chapman_kolmogorov(const json& cfg, const RunOptions&) {
    auto r = start("mass_chapman_kolmogorov", "kernel-mass-and-flow", cfg);
    const auto K = kernel(cfg);
    const auto& p = cfg.at("params");
    r.checks.push_back(levi::mass_check(*K, p.at("mass_taus"), p.at("mass_xs"), p.at("mass_tol")));
    r.checks.push_back(levi::chapman_kolmogorov_check(*K, p.at("ck_t"), pairs(p.at("ck_pairs")), p.at("ck_slices"),
                                                      p.at("ck_tol")));
    return r;
}

ExperimentResult two_sided_bounds(const json& cfg, const RunOptions&) {
    auto r = start("two_sided_bounds", "two-sided-kernel-bounds", cfg);
    const auto K = kernel(cfg);
    const auto& p = cfg.at("params");
    auto g = levi::ScanGrid::uniform(p.at("u_max"), p.at("n_u"), p.at("taus"), p.at("anchors"));
    r.checks.push_back(levi::two_sided_check(*K, g, p.at("ratio_limit")));
    r.checks.push_back(levi::perturbation_bound_check(*K, g));
    return r;
}

ExperimentResult pde_residual(const json& cfg, const RunOptions&) {
    auto r = start("pde_residual", "kernel-solves-forward-equation", cfg);
    const auto K = kernel(cfg);
    const auto& p = cfg.at("params");
    r.checks.push_back(levi::pde_residual_check(*K, p.at("anchor_y"), p.at("taus"), p.at("offsets"), p.at("tol")));
    return r;
}

ExperimentResult gradient_holder(const json& cfg, const RunOptions&) {
    auto r = start("gradient_holder", "kernel-gradient-and-holder-estimates", cfg);
    const auto K = kernel(cfg);
    const auto& p = cfg.at("params");
    auto gs = levi::ScanGrid::scaled(p.at("k_lo"), p.at("k_hi"), p.at("taus"), p.at("anchors"));
    r.checks.push_back(levi::gradient_check(*K, gs, p.at("spread_limit")));
    r.checks.push_back(levi::fraclap_bound_check(*K, gs, p.at("spread_limit")));
    auto gu = levi::ScanGrid::uniform(p.at("u_max"), p.at("n_u"), p.at("taus"), p.at("anchors"));
    r.checks.push_back(
        levi::gradient_fd_check(*K, gu, p.at("fd_points"), cfg.at("seed").get<std::uint64_t>(), p.at("fd_tol")));
    r.checks.push_back(levi::holder_check(*K, p.at("gamma"), p.at("holder_pairs"), p.at("taus"), p.at("anchors"),
                                          cfg.at("seed").get<std::uint64_t>() + 1, p.at("spread_limit")));
    return r;
}

ExperimentResult feynman_kac_closed_form(const json& cfg, const RunOptions&) {
    auto r = start("feynman_kac_closed_form", "potential-kernel-closed-form", cfg);
    const auto K = kernel(cfg);
    duhamel::FullKernel F(K, cfg.at("duhamel").get<duhamel::DuhamelSpec>());
    const auto& p = cfg.at("params");
    r.checks.push_back(duhamel::closed_form_check(F, p.at("times"), p.at("u_max"), p.at("n_u"), p.at("tol")));
    r.checks.push_back(duhamel::residual_check(F, 0.0));
    r.checks.push_back(duhamel::geometric_decay_check(F, 0.0));
    r.checks.push_back(duhamel::theta_sign_check(F, 0.0, {0.05, 0.1}, {-2.0, -0.5, 0.0, 0.5, 2.0}));
    r.checks.push_back(duhamel::killing_mass_check(F, p.at("times"), {0.0, 1.0}, 1e-4));
    r.checks.push_back(duhamel::composition_check(F, 0.0, {0.05, 0.1}, {-2.0, -0.5, 0.0, 0.5, 2.0}, p.at("tol")));
    r.checks.push_back(duhamel::full_chapman_kolmogorov_check(F, 1.0, 0.4, {-1.0, 0.0, 1.0}, 0.2, p.at("tol")));
    Table t{"full_kernel", {"t", "x", "y", "p", "closed_form"}, {}};
    const auto& co = F.coefficients();
    const double a = co.a.at(0.0, 0.0), b = co.b[0].at(0.0, 0.0), c = co.c.at(0.0, 0.0);
    for (double tt : p.at("times").get<std::vector<double>>())
        for (double u : linspace(-p.at("u_max").get<double>(), p.at("u_max").get<double>(), p.at("n_u")))
            t.rows.push_back({tt, u, 0.0, F.p(tt, u, 0.0, 0.0), std::exp(c * tt) * poisson::rho1(a * tt, u + b * tt)});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult mc_crosscheck(const json& cfg, const RunOptions& opt) {
    auto r = start("mc_crosscheck", "feynman-kac-density", cfg);
    const auto K = kernel(cfg);
    const auto& p = cfg.at("params");
    auto es = cfg.at("mc").get<mc::EnsembleSpec>();
    es.seed = cfg.at("seed").get<std::uint64_t>();
    es.threads = cfg.at("threads").get<int>();
    const auto ks = cfg.at("kde").get<mc::KdeSpec>();
    require(es.start.size() == 1, ErrorKind::config, "mc_crosscheck runs in d = 1");
    const double x0 = es.start[0];
    std::vector<double> pts;
    for (double v : linspace(p.at("points"))) pts.push_back(x0 + v);
    const auto pair = mc::coupled_euler_paths(K->coefficients(), es);
    auto cmp = mc::kde_compare(pair.coarse, mc::parametrix_reference(*K, es.horizon, x0), pts, ks, p.at("z_limit"),
                               p.at("min_pass"));
    Table t{"kde_compare", {"y", "kde", "se", "reference", "z"}, {}};
    for (const auto& row : cmp.params["rows"]) t.rows.push_back(row.get<std::vector<json>>());
    r.checks.push_back(cmp);
    r.checks.push_back(mc::step_halving_check(pair, pts, ks, p.at("halving_limit")));
    if (const auto& c = K->coefficients().c; c.space_independent())
        r.checks.push_back(mc::mean_weight_check(pair.coarse, c.at(0.0, 0.0), 1e-10));
    if (p.at("save_ensemble").get<bool>() && !opt.artifacts_dir.empty()) {
        std::filesystem::create_directories(opt.artifacts_dir);
        mc::save_ensemble(pair.coarse, (std::filesystem::path(opt.artifacts_dir) / "ensemble.bin").string());
    }
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult kato_functionals(const json& cfg, const RunOptions&) {
    auto r = start("kato_functionals", "kato-functional-decay", cfg);
    auto qs = quadrature(cfg);
    const auto& p = cfg.at("params");
    const auto ladder = p.at("ladder").get<std::vector<double>>();
    const auto bounded = fields::ScalarField::from_json(p.at("bounded"), 1);
    const auto singular = fields::ScalarField::from_json(p.at("singular"), 1);
    Table t{"kato", {"potential", "eps", "ell"}, {}};
    std::vector<double> vb;
    for (double e : ladder) {
        vb.push_back(fields::kato_functional(bounded, 1.0, e, fields::KatoForm::ell, fields::KatoGrid{}, qs).value);
        t.rows.push_back({"bounded", e, vb.back()});
    }
    const double slope = fields::loglog_slope(ladder, vb);
    auto c = check("kato_linear_bounded", "kato-functional-decay", slope, 1.0,
                   std::abs(slope - 1.0) < p.at("slope_tol").get<double>(),
                   "log-log slope of ell_1(eps) for a bounded potential");
    c.params = {{"ladder", ladder}, {"values", vb}};
    r.checks.push_back(c);
    std::vector<double> vs;
    for (double e : ladder) {
        vs.push_back(fields::kato_functional(singular, 1.0, e, fields::KatoForm::ell, fields::KatoGrid{}, qs).value);
        t.rows.push_back({"singular", e, vs.back()});
    }
    bool decreasing = true;
    for (size_t i = 1; i < vs.size(); ++i) decreasing = decreasing && vs[i] < vs[i - 1];
    const double s2 = fields::loglog_slope(ladder, vs);
    auto d = check("kato_decay_singular", "kato-functional-decay", s2, 0.0, decreasing && s2 > 0.0,
                   "log-log slope of ell_1(eps) for the singular potential; must be positive with decreasing values");
    d.params = {{"ladder", ladder}, {"values", vs}};
    r.checks.push_back(d);
    r.checks.push_back(fields::lp_lq_membership(singular, p.at("lp_p"), INFINITY, 1.0, ladder, qs));
    r.tables.push_back(std::move(t));
    return r;
}

// ---------------------------------------------------------------------------------------------

json base_config(const json& coefficients) {
    json q, s, d, m, k;
    q = quad::QuadratureSpec{};
    s = levi::SeriesSpec{};
    d = duhamel::DuhamelSpec{};
    m = mc::EnsembleSpec{};
    k = mc::KdeSpec{};
    return json{{"schema_version", report_schema_version},
                {"dim", 1},
                {"seed", 7},
                {"threads", 1},
                {"coefficients", coefficients},
                {"quadrature", q},
                {"series", s},
                {"duhamel", d},
                {"mc", m},
                {"kde", k},
                {"params", json::object()}};
}

json with_params(json base, json params) {
    base["params"] = std::move(params);
    return base;
}

const json constant_ab = json::parse(R"({"a":{"kind":"constant","params":{"value":1}},
                                         "b":{"kind":"constant","params":{"value":0.5}}})");
const json constant_abc = json::parse(R"({"a":{"kind":"constant","params":{"value":1}},
                                          "b":{"kind":"constant","params":{"value":0.5}},
                                          "c":{"kind":"constant","params":{"value":-1}}})");

ExperimentResult full_pipeline(const json& cfg, const RunOptions& opt);

std::vector<Experiment> build_registry() {
    std::vector<Experiment> v;
    v.push_back({"constant_exact", "constant a, b: assembled kernel against the shifted Poisson kernel",
                 "constant-coefficient-exactness", "tol",
                 with_params(base_config(constant_ab),
                             {{"times", {0.1, 0.5, 1.0}},
                              {"xs", {{"lo", -2.5}, {"hi", 2.5}, {"n", 21}}},
                              {"ys", {{"lo", -2.5}, {"hi", 2.5}, {"n", 31}}},
                              {"tol", 1e-6}}),
                 constant_exact});
    v.push_back({"poisson_normalization", "Poisson kernel mass in d = 1, 2, 3 and the semigroup identity in d = 1",
                 "poisson-normalization-and-semigroup", "conv_tol",
                 with_params(base_config(constant_ab), {{"dims", {1, 2, 3}},
                                                        {"times", {0.3, 1.0}},
                                                        {"mass_tol", 1e-8},
                                                        {"n_points", 20},
                                                        {"conv_tol", 1e-5}}),
                 poisson_normalization});
    v.push_back({"fourier_normalization", "principal-value constant from the cosine integral",
                 "fractional-laplacian-normalization", "tol",
                 [&] {
                     // cos never settles at infinity
                     auto c = with_params(base_config(constant_ab), {{"tol", 1e-6}});
                     c["quadrature"]["pv"]["far"] = 4096.0;
                     c["quadrature"]["pv"]["max_panel"] = 1.0;
                     c["quadrature"]["pv"]["tail"] = "average";
                     return c;
                 }(),
                 fourier_normalization});
    v.push_back({"lemma23_fuzz", "random tuples against the three-point inequality with constant 2^d",
                 "three-point-inequality", "",
                 with_params(base_config(constant_ab), {{"dims", {1, 2}}, {"n", 100000}}), lemma23_fuzz});
    v.push_back({"beta_identity", "time convolution of power weights against the Beta function",
                 "beta-time-identity", "",
                 with_params(base_config(constant_ab), {{"n", 50}, {"exponent_min", 0.02}}), beta_identity});
    v.push_back({"series_ledger", "parametrix series norms, Gamma-ratio fit, truncation and residual",
                 "parametrix-series-gamma-ratio-ledger", "tol",
                 with_params(base_config(set_a),
                             {{"anchor_y", 0.3}, {"n_limit", 8}, {"fit_limit", 0.2}, {"tol", 1e-4}}),
                 series_ledger});
    v.push_back({"mass_chapman_kolmogorov", "kernel mass and Chapman-Kolmogorov composition",
                 "kernel-mass-and-flow", "mass_tol",
                 with_params(base_config(set_a), {{"mass_taus", {0.25, 1.0}},
                                                  {"mass_xs", {0.0, 0.8}},
                                                  {"mass_tol", 5e-3},
                                                  {"ck_t", 1.0},
                                                  {"ck_pairs", {{0.3, 0.3}, {1.0, 0.0}, {-0.5, 0.5}}},
                                                  {"ck_slices", 3},
                                                  {"ck_tol", 2e-2}}),
                 mass_chapman_kolmogorov});
    v.push_back({"two_sided_bounds", "sup and inf of the kernel against the profile rho0_1",
                 "two-sided-kernel-bounds", "ratio_limit",
                 with_params(base_config(set_b), {{"u_max", 10.0},
                                                  {"n_u", 41},
                                                  {"taus", {0.05, 0.1, 0.25, 0.5, 1.0}},
                                                  {"anchors", {0.0, 0.7, 1.6}},
                                                  {"ratio_limit", 10.0}}),
                 two_sided_bounds});
    v.push_back({"pde_residual", "forward equation residual with finite differences and the PV operator",
                 "kernel-solves-forward-equation", "tol",
                 with_params(base_config(set_a), {{"anchor_y", 0.3},
                                                  {"taus", {0.25, 0.5, 0.75}},
                                                  {"offsets", {-1.0, 0.5, 2.0}},
                                                  {"tol", 5e-2}}),
                 pde_residual});
    v.push_back({"gradient_holder", "gradient and Holder estimates of the kernel",
                 "kernel-gradient-and-holder-estimates", "spread_limit",
                 with_params(base_config(set_b), {{"taus", {0.05, 0.1, 0.25, 0.5, 1.0}},
                                                  {"anchors", {0.0, 0.7, 1.6}},
                                                  {"k_lo", -2},
                                                  {"k_hi", 3},
                                                  {"u_max", 10.0},
                                                  {"n_u", 41},
                                                  {"fd_points", 50},
                                                  {"fd_tol", 1e-3},
                                                  {"gamma", 0.5},
                                                  {"holder_pairs", 1000},
                                                  {"spread_limit", 3.0}}),
                 gradient_holder});
    v.push_back({"feynman_kac_closed_form", "Duhamel series with constant potential against exp(c t) rho",
                 "potential-kernel-closed-form", "tol",
                 with_params(base_config(constant_abc),
                             {{"times", {0.1, 0.5, 1.0}}, {"u_max", 5.0}, {"n_u", 21}, {"tol", 1e-4}}),
                 feynman_kac_closed_form});
    {
        json cfg = with_params(base_config(set_b), {{"points", {{"lo", -2.5}, {"hi", 2.5}, {"n", 20}}},
                                                    {"z_limit", 3.0},
                                                    {"min_pass", 18},
                                                    {"halving_limit", 1.0},
                                                    {"save_ensemble", false}});
        cfg["mc"]["n_paths"] = 1000000;
        cfg["mc"]["step"] = 1e-3;
        cfg["mc"]["horizon"] = 0.5;
        v.push_back({"mc_crosscheck", "Euler Monte Carlo KDE against the parametrix kernel", "feynman-kac-density",
                     "z_limit", cfg, mc_crosscheck});
    }
    v.push_back({"kato_functionals", "Kato functional slopes for bounded and singular potentials",
                 "kato-functional-decay", "slope_tol",
                 with_params(base_config(constant_ab),
                             {{"ladder", {0.1, 0.01, 0.001}},
                              {"bounded", json::parse(R"({"kind":"sinusoid","params":{"amplitude":0.5,"offset":1}})")},
                              {"singular", json::parse(R"({"kind":"singular_power","params":{"exponent":0.5}})")},
                              {"slope_tol", 0.05},
                              {"lp_p", 1.9}}),
                 kato_functionals});
    v.push_back({"full_pipeline_d1", "every acceptance experiment in sequence", "acceptance-suite", "",
                 with_params(base_config(constant_ab), {{"experiments", json::object()}}), full_pipeline});
    return v;
}

const std::vector<std::string> pipeline_order = {
    "constant_exact", "poisson_normalization", "fourier_normalization", "lemma23_fuzz",
    "beta_identity",  "series_ledger",         "mass_chapman_kolmogorov", "two_sided_bounds",
    "pde_residual",   "gradient_holder",       "feynman_kac_closed_form", "mc_crosscheck",
    "kato_functionals"};

ExperimentResult full_pipeline(const json& cfg, const RunOptions& opt) {
    auto r = start("full_pipeline_d1", "acceptance-suite", cfg);
    const auto& overrides = cfg.at("params").at("experiments");
    for (const auto& name : pipeline_order) {
        RunOptions o = opt;
        o.tol.reset();
        o.seed = cfg.at("seed").get<std::uint64_t>();
        o.threads = cfg.at("threads").get<int>();
        if (!o.artifacts_dir.empty()) o.artifacts_dir = (std::filesystem::path(opt.artifacts_dir) / name).string();
        auto sub = run_experiment(name, overrides.value(name, json::object()), o);
        for (auto& c : sub.checks) {
            c.params["experiment"] = name;
            r.checks.push_back(std::move(c));
        }
        for (auto& t : sub.tables) {
            t.name = name + "_" + t.name;
            r.tables.push_back(std::move(t));
        }
    }
    return r;
}

void reject_unknown(const json& have, const json& allowed, const std::string& where) {
    for (auto it = have.begin(); it != have.end(); ++it)
        if (!allowed.contains(it.key())) fail(ErrorKind::config, "unknown configuration key '" + where + it.key() + "'");
}

} // namespace

const std::vector<Experiment>& registry() {
    static const std::vector<Experiment> r = build_registry();
    return r;
}

const Experiment& find_experiment(const std::string& name) {
    for (const auto& e : registry())
        if (e.name == name) return e;
    fail(ErrorKind::config, "unknown experiment '" + name + "' (see --list)");
}

json resolve_config(const Experiment& e, const json& user, const RunOptions& opt) {
    require(user.is_object(), ErrorKind::config, "configuration must be a JSON object");
    reject_unknown(user, e.defaults, "");
    if (user.contains("params")) {
        require(user.at("params").is_object(), ErrorKind::config, "'params' must be an object");
        if (e.name != "full_pipeline_d1") reject_unknown(user.at("params"), e.defaults.at("params"), "params.");
    }
    if (user.contains("schema_version"))
        require(user.at("schema_version") == report_schema_version, ErrorKind::config,
                "schema_version " + user.at("schema_version").dump() + " is not supported");
    json cfg = e.defaults;
    // coefficient specs replace rather than merge, so that a user's 'a' never inherits stale params
    if (user.contains("coefficients")) {
        cfg["coefficients"] = user.at("coefficients");
        json u = user;
        u.erase("coefficients");
        cfg.merge_patch(u);
    } else {
        cfg.merge_patch(user);
    }
    if (opt.seed) cfg["seed"] = *opt.seed;
    cfg["threads"] = opt.threads > 0 ? opt.threads : cfg.at("threads").get<int>();
    if (opt.tol) {
        require(!e.tol_key.empty(), ErrorKind::config, "experiment '" + e.name + "' has no tolerance to override");
        require(*opt.tol > 0.0, ErrorKind::config, "--tol must be positive");
        cfg["params"][e.tol_key] = *opt.tol;
    }
    // validate every section before any computation
    try {
        require(cfg.at("dim").is_number_integer() && cfg.at("dim").get<int>() >= 1, ErrorKind::config,
                "dim must be a positive integer");
        require(cfg.at("threads").get<int>() >= 1, ErrorKind::config, "threads must be at least 1");
        require(cfg.at("seed").is_number_integer() && cfg.at("seed").get<std::int64_t>() >= 0, ErrorKind::config,
                "seed must be a non-negative integer");
        (void)coefficients(cfg);
        (void)cfg.at("quadrature").get<quad::QuadratureSpec>();
        (void)cfg.at("series").get<levi::SeriesSpec>();
        (void)cfg.at("duhamel").get<duhamel::DuhamelSpec>();
        (void)cfg.at("mc").get<mc::EnsembleSpec>();
        (void)cfg.at("kde").get<mc::KdeSpec>();
    } catch (const json::exception& ex) {
        fail(ErrorKind::config, std::string("configuration: ") + ex.what());
    }
    return cfg;
}

ExperimentResult run_experiment(const std::string& name, const json& user, const RunOptions& opt) {
    const auto& e = find_experiment(name);
    const json cfg = resolve_config(e, user, opt);
    try {
        return e.run(cfg, opt);
    } catch (const json::exception& ex) {
        fail(ErrorKind::config, "experiment '" + name + "': " + ex.what());
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

std::string csv_value(const json& v) {
    if (v.is_string()) return csv_field(v.get<std::string>());
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    if (v.is_null()) return "";
    return csv_field(v.dump());
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<json>>& rows) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::config, "cannot write " + path);
    auto line = [&](const auto& cells, auto&& fmt) {
        for (size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << fmt(cells[i]);
        f << "\r\n";
    };
    line(header, [](const std::string& s) { return csv_field(s); });
    for (const auto& r : rows) line(r, [](const json& v) { return csv_value(v); });
}

void write_artifacts(const ExperimentResult& r, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base = fs::path(dir) / r.name;
    fs::create_directories(base);
    {
        std::ofstream f(base / "report.json", std::ios::binary);
        require(static_cast<bool>(f), ErrorKind::config, "cannot write " + (base / "report.json").string());
        f << r.report().dump(2) << "\n";
    }
    std::vector<std::vector<json>> rows;
    for (const auto& c : r.checks)
        rows.push_back({c.check_name, c.property, status_name(c.status), c.lhs, c.rhs, c.fitted_constant,
                        c.quadrature_error, c.notes});
    write_csv((base / "checks.csv").string(),
              {"check", "property", "status", "lhs", "rhs", "fitted_constant", "quadrature_error", "notes"}, rows);
    for (const auto& t : r.tables) write_csv((base / (t.name + ".csv")).string(), t.header, t.rows);
}

} // namespace fhk::exp
