#include "fhk/levi_checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fhk/error.hpp"
#include "fhk/frozen.hpp"
#include "fhk/poisson.hpp"
#include "fhk/rho.hpp"

namespace fhk::levi {

using nlohmann::json;

ScanGrid ScanGrid::uniform(double u_max, int n_u, std::vector<double> taus, std::vector<double> anchors) {
    ScanGrid g;
    g.taus = std::move(taus);
    g.anchors = std::move(anchors);
    for (int i = 0; i < n_u; ++i) g.offsets.push_back(-u_max + 2.0 * u_max * i / (n_u - 1));
    return g;
}

ScanGrid ScanGrid::scaled(int k_lo, int k_hi, std::vector<double> taus, std::vector<double> anchors) {
    ScanGrid g;
    g.taus = std::move(taus);
    g.anchors = std::move(anchors);
    g.relative = true;
    for (int k = k_lo; k <= k_hi; ++k) {
        g.offsets.push_back(-std::ldexp(1.0, k));
        g.offsets.push_back(std::ldexp(1.0, k));
    }
    return g;
}

std::vector<double> ScanGrid::offsets_at(double tau) const {
    if (!relative) return offsets;
    std::vector<double> out(offsets);
    for (double& u : out) u *= tau;
    return out;
}

namespace {

double a_at(const Kernel& K, double t, double x) { return K.coefficients().a.at(t, x); }
double b_at(const Kernel& K, double t, double x) { return K.coefficients().b[0].at(t, x); }

// Rule for y ↦ p(t,x;s,y): the mass sits near y = x + b(x)τ with width a(x)τ.
quad::LineHints y_hints(const Kernel& K, double t, double x, double s) {
    const double tau = t - s;
    quad::LineHints h;
    h.centers = {{x + b_at(K, t, x) * tau, a_at(K, t, x) * tau}, {x, tau}};
    for (double b : K.coefficients().a.breakpoints()) h.breakpoints.push_back(b);
    for (double b : K.coefficients().b[0].breakpoints()) h.breakpoints.push_back(b);
    return h;
}

double spread(const std::vector<double>& v) {
    double lo = INFINITY, hi = 0.0;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return lo > 0.0 ? hi / lo : INFINITY;
}

double rho01(double tau, double u) { return rho::rho1(0.0, 1.0, tau, u); }

CheckReport make(const std::string& name, const std::string& property) {
    CheckReport r;
    r.check_name = name;
    r.property = property;
    return r;
}

} // namespace

quad::QuadResult apply_kernel(const Kernel& K, const quad::Fn1& f, double t, double x, double s) {
    const auto hints = y_hints(K, t, x, s);
    const auto& spatial = K.model()->quad.spatial;
    double v[2];
    for (int level = 0; level < 2; ++level) {
        std::vector<double> ys, ws;
        quad::line_rule(hints, spatial, level, ys, ws);
        double acc = 0.0;
        for (size_t i = 0; i < ys.size(); ++i) {
            const double fy = f(ys[i]);
            if (fy != 0.0) acc += ws[i] * fy * K.p_lattice(t, x, s, ys[i]);
        }
        v[level] = acc;
    }
    quad::QuadResult r;
    r.value = v[1];
    r.err_estimate = std::abs(v[1] - v[0]);
    r.refinements_used = 1;
    r.converged = true;
    return r;
}

CheckReport ledger_check(const AnchorSeries& a, int n_limit, double fit_limit) {
    auto r = make("series_ledger", "parametrix-series-gamma-ratio-ledger");
    const Ledger& L = a.ledger();
    r.params = {{"anchor_y", a.y()}, {"n_limit", n_limit}, {"fit_limit", fit_limit}, {"ledger", L.to_json()}};
    r.lhs = L.ie_residual;
    r.rhs = 10.0 * L.truncation_bound;
    r.fitted_constant = L.C;
    const bool fit_ok = L.fit_residual < fit_limit;
    const bool n_ok = L.N <= n_limit;
    const bool ie_ok = L.ie_residual <= 10.0 * L.truncation_bound;
    r.status = a.trivial() || (fit_ok && n_ok && ie_ok) ? Status::pass : Status::fail;
    std::ostringstream os;
    os << "N=" << L.N << " fit_residual=" << L.fit_residual << " truncation_bound=" << L.truncation_bound
       << " ie_residual=" << L.ie_residual;
    r.notes = os.str();
    return r;
}

CheckReport term_bound_check(const AnchorSeries& a) {
    auto r = make("series_term_bounds", "parametrix-series-term-bounds");
    const Ledger& L = a.ledger();
    double worst = 0.0;
    for (size_t n = 0; n < L.nu.size() && n < L.fit.size(); ++n)
        if (L.fit[n] > 0.0) worst = std::max(worst, L.nu[n] / L.fit[n]);
    r.params = {{"anchor_y", a.y()}, {"nu", L.nu}, {"fit", L.fit}};
    r.lhs = worst;
    r.rhs = 1.0 + L.fit_residual;
    r.fitted_constant = L.C;
    r.status = a.trivial() || worst <= 1.0 + L.fit_residual + 1e-12 ? Status::pass : Status::fail;
    r.notes = "lhs is max_n nu_n / fit_n";
    return r;
}

CheckReport mass_check(const Kernel& K, const std::vector<double>& taus, const std::vector<double>& xs, double tol) {
    auto r = make("mass", "kernel-mass-conservation");
    r.params = {{"taus", taus}, {"xs", xs}, {"tol", tol}};
    double worst = 0.0, qerr = 0.0;
    json rows = json::array();
    for (double tau : taus)
        for (double x : xs) {
            const auto q = apply_kernel(K, [](double) { return 1.0; }, tau, x, 0.0);
            worst = std::max(worst, std::abs(q.value - 1.0));
            qerr = std::max(qerr, q.err_estimate);
            rows.push_back({tau, x, q.value});
        }
    r.params["values"] = rows;
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.quadrature_error = qerr;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.notes = "values rows are (tau, x, mass)";
    return r;
}

CheckReport chapman_kolmogorov_check(const Kernel& K, double t, const std::vector<std::pair<double, double>>& xy,
                                     int slices, double tol) {
    auto r = make("chapman_kolmogorov", "chapman-kolmogorov");
    require(slices >= 1, ErrorKind::config, "chapman_kolmogorov_check: need at least one slice");
    r.params = {{"t", t}, {"slices", slices}, {"tol", tol}};
    double worst = 0.0, qerr = 0.0;
    json rows = json::array();
    for (const auto& [x, y] : xy) {
        const double direct = K.p(t, x, 0.0, y);
        for (int k = 1; k <= slices; ++k) {
            const double rt = t * k / (slices + 1);
            quad::LineHints h;
            h.centers = {{x + b_at(K, t, x) * (t - rt), a_at(K, t, x) * (t - rt)},
                         {y - b_at(K, 0.0, y) * rt, a_at(K, 0.0, y) * rt}};
            for (double b : K.coefficients().a.breakpoints()) h.breakpoints.push_back(b);
            for (double b : K.coefficients().b[0].breakpoints()) h.breakpoints.push_back(b);
            auto second = K.anchor(0.0, y);
            double v[2];
            for (int level = 0; level < 2; ++level) {
                std::vector<double> zs, ws;
                quad::line_rule(h, K.model()->quad.spatial, level, zs, ws);
                double acc = 0.0;
                for (size_t i = 0; i < zs.size(); ++i)
                    acc += ws[i] * K.p_lattice(t, x, rt, zs[i]) * second->p(rt, zs[i]);
                v[level] = acc;
            }
            const double rel = std::abs(v[1] - direct) / std::abs(direct);
            worst = std::max(worst, rel);
            qerr = std::max(qerr, std::abs(v[1] - v[0]) / std::abs(direct));
            rows.push_back({x, y, rt, v[1], direct, rel});
        }
    }
    r.params["values"] = rows;
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.quadrature_error = qerr;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.notes = "values rows are (x, y, r, composed, direct, relative residual)";
    return r;
}

CheckReport two_sided_check(const Kernel& K, const ScanGrid& g, double ratio_limit) {
    auto r = make("two_sided", "two-sided-kernel-bounds");
    double sup = 0.0, inf = INFINITY;
    for (double y : g.anchors)
        for (double tau : g.taus)
            for (double u : g.offsets_at(tau)) {
                const double v = K.p(g.s + tau, y + u, g.s, y) / rho01(tau, u);
                sup = std::max(sup, v);
                inf = std::min(inf, v);
            }
    r.params = {{"taus", g.taus}, {"offsets", g.offsets.size()}, {"anchors", g.anchors}, {"ratio_limit", ratio_limit}};
    r.lhs = sup;
    r.rhs = inf;
    r.fitted_constant = inf > 0.0 ? sup / inf : INFINITY;
    r.status = inf > 0.0 && sup / inf < ratio_limit ? Status::pass : Status::fail;
    r.notes = "lhs = sup p/rho0_1, rhs = inf p/rho0_1, fitted_constant = sup/inf";
    return r;
}

CheckReport perturbation_bound_check(const Kernel& K, const ScanGrid& g) {
    auto r = make("perturbation_bound", "kernel-minus-frozen-kernel");
    const double beta = K.model()->beta_eff;
    double lambda = 0.0, pmin = INFINITY;
    for (double y : g.anchors)
        for (double tau : g.taus)
            for (double u : g.offsets_at(tau)) {
                const double x = y + u;
                const double p0 = K.p0(g.s + tau, x, g.s, y);
                const double ph = K.phi(g.s + tau, x, g.s, y);
                lambda = std::max(lambda, std::abs(ph) / (std::pow(tau, beta) * p0));
                pmin = std::min(pmin, p0 + ph);
            }
    // positivity is only asserted on the part of the scan where Λτ^β < 1/2
    bool positive = true;
    double pmin_small = INFINITY;
    for (double y : g.anchors)
        for (double tau : g.taus) {
            if (lambda * std::pow(tau, beta) >= 0.5) continue;
            for (double u : g.offsets_at(tau)) {
                const double v = K.p(g.s + tau, y + u, g.s, y);
                pmin_small = std::min(pmin_small, v);
                positive = positive && v > 0.0;
            }
        }
    r.params = {{"taus", g.taus}, {"anchors", g.anchors}, {"beta", beta}, {"min_p", pmin},
                {"min_p_small_window", std::isfinite(pmin_small) ? pmin_small : 0.0}};
    r.lhs = lambda;
    r.rhs = 0.5;
    r.fitted_constant = lambda;
    r.status = positive ? Status::pass : Status::fail;
    r.notes = "fitted_constant is Lambda in |p - p0| <= Lambda tau^beta p0";
    return r;
}

CheckReport pde_residual_check(const Kernel& K, double y, const std::vector<double>& taus,
                               const std::vector<double>& offsets, double tol) {
    auto r = make("pde_residual", "forward-equation-residual");
    auto a = K.anchor(0.0, y);
    quad::QuadratureSpec pv = K.model()->quad;
    pv.pv.tol = 1e-4;
    pv.pv.far = 32.0;
    pv.pv.max_panel = 1.0;
    double worst = 0.0;
    json rows = json::array();
    for (double tau : taus)
        for (double u : offsets) {
            const double x = y + u, t = a->s() + tau;
            const double ht = 1e-2 * tau, hx = 1e-2 * tau;
            const double dt = (a->p(tau + ht, x) - a->p(tau - ht, x)) / (2.0 * ht);
            const double dx = (a->p(tau, x + hx) - a->p(tau, x - hx)) / (2.0 * hx);
            const auto lap = poisson::frac_laplacian_pv_1d([&](double z) { return a->p(tau, z); }, x, tau, pv);
            const double ax = a_at(K, t, x), bx = b_at(K, t, x);
            const double res = dt - ax * lap.value - bx * dx;
            const double scale = std::abs(dt) + std::abs(ax * lap.value) + std::abs(bx * dx);
            const double rel = std::abs(res) / scale;
            worst = std::max(worst, rel);
            rows.push_back({tau, x, dt, lap.value, dx, rel});
        }
    r.params = {{"anchor_y", y}, {"tol", tol}, {"values", rows}};
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.notes = "values rows are (tau, x, d_t p, frac_lap p, d_x p, relative residual)";
    return r;
}

namespace {

CheckReport slice_stability(const Kernel& K, const ScanGrid& g, double spread_limit, bool grad) {
    auto r = grad ? make("gradient_estimate", "kernel-gradient-estimate")
                  : make("fraclap_estimate", "kernel-half-laplacian-estimate");
    std::vector<double> maxima;
    for (double tau : g.taus) {
        double m = 0.0;
        for (double y : g.anchors)
            for (double u : g.offsets_at(tau)) {
                if (u == 0.0) continue;
                const double x = y + u;
                const double v = grad ? K.grad_x(g.s + tau, x, g.s, y) : K.fraclap_x(g.s + tau, x, g.s, y);
                const double w = std::abs(u) + tau;
                m = std::max(m, std::abs(v) * w * w);
            }
        maxima.push_back(m);
    }
    const double sp = spread(maxima);
    r.params = {{"taus", g.taus}, {"anchors", g.anchors}, {"slice_maxima", maxima}, {"spread_limit", spread_limit}};
    r.lhs = sp;
    r.rhs = spread_limit;
    r.fitted_constant = *std::max_element(maxima.begin(), maxima.end());
    r.status = sp <= spread_limit ? Status::pass : Status::fail;
    r.notes = "kappa per tau slice = max |D p| (|x-y| + tau)^2; lhs is max/min over slices";
    return r;
}

} // namespace

CheckReport gradient_check(const Kernel& K, const ScanGrid& g, double spread_limit) {
    return slice_stability(K, g, spread_limit, true);
}

CheckReport fraclap_bound_check(const Kernel& K, const ScanGrid& g, double spread_limit) {
    return slice_stability(K, g, spread_limit, false);
}

CheckReport gradient_fd_check(const Kernel& K, const ScanGrid& g, int n_points, std::uint64_t seed, double tol) {
    auto r = make("gradient_finite_difference", "kernel-gradient-iterated-integral");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick_tau(0, g.taus.size() - 1), pick_y(0, g.anchors.size() - 1);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    double worst = 0.0;
    json rows = json::array();
    for (int i = 0; i < n_points; ++i) {
        const double tau = g.taus[pick_tau(rng)], y = g.anchors[pick_y(rng)];
        double u = U(rng);
        if (std::abs(u) < 0.05) u = 0.05;
        const double x = y + u, t = g.s + tau, h = 1e-3 * tau;
        const double fd = (K.p(t, x + h, g.s, y) - K.p(t, x - h, g.s, y)) / (2.0 * h);
        const double an = K.grad_x(t, x, g.s, y);
        // relative to the gradient's natural size at this (τ, u)
        const double scale = std::max(std::abs(fd), K.p(t, x, g.s, y) / (std::abs(u) + tau));
        const double rel = std::abs(an - fd) / scale;
        worst = std::max(worst, rel);
        rows.push_back({tau, x, y, an, fd, rel});
    }
    r.params = {{"n_points", n_points}, {"seed", seed}, {"tol", tol}, {"values", rows}};
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.notes = "values rows are (tau, x, y, iterated-integral gradient, central difference, relative error)";
    return r;
}

CheckReport holder_check(const Kernel& K, double gamma, int n_pairs, const std::vector<double>& taus,
                         const std::vector<double>& anchors, std::uint64_t seed, double spread_limit) {
    auto r = make("holder_estimate", "kernel-holder-estimate");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick_y(0, anchors.size() - 1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> maxima(taus.size(), 0.0);
    for (int i = 0; i < n_pairs; ++i) {
        const size_t k = static_cast<size_t>(i) % taus.size();
        const double tau = taus[k], y = anchors[pick_y(rng)];
        const double u = -4.0 + 8.0 * U(rng);
        const double gap = tau * std::pow(10.0, -2.0 + 3.0 * U(rng));
        const double x = y + u, x2 = x + (U(rng) < 0.5 ? gap : -gap);
        const double diff = std::abs(K.p(tau, x, 0.0, y) - K.p(tau, x2, 0.0, y));
        const double w = std::pow(gap, gamma) *
                         (rho::rho1(0.0, 1.0 - gamma, tau, x - y) + rho::rho1(0.0, 1.0 - gamma, tau, x2 - y));
        maxima[k] = std::max(maxima[k], diff / w);
    }
    const double sp = spread(maxima);
    r.params = {{"gamma", gamma},   {"n_pairs", n_pairs},     {"taus", taus},
                {"anchors", anchors}, {"slice_maxima", maxima}, {"spread_limit", spread_limit}};
    r.lhs = sp;
    r.rhs = spread_limit;
    r.fitted_constant = *std::max_element(maxima.begin(), maxima.end());
    r.status = std::isfinite(r.fitted_constant) && sp <= spread_limit ? Status::pass : Status::fail;
    r.notes = "ratio |p(x)-p(x')| / (|x-x'|^gamma (rho0_{1-gamma}(x) + rho0_{1-gamma}(x'))); lhs is max/min of per-tau maxima";
    return r;
}

CheckReport symmetry_check(const Kernel& K, const ScanGrid& g, double tol) {
    auto r = make("reflection_symmetry", "kernel-reflection-symmetry");
    double worst = 0.0;
    for (double y : g.anchors)
        for (double tau : g.taus)
            for (double u : g.offsets_at(tau)) {
                const double x = y + u;
                const double p1 = K.p(g.s + tau, x, g.s, y), p2 = K.p(g.s + tau, -x, g.s, -y);
                worst = std::max(worst, std::abs(p1 - p2) / std::abs(p1));
            }
    r.params = {{"taus", g.taus}, {"anchors", g.anchors}, {"tol", tol}};
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    return r;
}

CheckReport initial_condition_check(const Kernel& K, const quad::Fn1& f, const std::vector<double>& xs,
                                    const std::vector<double>& ladder, double tol) {
    auto r = make("initial_condition", "kernel-initial-condition");
    std::vector<double> errs;
    for (double tau : ladder) {
        double e = 0.0;
        for (double x : xs) e = std::max(e, std::abs(apply_kernel(K, f, tau, x, 0.0).value - f(x)));
        errs.push_back(e);
    }
    bool decreasing = true;
    for (size_t i = 1; i < errs.size(); ++i) decreasing = decreasing && errs[i] < errs[i - 1];
    r.params = {{"ladder", ladder}, {"xs", xs}, {"errors", errs}, {"tol", tol}};
    r.lhs = errs.back();
    r.rhs = tol;
    r.fitted_constant =
        errs.size() > 1 ? std::log(errs[0] / errs.back()) / std::log(ladder[0] / ladder.back()) : 0.0;
    r.status = decreasing && errs.back() < tol ? Status::pass : Status::fail;
    r.notes = "fitted_constant is the observed convergence order in tau";
    return r;
}

CheckReport weak_generator_check(const Kernel& K, const std::vector<double>& ladder, double tol) {
    auto r = make("weak_generator", "kernel-weak-generator");
    require(ladder.size() >= 2, ErrorKind::config, "weak_generator_check: need at least two ladder steps");
    auto f = [](double x) { return std::exp(-x * x); };
    const auto& co = K.coefficients();
    // ∫ g ℒf dx with ℒf = a Δ^{1/2} f + b f'; g = f
    const quad::Rule& gh = quad::gauss_legendre(40);
    const double L = 4.0;
    std::vector<double> xs, ws;
    for (size_t i = 0; i < gh.x.size(); ++i) {
        xs.push_back(L * gh.x[i]);
        ws.push_back(L * gh.w[i]);
    }
    const double t0 = 0.0;
    double exact = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double lap = poisson::frac_laplacian_pv_1d(f, x, 1.0, K.model()->quad).value;
        const double Lf = co.a.at(t0, x) * lap + co.b[0].at(t0, x) * (-2.0 * x * f(x));
        exact += ws[i] * f(x) * Lf;
    }
    std::vector<double> vals;
    for (double tau : ladder) {
        double acc = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            if (f(x) < 1e-8) continue;
            acc += ws[i] * f(x) * (apply_kernel(K, f, tau, x, 0.0).value - f(x)) / tau;
        }
        vals.push_back(acc);
    }
    // linear extrapolation in τ from the last two steps
    const size_t n = vals.size();
    const double t1 = ladder[n - 2], t2 = ladder[n - 1];
    const double extrap = vals[n - 1] + (vals[n - 1] - vals[n - 2]) * t2 / (t1 - t2);
    const double rel = std::abs(extrap - exact) / std::abs(exact);
    r.params = {{"ladder", ladder}, {"values", vals}, {"extrapolated", extrap}, {"tol", tol}};
    r.lhs = extrap;
    r.rhs = exact;
    r.fitted_constant = rel;
    r.status = rel < tol ? Status::pass : Status::fail;
    r.notes = "lhs: limit of <g, (P f - f)/tau>; rhs: <g, L f> with the principal-value half-Laplacian";
    return r;
}

CheckReport linearity_check(const AnchorSeries& a, std::uint64_t seed, double tol) {
    auto r = make("recursion_linearity", "parametrix-recursion-linearity");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    const int n = a.grid().size();
    std::vector<double> f(n), g(n), h(n);
    const double al = N(rng), be = N(rng);
    for (int i = 0; i < n; ++i) {
        f[i] = a.term(0)[i] * (1.0 + 0.1 * N(rng));
        g[i] = a.term(0)[i] * N(rng);
        h[i] = al * f[i] + be * g[i];
    }
    const auto Kf = a.apply(f), Kg = a.apply(g), Kh = a.apply(h);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num = std::max(num, std::abs(Kh[i] - al * Kf[i] - be * Kg[i]));
        den = std::max(den, std::abs(Kh[i]));
    }
    r.params = {{"seed", seed}, {"tol", tol}, {"alpha", al}, {"beta", be}};
    r.lhs = den > 0.0 ? num / den : num;
    r.rhs = tol;
    r.fitted_constant = r.lhs;
    r.status = r.lhs < tol ? Status::pass : Status::fail;
    return r;
}

CheckReport phi_slice_limit_check(const AnchorSeries& a, double sigma, double x, const std::vector<double>& gaps) {
    auto r = make("phi_slice_limit", "correction-slice-initial-limit");
    const double target = a.q(sigma, x);
    std::vector<double> errs;
    for (double gap : gaps) errs.push_back(std::abs(a.phi_slice(sigma + gap, x, sigma) - target));
    bool decreasing = true;
    for (size_t i = 1; i < errs.size(); ++i) decreasing = decreasing && errs[i] < errs[i - 1];
    r.params = {{"sigma", sigma}, {"x", x}, {"gaps", gaps}, {"errors", errs}, {"q", target}};
    r.lhs = errs.back();
    r.rhs = std::abs(target);
    r.fitted_constant = errs.size() > 1 ? std::log(errs.front() / errs.back()) / std::log(gaps.front() / gaps.back())
                                        : 0.0;
    r.status = decreasing ? Status::pass : Status::fail;
    r.notes = "errors |phi(t,x,r) - q(r,x)| along t - r ladder; fitted_constant is the observed order";
    return r;
}

} // namespace fhk::levi
