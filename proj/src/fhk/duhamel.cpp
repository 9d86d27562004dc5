#include "fhk/duhamel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "fhk/error.hpp"
#include "fhk/poisson.hpp"
#include "fhk/rho.hpp"

namespace fhk::duhamel {

using nlohmann::json;

void to_json(json& j, const DuhamelSpec& s) {
    j = json{{"horizon", s.horizon},
             {"window", s.window},
             {"safety", s.safety},
             {"tol", s.tol},
             {"n_max", s.n_max},
             {"sigma_min_rel", s.sigma_min_rel},
             {"row_ratio", s.row_ratio},
             {"xi_step", s.xi_step},
             {"extent", s.extent},
             {"time_nodes", s.time_nodes},
             {"ledger_sigma_rel", s.ledger_sigma_rel},
             {"ledger_u_max", s.ledger_u_max}};
}

void from_json(const json& j, DuhamelSpec& s) {
    s.horizon = j.value("horizon", s.horizon);
    s.window = j.value("window", s.window);
    s.safety = j.value("safety", s.safety);
    s.tol = j.value("tol", s.tol);
    s.n_max = j.value("n_max", s.n_max);
    s.sigma_min_rel = j.value("sigma_min_rel", s.sigma_min_rel);
    s.row_ratio = j.value("row_ratio", s.row_ratio);
    s.xi_step = j.value("xi_step", s.xi_step);
    s.extent = j.value("extent", s.extent);
    s.time_nodes = j.value("time_nodes", s.time_nodes);
    s.ledger_sigma_rel = j.value("ledger_sigma_rel", s.ledger_sigma_rel);
    s.ledger_u_max = j.value("ledger_u_max", s.ledger_u_max);
    require(s.horizon > 0.0 && s.horizon <= 1.0, ErrorKind::config, "duhamel.horizon must lie in (0, 1]");
    require(s.window >= 0.0 && s.window <= s.horizon, ErrorKind::config, "duhamel.window must lie in [0, horizon]");
    require(s.safety >= 1.0, ErrorKind::config, "duhamel.safety must be at least 1");
    require(s.tol > 0.0 && s.n_max >= 1, ErrorKind::config, "duhamel.tol must be positive and n_max >= 1");
}

json DuhamelLedger::to_json() const {
    return json{{"nu", nu},
                {"ell_c1", ell_c1},
                {"lambda_fit", lambda_fit},
                {"window", window},
                {"ratio", ratio},
                {"tail_bound", tail_bound},
                {"residual", residual},
                {"N", N},
                {"compositions", compositions}};
}

struct FullKernel::Anchor {
    double y = 0.0;
    std::vector<levi::Grid> grids;           // level j covers t - s ≤ window·2^j
    std::vector<std::vector<double>> ratio;  // p / p₀(·; y) per level
    std::vector<std::vector<double>> terms;  // Θ_n / p₀(·; y) on level 0
    DuhamelLedger ledger;
};

FullKernel::FullKernel(std::shared_ptr<const levi::Kernel> pab, DuhamelSpec spec)
    : pab_(std::move(pab)), spec_(spec) {
    const auto& co = pab_->coefficients();
    require(co.dim == 1, ErrorKind::config, "the Duhamel series is implemented for d = 1");
    require(co.time_homogeneous(), ErrorKind::config, "the Duhamel series needs time-homogeneous coefficients");
    invariant_ = co.constant_ab() && co.c.space_independent();
}

double FullKernel::frozen(double tau, double x, double y) const {
    const auto& co = coefficients();
    return poisson::rho1(co.a.at(0.0, y) * tau, x - y + co.b[0].at(0.0, y) * tau);
}

double FullKernel::potential_at(double y) const {
    const auto& c = coefficients().c;
    return c.bounded() ? c.at(0.0, y) : 0.0;
}

double FullKernel::base(double tau, double x, double y) const {
    return frozen(tau, x, y) * std::exp(potential_at(y) * tau);
}

double FullKernel::pab_value(double tau, double x, double z) const {
    const double p0 = frozen(tau, x, z);
    if (pab_->translation_invariant()) return p0;
    return p0 + pab_->phi_tabulated(tau, x, 0.0, z);
}

namespace {

double interp(const levi::Grid& g, const std::vector<double>& f, double tau, double u) {
    return g.interpolate(f, tau, u, 0.0);
}

} // namespace

std::shared_ptr<const FullKernel::Anchor> FullKernel::build(double y) const {
    const auto& co = coefficients();
    const auto& c = co.c;
    auto A = std::make_shared<Anchor>();
    A->y = y;
    const double H = spec_.horizon;
    const double ay = co.a.at(0.0, y), by = co.b[0].at(0.0, y);
    quad::QuadratureSpec qs = pab_->model()->quad;
    std::vector<double> breaks;
    for (double b : co.a.breakpoints()) breaks.push_back(b);
    for (double b : co.b[0].breakpoints()) breaks.push_back(b);
    for (double b : c.breakpoints()) breaks.push_back(b);
    for (const auto& p : c.singular_points()) breaks.push_back(p[0]);

    double w = spec_.window > 0.0 ? spec_.window : H;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (int attempt = 0;; ++attempt) {
        levi::Grid g(w, spec_.sigma_min_rel, spec_.row_ratio, spec_.xi_step, spec_.extent, 0.0);
        const int n = g.size();
        std::vector<double> r0(n);
        for (int k = 0; k < g.rows(); ++k)
            for (int j = -g.half(k); j <= g.half(k); ++j) r0[g.index(k, j)] = std::exp(-potential_at(y) * g.sigma(k));
        if (!pab_->translation_invariant()) {
            auto an = pab_->anchor(0.0, y);
            for (int k = 0; k < g.rows(); ++k)
                for (int j = -g.half(k); j <= g.half(k); ++j) {
                    const double x = y + g.u(k, j);
                    r0[g.index(k, j)] = (frozen(g.sigma(k), x, y) + an->phi(g.sigma(k), x)) / base(g.sigma(k), x, y);
                }
        }
        auto nu_of = [&](const std::vector<double>& r) {
            double nu = 0.0;
            for (int k = 0; k < g.rows(); ++k) {
                const double sg = g.sigma(k);
                if (sg < spec_.ledger_sigma_rel * w) continue;
                for (int j = -g.half(k); j <= g.half(k); ++j) {
                    const double u = g.u(k, j);
                    if (std::abs(u) > spec_.ledger_u_max) continue;
                    nu = std::max(nu, std::abs(r[g.index(k, j)] * base(sg, y + u, y)) / rho::rho1(0.0, 1.0, sg, u));
                }
            }
            return nu;
        };
        DuhamelLedger L;
        L.window = w;
        A->terms = {r0};
        L.nu.push_back(nu_of(r0));
        if (c.is_zero()) {
            A->grids = {g};
            A->ratio = {r0};
            A->ledger = L;
            break;
        }
        RowMat M = RowMat::Zero(n, n);
        std::vector<double> ts, tw, zs, zw;
        quad::LineHints hints;
        for (int i = 0; i < n; ++i) {
            const int k = g.row_of(i);
            const double tau = g.sigma(k), x = y + g.u(k, i - g.index(k, 0));
            const double ax = co.a.at(0.0, x), bx = co.b[0].at(0.0, x), den = base(tau, x, y);
            quad::split_time_rule(0.0, tau, 0.0, 0.0, spec_.time_nodes, ts, tw);
            int idx[16];
            double wt[16];
            for (size_t m = 0; m < ts.size(); ++m) {
                const double sigma = ts[m], delta = tau - sigma;
                hints.centers = {{x + bx * delta, ax * delta}, {y - by * sigma, ay * sigma}};
                hints.breakpoints = breaks;
                quad::line_rule(hints, qs.spatial, 0, zs, zw);
                levi::Grid::RowWindow rw;
                g.rows_at(sigma, 0.0, rw);
                for (size_t q = 0; q < zs.size(); ++q) {
                    const double z = zs[q], cz = c.at(0.0, z);
                    if (cz == 0.0) continue;
                    const double f = tw[m] * zw[q] * pab_value(delta, x, z) * cz * base(sigma, z, y) / den;
                    const int cnt = g.stencil(rw, z - y, idx, wt);
                    for (int r = 0; r < cnt; ++r) M(i, idx[r]) += f * wt[r];
                }
            }
        }
        auto step = [&](const std::vector<double>& r) {
            Eigen::VectorXd v = M * Eigen::Map<const Eigen::VectorXd>(r.data(), n);
            return std::vector<double>(v.data(), v.data() + n);
        };
        A->terms.push_back(step(r0));
        L.nu.push_back(nu_of(A->terms[1]));
        fields::KatoGrid kg;
        kg.times = {w};
        auto ell = ell_cache_.find(w);
        if (ell == ell_cache_.end())
            ell = ell_cache_.emplace(w, fields::kato_functional(c, 1.0, w, fields::KatoForm::ell, kg, qs).value).first;
        L.ell_c1 = ell->second;
        L.lambda_fit = L.ell_c1 > 0.0 && L.nu[0] > 0.0 ? spec_.safety * L.nu[1] / (L.nu[0] * L.ell_c1) : 0.0;
        L.ratio = L.lambda_fit * L.ell_c1;
        // automatic windows keep a 1% margin below 1/2 so that rounding cannot decide the choice
        if (L.ratio >= (spec_.window > 0.0 ? 0.5 : 0.495)) {
            std::ostringstream os;
            os << "Duhamel window " << w << " gives Lambda*ell = " << L.ratio << " >= 1/2";
            if (spec_.window > 0.0) fail(ErrorKind::config, os.str() + "; use a smaller duhamel.window");
            if (attempt >= 12) fail(ErrorKind::config, os.str() + "; the potential is too large for this horizon");
            // Λ barely moves with the window while ℓ shrinks about linearly, so skip windows predicted to fail
            double shrink = 0.5;
            while (L.ratio * shrink >= 0.495 && shrink > 1e-3) shrink *= 0.5;
            w *= shrink;
            continue;
        }
        int N = 1;
        auto tail = [&](int N) { return std::pow(L.ratio, N + 1) / (1.0 - L.ratio); };
        while (tail(N) >= spec_.tol) {
            if (N >= spec_.n_max)
                fail(ErrorKind::non_convergence, "Duhamel series: geometric tail " + std::to_string(tail(N)) +
                                                     " after " + std::to_string(N) + " terms");
            A->terms.push_back(step(A->terms.back()));
            L.nu.push_back(nu_of(A->terms.back()));
            ++N;
        }
        L.N = N;
        L.tail_bound = tail(N);
        std::vector<double> sum(n, 0.0);
        for (const auto& t : A->terms)
            for (int i = 0; i < n; ++i) sum[i] += t[i];
        const auto Ms = step(sum);
        std::vector<double> res(n);
        for (int i = 0; i < n; ++i) res[i] = sum[i] - r0[i] - Ms[i];
        L.residual = L.nu[0] > 0.0 ? nu_of(res) / L.nu[0] : 0.0;
        A->grids = {g};
        A->ratio = {sum};
        A->ledger = L;
        break;
    }

    // Chapman–Kolmogorov doubling beyond the window
    double reach = A->ledger.window;
    while (reach < H * (1.0 - 1e-12)) {
        if (!invariant_)
            fail(ErrorKind::config, "horizon " + std::to_string(H) + " exceeds the Duhamel window " +
                                        std::to_string(A->ledger.window) +
                                        "; composition over subwindows needs constant a, b and c");
        const levi::Grid& prev = A->grids.back();
        const std::vector<double>& pr = A->ratio.back();
        const double next_reach = std::min(2.0 * reach, H);
        levi::Grid g(next_reach, spec_.sigma_min_rel, spec_.row_ratio, spec_.xi_step, spec_.extent, 0.0);
        std::vector<double> r(g.size());
        std::vector<double> zs, zw;
        for (int k = 0; k < g.rows(); ++k) {
            const double sg = g.sigma(k);
            for (int j = -g.half(k); j <= g.half(k); ++j) {
                const double u = g.u(k, j);
                if (sg <= reach * (1.0 + 1e-12)) {
                    r[g.index(k, j)] = interp(prev, pr, sg, u);
                    continue;
                }
                const double m = 0.5 * sg;
                quad::LineHints h;
                h.centers = {{-by * m, ay * m}, {u + by * m, ay * m}};
                quad::line_rule(h, qs.spatial, 1, zs, zw);
                double acc = 0.0;
                for (size_t q = 0; q < zs.size(); ++q) {
                    const double v = zs[q];
                    acc += zw[q] * base(m, u - v, 0.0) * interp(prev, pr, m, u - v) * base(m, v, 0.0) *
                           interp(prev, pr, m, v);
                }
                r[g.index(k, j)] = acc / base(sg, u, 0.0);
            }
        }
        A->grids.push_back(g);
        A->ratio.push_back(std::move(r));
        reach = next_reach;
        ++A->ledger.compositions;
    }
    return A;
}

std::shared_ptr<const FullKernel::Anchor> FullKernel::anchor(double y) const {
    const double key = invariant_ ? 0.0 : y;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto a = build(key);
    cache_.emplace(key, a);
    return a;
}

double FullKernel::p(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    const double tau = t - s;
    require(tau <= spec_.horizon * (1.0 + 1e-12), ErrorKind::domain, "kernel: t - s exceeds the horizon");
    auto A = anchor(y);
    const double u = x - y;
    size_t j = 0;
    while (j + 1 < A->grids.size() && tau > A->grids[j].horizon() * (1.0 + 1e-12)) ++j;
    return base(tau, A->y + u, A->y) * interp(A->grids[j], A->ratio[j], tau, u);
}

double FullKernel::theta(int n, double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    auto A = anchor(y);
    require(n >= 0 && n < static_cast<int>(A->terms.size()), ErrorKind::domain, "theta: term index out of range");
    require(t - s <= A->ledger.window * (1.0 + 1e-12), ErrorKind::domain, "theta: t - s exceeds the window");
    const double u = x - y;
    return base(t - s, A->y + u, A->y) * interp(A->grids[0], A->terms[n], t - s, u);
}

const DuhamelLedger& FullKernel::ledger(double y) const { return anchor(y)->ledger; }

quad::QuadResult semigroup_apply(const std::function<double(double, double, double, double)>& p,
                                 const quad::Fn1& f, double t, double x, double s, const quad::LineHints& hints,
                                 const quad::QuadratureSpec& spec) {
    return quad::integrate_line([&](double y) { return p(t, x, s, y) * f(y); }, hints, spec);
}

quad::QuadResult FullKernel::apply(const quad::Fn1& f, double t, double x, double s) const {
    const auto& co = coefficients();
    const double tau = t - s;
    quad::LineHints h;
    h.centers = {{x + co.b[0].at(0.0, x) * tau, co.a.at(0.0, x) * tau}};
    for (double b : co.c.breakpoints()) h.breakpoints.push_back(b);
    quad::QuadratureSpec qs = pab_->model()->quad;
    qs.target_rel_tol = std::max(qs.target_rel_tol, 1e-7);
    qs.max_refinements = std::min(qs.max_refinements, 3);
    return semigroup_apply([this](double t, double x, double s, double y) { return p(t, x, s, y); }, f, t, x, s, h,
                           qs);
}

// ---------------------------------------------------------------------------------------------
// checks

namespace {

CheckReport make(const std::string& name, const std::string& property) {
    CheckReport r;
    r.check_name = name;
    r.property = property;
    return r;
}

double spread(const std::vector<double>& v) {
    double lo = INFINITY, hi = 0.0;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return lo > 0.0 ? hi / lo : INFINITY;
}

} // namespace

CheckReport closed_form_check(const FullKernel& K, const std::vector<double>& times, double u_max, int n_u,
                              double tol) {
    auto r = make("feynman_kac_closed_form", "potential-kernel-closed-form");
    const auto& co = K.coefficients();
    r.params = {{"times", times}, {"u_max", u_max}, {"n_u", n_u}, {"tol", tol}};
    if (!(co.constant_ab() && co.c.space_independent())) {
        r.status = Status::not_applicable;
        r.notes = "needs constant a, b and c";
        return r;
    }
    const double a = co.a.at(0.0, 0.0), b = co.b[0].at(0.0, 0.0), c = co.c.at(0.0, 0.0);
    double worst = 0.0;
    for (double t : times)
        for (int i = 0; i < n_u; ++i) {
            const double u = -u_max + 2.0 * u_max * i / (n_u - 1);
            const double exact = std::exp(c * t) * poisson::rho1(a * t, u + b * t);
            worst = std::max(worst, std::abs(K.p(t, u, 0.0, 0.0) - exact) / exact);
        }
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.params["ledger"] = K.ledger(0.0).to_json();
    r.notes = "relative error against exp(c t) rho(a t, x - y + b t)";
    return r;
}

CheckReport residual_check(const FullKernel& K, double y) {
    auto r = make("duhamel_residual", "duhamel-integral-equation-residual");
    const auto& L = K.ledger(y);
    r.params = {{"anchor_y", y}, {"ledger", L.to_json()}};
    r.lhs = L.residual;
    r.rhs = 10.0 * L.tail_bound;
    r.fitted_constant = L.lambda_fit;
    r.status = K.coefficients().c.is_zero() || L.residual <= 10.0 * L.tail_bound ? Status::pass : Status::fail;
    r.notes = "lhs: sup |p - p_ab - p_ab*(c p)| / rho0_1 relative to nu_0; rhs: ten times the geometric tail";
    return r;
}

CheckReport geometric_decay_check(const FullKernel& K, double y) {
    auto r = make("duhamel_geometric_decay", "duhamel-series-geometric-decay");
    const auto& L = K.ledger(y);
    double worst = 0.0;
    for (size_t n = 0; n + 1 < L.nu.size(); ++n)
        if (L.nu[n] > 0.0) worst = std::max(worst, L.nu[n + 1] / L.nu[n]);
    r.params = {{"anchor_y", y}, {"nu", L.nu}};
    r.lhs = worst;
    r.rhs = L.ratio;
    r.fitted_constant = L.lambda_fit;
    r.status = worst <= L.ratio * (1.0 + 1e-9) ? Status::pass : Status::fail;
    r.notes = "lhs: largest nu_{n+1}/nu_n; rhs: Lambda_fit * ell_c1";
    return r;
}

CheckReport theta_sign_check(const FullKernel& K, double y, const std::vector<double>& taus,
                             const std::vector<double>& offsets) {
    auto r = make("theta_sign", "killing-term-sign");
    r.params = {{"anchor_y", y}, {"taus", taus}};
    const auto& c = K.coefficients().c;
    if (!(c.upper() <= 0.0) || c.is_zero()) {
        r.status = Status::not_applicable;
        r.notes = "needs c <= 0, not identically zero";
        return r;
    }
    const double w = K.ledger(y).window;
    double worst = -INFINITY;
    for (double tau : taus)
        for (double u : offsets) {
            if (tau > w) continue;
            worst = std::max(worst, K.theta(1, tau, y + u, 0.0, y) / K.theta(0, tau, y + u, 0.0, y));
        }
    r.lhs = worst;
    r.rhs = 0.0;
    r.fitted_constant = worst;
    r.status = worst <= 0.0 ? Status::pass : Status::fail;
    r.notes = "lhs: largest Theta_1 / Theta_0 over the scan (taus beyond the window are skipped)";
    return r;
}

CheckReport killing_mass_check(const FullKernel& K, const std::vector<double>& taus, const std::vector<double>& xs,
                               double tol) {
    auto r = make("killing_mass", "killing-mass-bound");
    r.params = {{"taus", taus}, {"xs", xs}, {"tol", tol}};
    if (!(K.coefficients().c.upper() <= 0.0)) {
        r.status = Status::not_applicable;
        r.notes = "needs c <= 0";
        return r;
    }
    double worst = -INFINITY, qerr = 0.0;
    json rows = json::array();
    for (double tau : taus)
        for (double x : xs) {
            const auto q = K.apply([](double) { return 1.0; }, tau, x, 0.0);
            worst = std::max(worst, q.value);
            qerr = std::max(qerr, q.err_estimate);
            rows.push_back({tau, x, q.value});
        }
    r.params["values"] = rows;
    r.lhs = worst;
    r.rhs = 1.0 + tol;
    r.fitted_constant = worst;
    r.quadrature_error = qerr;
    r.status = worst <= 1.0 + tol ? Status::pass : Status::fail;
    return r;
}

CheckReport composition_check(const FullKernel& K, double y, const std::vector<double>& taus,
                              const std::vector<double>& offsets, double tol) {
    auto r = make("window_composition", "window-composition-consistency");
    r.params = {{"anchor_y", y}, {"taus", taus}, {"tol", tol}};
    if (!K.translation_invariant()) {
        r.status = Status::not_applicable;
        r.notes = "composition inside the window needs kernels anchored at every intermediate point";
        return r;
    }
    const auto& co = K.coefficients();
    const double a = co.a.at(0.0, 0.0), b = co.b[0].at(0.0, 0.0);
    const double w = K.ledger(y).window;
    double worst = 0.0;
    std::vector<double> zs, zw;
    for (double tau : taus) {
        if (tau > w) continue;
        const double m = 0.5 * tau;
        for (double u : offsets) {
            const double x = y + u;
            quad::LineHints h;
            h.centers = {{x + b * m, a * m}, {y - b * m, a * m}};
            quad::line_rule(h, K.pab().model()->quad.spatial, 1, zs, zw);
            double acc = 0.0;
            for (size_t q = 0; q < zs.size(); ++q) acc += zw[q] * K.p(tau, x, m, zs[q]) * K.p(m, zs[q], 0.0, y);
            const double direct = K.p(tau, x, 0.0, y);
            worst = std::max(worst, std::abs(acc - direct) / direct);
        }
    }
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    r.notes = "relative difference between direct and composed values inside the window";
    return r;
}

CheckReport full_chapman_kolmogorov_check(const FullKernel& K, double t, double rt, const std::vector<double>& xs,
                                          double y, double tol) {
    auto r = make("full_chapman_kolmogorov", "chapman-kolmogorov");
    r.params = {{"t", t}, {"r", rt}, {"xs", xs}, {"y", y}, {"tol", tol}};
    if (!K.translation_invariant()) {
        r.status = Status::not_applicable;
        r.notes = "needs kernels anchored at every intermediate point";
        return r;
    }
    const auto& co = K.coefficients();
    const double a = co.a.at(0.0, 0.0), b = co.b[0].at(0.0, 0.0);
    double worst = 0.0;
    std::vector<double> zs, zw;
    for (double x : xs) {
        quad::LineHints h;
        h.centers = {{x + b * (t - rt), a * (t - rt)}, {y - b * rt, a * rt}};
        quad::line_rule(h, K.pab().model()->quad.spatial, 1, zs, zw);
        double acc = 0.0;
        for (size_t q = 0; q < zs.size(); ++q) acc += zw[q] * K.p(t, x, rt, zs[q]) * K.p(rt, zs[q], 0.0, y);
        const double direct = K.p(t, x, 0.0, y);
        worst = std::max(worst, std::abs(acc - direct) / direct);
    }
    r.lhs = worst;
    r.rhs = tol;
    r.fitted_constant = worst;
    r.status = worst < tol ? Status::pass : Status::fail;
    return r;
}

CheckReport full_two_sided_check(const FullKernel& K, const std::vector<double>& taus,
                                 const std::vector<double>& offsets, const std::vector<double>& anchors) {
    auto r = make("full_two_sided", "two-sided-kernel-bounds");
    double sup = 0.0, inf = INFINITY;
    for (double y : anchors)
        for (double tau : taus)
            for (double u : offsets) {
                const double v = K.p(tau, y + u, 0.0, y) / rho::rho1(0.0, 1.0, tau, u);
                sup = std::max(sup, v);
                inf = std::min(inf, v);
            }
    const bool lower_applies = K.coefficients().a.space_independent();
    r.params = {{"taus", taus}, {"anchors", anchors}, {"kappa1", sup},
                {"kappa2", inf > 0.0 ? 1.0 / inf : INFINITY}, {"lower_bound_applies", lower_applies}};
    r.lhs = sup;
    r.rhs = inf;
    r.fitted_constant = sup;
    r.status = std::isfinite(sup) && (!lower_applies || inf > 0.0) ? Status::pass : Status::fail;
    r.notes = "lhs = kappa1 = sup p/rho0_1; rhs = inf p/rho0_1 (lower bound asserted only for x-independent a)";
    return r;
}

CheckReport full_gradient_check(const FullKernel& K, double gamma, const std::vector<double>& taus,
                                const std::vector<double>& anchors, double spread_limit) {
    auto r = make("full_gradient_estimate", "kernel-gradient-estimate");
    const auto& c = K.coefficients().c;
    r.params = {{"gamma", gamma}, {"taus", taus}, {"anchors", anchors}, {"spread_limit", spread_limit}};
    if (!(c.bounded() && c.declared_beta() >= gamma)) {
        r.status = Status::not_applicable;
        r.notes = "needs c Holder continuous of order gamma";
        return r;
    }
    std::vector<double> maxima;
    for (double tau : taus) {
        double m = 0.0;
        for (double y : anchors)
            for (int k = -2; k <= 3; ++k)
                for (double sgn : {-1.0, 1.0}) {
                    const double u = sgn * tau * std::ldexp(1.0, k), x = y + u, h = 1e-3 * tau;
                    const double g = (K.p(tau, x + h, 0.0, y) - K.p(tau, x - h, 0.0, y)) / (2.0 * h);
                    const double w = std::abs(u) + tau;
                    m = std::max(m, std::abs(g) * w * w);
                }
        maxima.push_back(m);
    }
    const double sp = spread(maxima);
    r.params["slice_maxima"] = maxima;
    r.lhs = sp;
    r.rhs = spread_limit;
    r.fitted_constant = *std::max_element(maxima.begin(), maxima.end());
    r.status = sp <= spread_limit ? Status::pass : Status::fail;
    return r;
}

CheckReport full_holder_check(const FullKernel& K, double gamma, int n_pairs, const std::vector<double>& taus,
                              const std::vector<double>& anchors, std::uint64_t seed, double spread_limit) {
    auto r = make("full_holder_estimate", "kernel-holder-estimate");
    const auto& c = K.coefficients().c;
    r.params = {{"gamma", gamma}, {"n_pairs", n_pairs}, {"taus", taus}, {"anchors", anchors}, {"seed", seed}};
    if (!(c.bounded() || c.kato_gamma() <= 1.0 - gamma)) {
        r.status = Status::not_applicable;
        r.notes = "needs c in the Kato class of order 1 - gamma";
        return r;
    }
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
        const double wgt = std::pow(gap, gamma) *
                           (rho::rho1(0.0, 1.0 - gamma, tau, x - y) + rho::rho1(0.0, 1.0 - gamma, tau, x2 - y));
        maxima[k] = std::max(maxima[k], diff / wgt);
    }
    const double sp = spread(maxima);
    r.params["slice_maxima"] = maxima;
    r.lhs = sp;
    r.rhs = spread_limit;
    r.fitted_constant = *std::max_element(maxima.begin(), maxima.end());
    r.status = sp <= spread_limit ? Status::pass : Status::fail;
    return r;
}

} // namespace fhk::duhamel
