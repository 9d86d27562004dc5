#include "fhk/levi.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Dense>

#include "fhk/error.hpp"
#include "fhk/frozen.hpp"
#include "fhk/poisson.hpp"

namespace fhk::levi {

using nlohmann::json;

void to_json(json& j, const SeriesSpec& s) {
    j = json{{"horizon", s.horizon},
             {"sigma_min_rel", s.sigma_min_rel},
             {"row_ratio", s.row_ratio},
             {"xi_step", s.xi_step},
             {"extent", s.extent},
             {"time_nodes", s.time_nodes},
             {"n_max", s.n_max},
             {"tol", s.tol},
             {"tol_horizon", s.tol_horizon},
             {"beta_eff", s.beta_eff},
             {"ledger_sigma_rel", s.ledger_sigma_rel},
             {"ledger_u_max", s.ledger_u_max},
             {"lattice_step", s.lattice_step},
             {"lattice_extent", s.lattice_extent},
             {"lattice_far_step", s.lattice_far_step},
             {"lattice_far_extent", s.lattice_far_extent},
             {"threads", s.threads}};
}

void from_json(const json& j, SeriesSpec& s) {
    s.horizon = j.value("horizon", s.horizon);
    s.sigma_min_rel = j.value("sigma_min_rel", s.sigma_min_rel);
    s.row_ratio = j.value("row_ratio", s.row_ratio);
    s.xi_step = j.value("xi_step", s.xi_step);
    s.extent = j.value("extent", s.extent);
    s.time_nodes = j.value("time_nodes", s.time_nodes);
    s.n_max = j.value("n_max", s.n_max);
    s.tol = j.value("tol", s.tol);
    s.tol_horizon = j.value("tol_horizon", s.tol_horizon);
    s.beta_eff = j.value("beta_eff", s.beta_eff);
    s.ledger_sigma_rel = j.value("ledger_sigma_rel", s.ledger_sigma_rel);
    s.ledger_u_max = j.value("ledger_u_max", s.ledger_u_max);
    s.lattice_step = j.value("lattice_step", s.lattice_step);
    s.lattice_extent = j.value("lattice_extent", s.lattice_extent);
    s.lattice_far_step = j.value("lattice_far_step", s.lattice_far_step);
    s.lattice_far_extent = j.value("lattice_far_extent", s.lattice_far_extent);
    s.threads = j.value("threads", s.threads);
    require(s.horizon > 0.0 && s.horizon <= 1.0, ErrorKind::config, "series.horizon must lie in (0, 1]");
    require(s.sigma_min_rel > 0.0 && s.sigma_min_rel < 1.0, ErrorKind::config,
            "series.sigma_min_rel must lie in (0, 1)");
    require(s.row_ratio > 1.0, ErrorKind::config, "series.row_ratio must exceed 1");
    require(s.xi_step > 0.0 && s.extent > 0.0, ErrorKind::config, "series.xi_step and series.extent must be positive");
    require(s.n_max >= 2, ErrorKind::config, "series.n_max must be at least 2");
    require(s.tol > 0.0, ErrorKind::config, "series.tol must be positive");
    require(s.time_nodes >= 2, ErrorKind::config, "series.time_nodes must be at least 2");
    require(s.beta_eff >= 0.0 && s.beta_eff <= 0.25, ErrorKind::config, "series.beta_eff must lie in [0, 1/4]");
    require(s.lattice_step > 0.0 && s.lattice_extent >= 2.0 * s.lattice_step, ErrorKind::config,
            "series lattice needs lattice_extent >= 2 lattice_step");
    require(s.lattice_far_step > 0.0, ErrorKind::config, "series.lattice_far_step must be positive");
}

json Ledger::to_json() const {
    return json{{"beta", beta},
                {"nu", nu},
                {"fit", fit},
                {"C", C},
                {"log_A", log_A},
                {"fit_residual", fit_residual},
                {"truncation_bound", truncation_bound},
                {"ie_residual", ie_residual},
                {"N", N}};
}

Model::Model(fields::Coefficients c, SeriesSpec s, quad::QuadratureSpec q)
    : co(std::move(c)), series(s), quad(q),
      grid(s.horizon, s.sigma_min_rel, s.row_ratio, s.xi_step, s.extent) {
    require(co.dim == 1, ErrorKind::config, "the parametrix series is implemented for d = 1");
    beta_eff = s.beta_eff > 0.0 ? std::min(s.beta_eff, 0.25) : std::min(co.beta(), 0.25);
    e_scale = std::min(co.beta(), 1.0) - 2.0;
}

namespace {

template <class F>
void parallel_for(int n, int threads, F&& f) {
    const int nt = std::max(1, std::min(threads, n));
    if (nt == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += nt) f(i);
        });
    for (auto& t : pool) t.join();
}

// Weight ϱ⁰_{(n+1)β} + ϱ^β_{nβ} at (σ, u) in d = 1.
double ledger_weight(int n, double beta, double sigma, double u) {
    const double cap = std::min(std::pow(std::abs(u), beta), 1.0);
    return (std::pow(sigma, (n + 1) * beta) + std::pow(sigma, n * beta) * cap) / (u * u + sigma * sigma);
}

} // namespace

AnchorSeries::AnchorSeries(std::shared_ptr<const Model> model, double s, double y)
    : model_(std::move(model)), s_(s), y_(y) {
    build();
}

AnchorSeries::Coef AnchorSeries::at(double t, double x) const {
    const auto& co = model_->co;
    const std::span<const double> xs(&x, 1);
    return {co.a(t, xs), co.b[0](t, xs)};
}

double AnchorSeries::q0_direct(double tau, double x) const {
    const double t = s_ + tau;
    const auto& co = model_->co;
    if (co.time_homogeneous()) {
        const Coef cx = at(t, x), cy = at(t, y_);
        return frozen::q0_1(cx.a, cx.b, cy.a, cy.b, tau, x - y_);
    }
    return frozen::q0(co, t, std::span<const double>(&x, 1), s_, std::span<const double>(&y_, 1), model_->quad);
}

// First factor of the convolutions, frozen at z: 0 = q₀, 1 = p₀, 2 = ∂_x p₀, 3 = Δ^{1/2}_x p₀.
double AnchorSeries::first_factor(int kind, double t, double r, double x, double z, const Coef& cx) const {
    const auto& co = model_->co;
    double F, G, az, bz;
    if (co.time_homogeneous()) {
        const Coef cz = at(t, z);
        az = cz.a;
        bz = cz.b;
        F = az * (t - r);
        G = bz * (t - r);
    } else {
        const auto fa = frozen::frozen_args(co, r, t, std::span<const double>(&z, 1), model_->quad);
        F = fa.F;
        G = fa.G[0];
        const Coef cz = at(t, z);
        az = cz.a;
        bz = cz.b;
    }
    const double w = x - z + G;
    switch (kind) {
    case 0: {
        double v = 0.0;
        if (cx.a != az) v += (cx.a - az) * poisson::rho1_dt(F, w);
        if (cx.b != bz) v += (cx.b - bz) * poisson::rho1_dx(F, w);
        return v;
    }
    case 1: return poisson::rho1(F, w);
    case 2: return poisson::rho1_dx(F, w);
    default: return poisson::rho1_dt(F, w);
    }
}

// Quadrature over σ ∈ (lo, hi) ⊂ (0, τ) and z ∈ R for targets (τ, x). For each time node calls
// node(σ, w_σ, z_nodes, w_z · K(τ,x; σ,z)).
template <class Sink>
void AnchorSeries::sweep(double tau, double x, double lo, double hi, double left, double right, int kind,
                         Sink&& node) const {
    const auto& co = model_->co;
    const auto& sp = model_->series;
    std::vector<double> ts, tw, zs, zw;
    quad::split_time_rule(lo, hi, lo == 0.0 ? left : 0.0, hi == tau ? right : 0.0, sp.time_nodes, ts, tw);
    const double t = s_ + tau;
    const Coef cx = at(t, x), cy = at(s_, y_);
    quad::LineHints hints;
    for (double b : co.a.breakpoints()) hints.breakpoints.push_back(b);
    for (double b : co.b[0].breakpoints()) hints.breakpoints.push_back(b);
    std::vector<double> kw;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double sigma = ts[i], delta = tau - sigma;
        hints.centers = {{x + cx.b * delta, cx.a * delta}, {y_ - cy.b * sigma, cy.a * sigma}};
        quad::line_rule(hints, model_->quad.spatial, 0, zs, zw);
        kw.resize(zs.size());
        for (size_t k = 0; k < zs.size(); ++k) kw[k] = zw[k] * first_factor(kind, t, s_ + sigma, x, zs[k], cx);
        node(sigma, tw[i], zs, kw);
    }
}

void AnchorSeries::build() {
    const Model& m = *model_;
    const Grid& g = m.grid;
    const int n = g.size();
    std::vector<double> q0(n, 0.0);
    bool zero = true;
    if (!m.co.constant_ab()) {
        for (int k = 0; k < g.rows(); ++k)
            for (int j = -g.half(k); j <= g.half(k); ++j) {
                const double v = q0_direct(g.sigma(k), y_ + g.u(k, j));
                q0[g.index(k, j)] = v;
                zero = zero && v == 0.0;
            }
    }
    if (zero) {
        trivial_ = true;
        q_.push_back(q0);
        sum_ = q0;
        ledger_.beta = m.beta_eff;
        return;
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat M = RowMat::Zero(n, n);
    exact_q0_ = m.co.time_homogeneous();
    std::vector<double> q1(n, 0.0); // q₀∗q₀ with q₀ exact at the nodes
    const double bm1 = m.beta_eff - 1.0;
    parallel_for(n, m.series.threads, [&](int i) {
        const int k = g.row_of(i);
        const int j = i - g.index(k, 0);
        const double tau = g.sigma(k), x = y_ + g.u(k, j);
        int idx[16];
        double w[16];
        double acc = 0.0;
        sweep(tau, x, 0.0, tau, bm1, bm1, 0,
              [&](double sigma, double ws, const std::vector<double>& zs, const std::vector<double>& kw) {
                  Grid::RowWindow rw;
                  g.rows_at(sigma, m.e_scale, rw);
                  double inner = 0.0;
                  for (size_t z = 0; z < zs.size(); ++z) {
                      if (kw[z] == 0.0) continue;
                      const int c = g.stencil(rw, zs[z] - y_, idx, w);
                      const double f = ws * kw[z];
                      for (int r = 0; r < c; ++r) M(i, idx[r]) += f * w[r];
                      if (exact_q0_) inner += kw[z] * q0_direct(sigma, zs[z]);
                  }
                  acc += ws * inner;
              });
        q1[i] = acc;
    });
    const Eigen::Map<const Eigen::VectorXd> q0v(q0.data(), n);
    if (!exact_q0_) {
        const Eigen::VectorXd v = M * q0v;
        q1.assign(v.data(), v.data() + n);
    }
    q_.push_back(q0);
    q_.push_back(q1);
    for (int k = 2;; ++k) {
        Eigen::VectorXd next = M * Eigen::Map<const Eigen::VectorXd>(q_.back().data(), n);
        q_.emplace_back(next.data(), next.data() + n);
        fit_ledger(k + 1);
        if (ledger_.truncation_bound < m.series.tol) {
            ledger_.N = k;
            break;
        }
        if (k >= m.series.n_max) {
            fail(ErrorKind::non_convergence,
                 "parametrix series: truncation bound " + std::to_string(ledger_.truncation_bound) + " after " +
                     std::to_string(k) + " terms exceeds tol " + std::to_string(m.series.tol) + " (anchor y=" +
                     std::to_string(y_) + ")");
        }
    }
    sum_.assign(n, 0.0);
    for (int k = 0; k <= ledger_.N; ++k)
        for (int i = 0; i < n; ++i) sum_[i] += q_[k][i];
    rest_.resize(n);
    for (int i = 0; i < n; ++i) rest_[i] = sum_[i] - q0[i];
    // q - q₀ - q₀∗q, computed with the same operator
    const Eigen::Map<const Eigen::VectorXd> qs(sum_.data(), n), rs(rest_.data(), n);
    const Eigen::VectorXd r = rs - Eigen::Map<const Eigen::VectorXd>(q1.data(), n) - M * rs;
    double worst = 0.0;
    for (int k = 0; k < g.rows(); ++k) {
        const double sg = g.sigma(k);
        if (sg < m.series.ledger_sigma_rel * g.horizon() || sg > m.series.tol_horizon * (1.0 + 1e-12)) continue;
        for (int j = -g.half(k); j <= g.half(k); ++j) {
            const double u = g.u(k, j);
            if (std::abs(u) > m.series.ledger_u_max) continue;
            worst = std::max(worst, std::abs(r(g.index(k, j))) * (u * u + sg * sg));
        }
    }
    ledger_.ie_residual = worst;
}

void AnchorSeries::fit_ledger(int n_terms) {
    const Model& m = *model_;
    const Grid& g = m.grid;
    const double beta = m.beta_eff;
    Ledger L;
    L.beta = beta;
    for (int n = 0; n < n_terms; ++n) {
        double nu = 0.0;
        for (int k = 0; k < g.rows(); ++k) {
            const double sg = g.sigma(k);
            if (sg < m.series.ledger_sigma_rel * g.horizon()) continue;
            for (int j = -g.half(k); j <= g.half(k); ++j) {
                const double u = g.u(k, j);
                if (std::abs(u) > m.series.ledger_u_max) continue;
                nu = std::max(nu, std::abs(q_[n][g.index(k, j)]) / ledger_weight(n, beta, sg, u));
            }
        }
        L.nu.push_back(nu);
    }
    // least squares for log ν_n + log Γ((n+1)β) = log A + n log K
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (int n = 0; n < n_terms; ++n) {
        if (L.nu[n] <= 0.0) continue;
        const double yv = std::log(L.nu[n]) + std::lgamma((n + 1) * beta);
        sx += n;
        sy += yv;
        sxx += double(n) * n;
        sxy += n * yv;
        cnt += 1;
    }
    double logK = 0.0;
    if (cnt >= 2) {
        logK = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        L.log_A = (sy - logK * sx) / cnt;
    } else if (cnt == 1) {
        L.log_A = sy;
    }
    L.C = std::exp(logK - std::lgamma(beta));
    for (int n = 0; n < n_terms; ++n) {
        const double f = std::exp(L.log_A + n * logK - std::lgamma((n + 1) * beta));
        L.fit.push_back(f);
        if (L.nu[n] > 0.0) L.fit_residual = std::max(L.fit_residual, std::abs(L.nu[n] / f - 1.0));
    }
    const double tau = std::min(m.series.tol_horizon, g.horizon());
    double tail = 0.0;
    for (int n = n_terms; n < n_terms + 2000; ++n) {
        const double lf = L.log_A + n * logK - std::lgamma((n + 1) * beta);
        const double term = std::exp(lf) * (std::pow(tau, (n + 1) * beta) + std::pow(tau, n * beta));
        tail += term;
        if (n > n_terms + 10 && term < 1e-18 * std::max(tail, 1e-300)) break;
    }
    L.truncation_bound = tail;
    L.N = n_terms - 1;
    ledger_ = L;
}

double AnchorSeries::q(double tau, double x) const {
    if (exact_q0_ && !trivial_) return q0_direct(tau, x) + model_->grid.interpolate(rest_, tau, x - y_, model_->e_scale);
    return model_->grid.interpolate(sum_, tau, x - y_, model_->e_scale);
}

double AnchorSeries::q_term(int n, double tau, double x) const {
    require(n >= 0 && n < terms(), ErrorKind::domain, "q_term: term index out of range");
    if (n == 0 && exact_q0_) return q0_direct(tau, x);
    return model_->grid.interpolate(q_[n], tau, x - y_, model_->e_scale);
}

std::vector<double> AnchorSeries::apply(const std::vector<double>& f) const {
    const Model& m = *model_;
    const Grid& g = m.grid;
    require(static_cast<int>(f.size()) == g.size(), ErrorKind::domain, "apply: grid size mismatch");
    std::vector<double> out(g.size(), 0.0);
    const double bm1 = m.beta_eff - 1.0;
    parallel_for(g.size(), m.series.threads, [&](int i) {
        const int k = g.row_of(i);
        const double tau = g.sigma(k), x = y_ + g.u(k, i - g.index(k, 0));
        double acc = 0.0;
        sweep(tau, x, 0.0, tau, bm1, bm1, 0,
              [&](double sigma, double ws, const std::vector<double>& zs, const std::vector<double>& kw) {
                  Grid::RowWindow rw;
                  g.rows_at(sigma, m.e_scale, rw);
                  int idx[16];
                  double w[16];
                  double inner = 0.0;
                  for (size_t z = 0; z < zs.size(); ++z) {
                      if (kw[z] == 0.0) continue;
                      const int c = g.stencil(rw, zs[z] - y_, idx, w);
                      double v = 0.0;
                      for (int r = 0; r < c; ++r) v += w[r] * f[idx[r]];
                      inner += kw[z] * v;
                  }
                  acc += ws * inner;
              });
        out[i] = acc;
    });
    return out;
}

double AnchorSeries::p0(double tau, double x) const {
    require(tau > 0.0, ErrorKind::domain, "kernel: need t > s");
    const auto& co = model_->co;
    if (co.time_homogeneous()) {
        const Coef cy = at(s_, y_);
        return frozen::p0_1(cy.a, cy.b, tau, x - y_);
    }
    return frozen::p0(co, s_ + tau, std::span<const double>(&x, 1), s_, std::span<const double>(&y_, 1), model_->quad);
}

double AnchorSeries::phi_part(double tau, double x, int kind) const {
    require(tau > 0.0 && tau <= model_->grid.horizon() * (1.0 + 1e-12), ErrorKind::domain,
            "kernel: t - s must lie in (0, horizon]");
    if (trivial_) return 0.0;
    const Model& m = *model_;
    const Grid& g = m.grid;
    const double bm1 = m.beta_eff - 1.0;
    Grid::RowWindow rw;
    double sig = 0.0;
    const auto& table = exact_q0_ ? rest_ : sum_;
    auto qg = [&](double z) {
        int idx[16];
        double w[16];
        const int c = g.stencil(rw, z - y_, idx, w);
        double v = exact_q0_ ? q0_direct(sig, z) : 0.0;
        for (int r = 0; r < c; ++r) v += w[r] * table[idx[r]];
        return v;
    };
    double acc = 0.0;
    auto plain = [&](double sigma, double ws, const std::vector<double>& zs, const std::vector<double>& kw) {
        g.rows_at(sigma, m.e_scale, rw);
        sig = sigma;
        double inner = 0.0;
        for (size_t z = 0; z < zs.size(); ++z)
            if (kw[z] != 0.0) inner += kw[z] * qg(zs[z]);
        acc += ws * inner;
    };
    if (kind == 1) {
        sweep(tau, x, 0.0, tau, bm1, 0.0, 1, plain);
        return acc;
    }
    // far-time half: the derivative of p₀ is smooth there
    sweep(tau, x, 0.0, 0.5 * tau, bm1, 0.0, kind, plain);
    // near half: Hölder-compensated difference plus q(σ,x) times the cancellation integral
    const auto which = kind == 2 ? frozen::Cancellation::grad : frozen::Cancellation::fraclap;
    sweep(tau, x, 0.5 * tau, tau, 0.0, bm1, kind,
          [&](double sigma, double ws, const std::vector<double>& zs, const std::vector<double>& kw) {
              g.rows_at(sigma, m.e_scale, rw);
              sig = sigma;
              const double qx = qg(x);
              double inner = 0.0;
              for (size_t z = 0; z < zs.size(); ++z)
                  if (kw[z] != 0.0) inner += kw[z] * (qg(zs[z]) - qx);
              const auto c = frozen::cancellation_integral(m.co, s_ + tau, std::span<const double>(&x, 1),
                                                           s_ + sigma, which, m.quad);
              acc += ws * (inner + qx * c.value[0]);
          });
    return acc;
}

double AnchorSeries::phi(double tau, double x) const { return phi_part(tau, x, 1); }

double AnchorSeries::phi_slice(double tau, double x, double sigma) const {
    require(sigma > 0.0 && sigma < tau, ErrorKind::domain, "phi_slice: need 0 < sigma < tau");
    if (trivial_) return 0.0;
    const Model& m = *model_;
    const Grid& g = m.grid;
    const double t = s_ + tau, delta = tau - sigma;
    const Coef cx = at(t, x), cy = at(s_, y_);
    quad::LineHints hints;
    hints.centers = {{x + cx.b * delta, cx.a * delta}, {y_ - cy.b * sigma, cy.a * sigma}};
    for (double b : m.co.a.breakpoints()) hints.breakpoints.push_back(b);
    for (double b : m.co.b[0].breakpoints()) hints.breakpoints.push_back(b);
    std::vector<double> zs, zw;
    quad::line_rule(hints, m.quad.spatial, 1, zs, zw);
    Grid::RowWindow rw;
    g.rows_at(sigma, m.e_scale, rw);
    int idx[16];
    double w[16];
    double acc = 0.0;
    const auto& table = exact_q0_ ? rest_ : sum_;
    for (size_t k = 0; k < zs.size(); ++k) {
        const int c = g.stencil(rw, zs[k] - y_, idx, w);
        double v = exact_q0_ ? q0_direct(sigma, zs[k]) : 0.0;
        for (int r = 0; r < c; ++r) v += w[r] * table[idx[r]];
        acc += zw[k] * first_factor(1, t, s_ + sigma, x, zs[k], cx) * v;
    }
    return acc;
}
double AnchorSeries::phi_grad(double tau, double x) const { return phi_part(tau, x, 2); }
double AnchorSeries::phi_fraclap(double tau, double x) const { return phi_part(tau, x, 3); }

double AnchorSeries::grad_x(double tau, double x) const {
    const auto& co = model_->co;
    double F, G;
    if (co.time_homogeneous()) {
        const Coef cy = at(s_, y_);
        F = cy.a * tau;
        G = cy.b * tau;
    } else {
        const auto fa = frozen::frozen_args(co, s_, s_ + tau, std::span<const double>(&y_, 1), model_->quad);
        F = fa.F;
        G = fa.G[0];
    }
    return poisson::rho1_dx(F, x - y_ + G) + phi_grad(tau, x);
}

double AnchorSeries::fraclap_x(double tau, double x) const {
    const auto& co = model_->co;
    double F, G;
    if (co.time_homogeneous()) {
        const Coef cy = at(s_, y_);
        F = cy.a * tau;
        G = cy.b * tau;
    } else {
        const auto fa = frozen::frozen_args(co, s_, s_ + tau, std::span<const double>(&y_, 1), model_->quad);
        F = fa.F;
        G = fa.G[0];
    }
    return poisson::rho1_dt(F, x - y_ + G) + phi_fraclap(tau, x);
}

const std::vector<double>& AnchorSeries::phi_table() const {
    std::call_once(phi_once_, [&] {
        const Grid& g = model_->grid;
        phi_table_.assign(g.size(), 0.0);
        if (trivial_) return;
        parallel_for(g.size(), model_->series.threads, [&](int i) {
            const int k = g.row_of(i);
            phi_table_[i] = phi(g.sigma(k), y_ + g.u(k, i - g.index(k, 0)));
        });
    });
    return phi_table_;
}

Kernel::Kernel(const fields::Coefficients& co, const SeriesSpec& series, const quad::QuadratureSpec& quad)
    : model_(std::make_shared<const Model>(co, series, quad)) {
    const double h = series.lattice_step;
    const int jmax = static_cast<int>(std::floor(series.lattice_extent / h + 1e-9));
    std::vector<double> right;
    for (int j = 1; j <= jmax; ++j) right.push_back(j * h);
    for (double y = jmax * h + series.lattice_far_step; y <= series.lattice_far_extent + 1e-9;
         y += series.lattice_far_step)
        right.push_back(y);
    for (auto it = right.rbegin(); it != right.rend(); ++it) lattice_.push_back(-*it);
    lattice_.push_back(0.0);
    lattice_.insert(lattice_.end(), right.begin(), right.end());
}

double Kernel::canonical_s(double s) const { return model_->co.time_homogeneous() ? 0.0 : s; }

std::shared_ptr<const AnchorSeries> Kernel::anchor(double s, double y) const {
    const auto key = std::make_pair(canonical_s(s), y);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto a = std::make_shared<const AnchorSeries>(model_, key.first, y);
    cache_.emplace(key, a);
    return a;
}

size_t Kernel::anchors_built() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
}

double Kernel::p0(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    const auto& co = model_->co;
    if (co.time_homogeneous()) {
        const double a = co.a(0.0, std::span<const double>(&y, 1)), b = co.b[0](0.0, std::span<const double>(&y, 1));
        return frozen::p0_1(a, b, t - s, x - y);
    }
    return frozen::p0(co, t, std::span<const double>(&x, 1), s, std::span<const double>(&y, 1), model_->quad);
}

double Kernel::phi(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    if (translation_invariant()) return 0.0;
    return anchor(s, y)->phi(t - s, x);
}

double Kernel::p(double t, double x, double s, double y) const { return p0(t, x, s, y) + phi(t, x, s, y); }

double Kernel::grad_x(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    if (translation_invariant()) {
        const auto fa = frozen::frozen_args(model_->co, s, t, std::span<const double>(&y, 1), model_->quad);
        return poisson::rho1_dx(fa.F, x - y + fa.G[0]);
    }
    return anchor(s, y)->grad_x(t - s, x);
}

double Kernel::fraclap_x(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    if (translation_invariant()) {
        const auto fa = frozen::frozen_args(model_->co, s, t, std::span<const double>(&y, 1), model_->quad);
        return poisson::rho1_dt(fa.F, x - y + fa.G[0]);
    }
    return anchor(s, y)->fraclap_x(t - s, x);
}

// Near the diagonal φ is interpolated across anchors at fixed u = x - y, where its shape in u is
// resolved by each anchor. Away from it φ(t,x;s,·) is smooth in the pole and the anchors are read at the
// true x, with the (y - x)^-2 decay divided out before interpolating.
template <class F>
double Kernel::lattice_combine(double t, double x, double s, double y, F&& f) const {
    const auto& L = lattice_;
    const int n = static_cast<int>(L.size());
    const double tau = t - s;
    auto decay = [&](double ya) { return (ya - x) * (ya - x) + tau * tau; };
    if (y < L.front() || y > L.back()) {
        const double ye = y < L.front() ? L.front() : L.back();
        return decay(ye) / decay(y) * f(*anchor(s, ye), x - ye);
    }
    const int i = static_cast<int>(std::upper_bound(L.begin(), L.end(), y) - L.begin()) - 1;
    const int js = std::clamp(i - 1, 0, n - 4);
    const double h = L[std::min(i + 1, n - 1)] - L[std::max(i, 0)];
    const double r = std::clamp((std::abs(y - x) - 1.5 * h) / (1.5 * h), 0.0, 1.0);
    const double lam = r * r * (3.0 - 2.0 * r);
    double vu = 0.0, vx = 0.0;
    for (int k = 0; k < 4; ++k) {
        double w = 1.0;
        for (int q = 0; q < 4; ++q)
            if (q != k) w *= (y - L[js + q]) / (L[js + k] - L[js + q]);
        if (w == 0.0) continue;
        const double ya = L[js + k];
        const auto& a = *anchor(s, ya);
        if (lam < 1.0) vu += w * f(a, x - y);
        if (lam > 0.0) vx += w * f(a, x - ya) * decay(ya);
    }
    return (1.0 - lam) * vu + lam * vx / decay(y);
}

double Kernel::p_lattice(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    double v = p0(t, x, s, y);
    if (translation_invariant()) return v;
    v += lattice_combine(t, x, s, y, [&](const AnchorSeries& a, double uu) { return a.phi(t - s, a.y() + uu); });
    return v;
}

double Kernel::phi_tabulated(double t, double x, double s, double y) const {
    require(t > s, ErrorKind::domain, "kernel: need t > s");
    if (translation_invariant()) return 0.0;
    const double e = std::min(model_->co.beta(), 1.0) - 1.0;
    return lattice_combine(t, x, s, y, [&](const AnchorSeries& a, double uu) {
        return model_->grid.interpolate(a.phi_table(), t - s, uu, e);
    });
}

} // namespace fhk::levi
