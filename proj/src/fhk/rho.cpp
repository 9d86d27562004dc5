#include "fhk/rho.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "fhk/error.hpp"

namespace fhk::rho {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

std::vector<double> diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> d(a.size());
    for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

void check_lemma_range(const Exponents& e) {
    require(e.beta >= 0.0 && e.beta <= 0.25, ErrorKind::domain,
            "convolution bounds require beta in [0, 1/4]");
    require(e.dim >= 1, ErrorKind::domain, "dim must be positive");
}

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

} // namespace

double rho(const Exponents& e, double dt, std::span<const double> dx) {
    require(dt > 0.0, ErrorKind::domain, "rho: time gap must be positive");
    require(e.beta >= 0.0 && e.beta <= 1.0, ErrorKind::domain, "rho: beta must lie in [0, 1]");
    require(static_cast<int>(dx.size()) == e.dim, ErrorKind::domain, "rho: dimension mismatch");
    const double x2 = norm2(dx);
    const double cap = e.beta == 0.0 ? 1.0 : std::min(std::pow(x2, 0.5 * e.beta), 1.0);
    return std::pow(dt, e.gamma) * cap * std::pow(x2 + dt * dt, -0.5 * (e.dim + 1));
}

quad::QuadResult rho_space_integral(const Exponents& e, double t, const quad::QuadratureSpec& spec) {
    require(t > 0.0, ErrorKind::domain, "rho_space_integral: t must be positive");
    require(e.beta >= 0.0 && e.beta <= 0.5, ErrorKind::domain, "rho_space_integral: beta must lie in [0, 1/2]");
    const int d = e.dim;
    const double m = 0.5 * (d + 1);
    auto smooth = [&](double r) { return std::pow(t, e.gamma) * std::pow(r * r + t * t, -m); };
    auto full = [&](double r) {
        const double cap = e.beta == 0.0 ? 1.0 : std::min(std::pow(r, e.beta), 1.0);
        return std::pow(r, d - 1) * cap * smooth(r);
    };
    const double a = std::min(1.0, t);
    const double far = std::max(spec.spatial.far, 8.0 * std::max(1.0, t));
    quad::QuadResult res;
    double prev = 0.0;
    for (int level = 0; level <= spec.max_refinements; ++level) {
        // [0, a]: the power r^{beta+d-1} is carried by the Jacobi weight
        const int nj = spec.time.nodes << level;
        const quad::Rule& J = quad::gauss_jacobi(nj, 0.0, e.beta + d - 1.0);
        const double h = 0.5 * a;
        double acc = 0.0;
        for (size_t i = 0; i < J.x.size(); ++i) acc += J.w[i] * smooth(h * (1.0 + J.x[i]));
        acc *= std::pow(h, e.beta + d);
        quad::LineHints hints;
        hints.centers.push_back({a, a});
        hints.breakpoints = {1.0};
        std::vector<double> z, w;
        quad::interval_rule(a, far, hints, spec.spatial, level, z, w);
        for (size_t i = 0; i < z.size(); ++i) acc += w[i] * full(z[i]);
        const quad::Rule& g = quad::gauss_legendre(spec.spatial.tail_order << level);
        const double q = 0.25 * std::numbers::pi;
        for (size_t i = 0; i < g.x.size(); ++i) {
            const double th = q + q * g.x[i];
            const double c = std::cos(th);
            acc += q * g.w[i] * far / (c * c) * full(far + far * std::tan(th));
        }
        acc *= d == 1 ? 2.0 : sphere_area(d);
        res.value = acc;
        res.refinements_used = level;
        if (level > 0) {
            res.err_estimate = std::abs(acc - prev);
            if (res.err_estimate <= spec.target_rel_tol * std::abs(acc) + spec.abs_floor) {
                res.converged = true;
                break;
            }
        }
        prev = acc;
    }
    if (!res.converged) {
        fail(ErrorKind::non_convergence,
             "rho_space_integral did not converge; error estimate " + std::to_string(res.err_estimate));
    }
    return res;
}

CheckReport three_p_check(const SpaceTimePoint& p1, const SpaceTimePoint& p2, const SpaceTimePoint& p3) {
    const double t = p1.t, r = p2.t, s = p3.t;
    require(s < r && r < t, ErrorKind::domain, "three_p_check: need s < r < t");
    const int d = static_cast<int>(p1.x.size());
    require(d >= 1 && p2.x.size() == p1.x.size() && p3.x.size() == p1.x.size(), ErrorKind::domain,
            "three_p_check: dimension mismatch");
    const double m = 0.5 * (d + 1);
    const double RA = norm2(diff(p1.x, p2.x)) + (t - r) * (t - r);
    const double RB = norm2(diff(p2.x, p3.x)) + (r - s) * (r - s);
    const double RC = norm2(diff(p1.x, p3.x)) + (t - s) * (t - s);
    // ϱ⁰₀ϱ⁰₀ <= 2^d (ϱ⁰₀ + ϱ⁰₀) ϱ⁰₀  <=>  RC^m <= 2^d (RA^m + RB^m)
    const double a = std::pow(RA, m), b = std::pow(RB, m), c = std::pow(RC, m);
    const double kd = std::ldexp(1.0, d);
    CheckReport rep;
    rep.check_name = "three_p";
    rep.property = "three-point-inequality";
    rep.params = {{"t", t}, {"r", r}, {"s", s}, {"dim", d}};
    rep.lhs = 1.0 / (a * b);
    rep.rhs = kd * (1.0 / a + 1.0 / b) / c;
    rep.fitted_constant = c / (a + b);
    rep.status = c <= kd * (a + b) * (1.0 + 1e-12) ? Status::pass : Status::fail;
    rep.notes = "margin " + std::to_string(kd - rep.fitted_constant);
    return rep;
}

CheckReport three_p_fuzz(int dim, std::int64_t n, std::uint64_t seed, int threads) {
    require(dim >= 1 && n > 0, ErrorKind::domain, "three_p_fuzz: need dim >= 1 and n > 0");
    const std::int64_t block = 4096;
    const std::int64_t nblocks = (n + block - 1) / block;
    const double kd = std::ldexp(1.0, dim);
    const double m = 0.5 * (dim + 1);
    struct Acc {
        std::int64_t violations = 0;
        double worst = 0.0;
    };
    std::vector<Acc> acc(nblocks);
    auto run_block = [&](std::int64_t b) {
        std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(b), 0x3e9u};
        std::mt19937_64 rng(ss);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto coord = [&]() {
            // half the draws on the unit box, half spread over six decades
            if (U(rng) < 0.5) return 2.0 * U(rng) - 1.0;
            const double mag = std::pow(10.0, -3.0 + 5.0 * U(rng));
            return U(rng) < 0.5 ? -mag : mag;
        };
        const std::int64_t lo = b * block, hi = std::min(n, lo + block);
        std::vector<double> x(dim), y(dim), z(dim);
        for (std::int64_t i = lo; i < hi; ++i) {
            const double s = U(rng);
            const double g1 = std::pow(10.0, -4.0 + 4.0 * U(rng));
            const double g2 = std::pow(10.0, -4.0 + 4.0 * U(rng));
            const double r = s + g1, t = r + g2;
            for (int k = 0; k < dim; ++k) {
                x[k] = coord();
                y[k] = coord();
                z[k] = U(rng) < 0.25 ? 0.5 * (x[k] + y[k]) : coord();
            }
            double RA = (t - r) * (t - r), RB = (r - s) * (r - s), RC = (t - s) * (t - s);
            for (int k = 0; k < dim; ++k) {
                RA += (x[k] - z[k]) * (x[k] - z[k]);
                RB += (z[k] - y[k]) * (z[k] - y[k]);
                RC += (x[k] - y[k]) * (x[k] - y[k]);
            }
            const double a = std::pow(RA, m), bb = std::pow(RB, m), c = std::pow(RC, m);
            const double ratio = c / (a + bb);
            acc[b].worst = std::max(acc[b].worst, ratio);
            if (!(c <= kd * (a + bb) * (1.0 + 1e-12))) ++acc[b].violations;
        }
    };
    const int nt = std::max(1, threads);
    if (nt == 1) {
        for (std::int64_t b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nt; ++w)
            pool.emplace_back([&, w] {
                for (std::int64_t b = w; b < nblocks; b += nt) run_block(b);
            });
        for (auto& th : pool) th.join();
    }
    std::int64_t viol = 0;
    double worst = 0.0;
    for (const auto& a : acc) {
        viol += a.violations;
        worst = std::max(worst, a.worst);
    }
    CheckReport rep;
    rep.check_name = "three_p_fuzz";
    rep.property = "three-point-inequality";
    rep.params = {{"dim", dim}, {"n", n}, {"seed", seed}};
    rep.lhs = static_cast<double>(viol);
    rep.rhs = 0.0;
    rep.fitted_constant = worst;
    rep.status = viol == 0 ? Status::pass : Status::fail;
    rep.notes = "lhs counts violations; fitted_constant is the largest observed ratio (bound 2^d = " +
                std::to_string(kd) + ")";
    return rep;
}

double beta_function(double g, double b) {
    require(g > 0.0 && b > 0.0, ErrorKind::domain, "beta_function: arguments must be positive");
    return std::exp(std::lgamma(g) + std::lgamma(b) - std::lgamma(g + b));
}

CheckReport beta_time_identity_check(double g, double b, double s, double t, const quad::QuadratureSpec& spec) {
    require(s < t, ErrorKind::domain, "beta_time_identity_check: need s < t");
    require(g > 0.0 && b > 0.0, ErrorKind::domain, "beta_time_identity_check: exponents must be positive");
    // Each half carries only its own endpoint weight; the other factor is integrated as a smooth function.
    const double m = 0.5 * (s + t);
    auto left = [&](double r) { return std::pow(t - r, g - 1.0); };
    auto right = [&](double r) { return std::pow(r - s, b - 1.0); };
    const auto L = quad::integrate_time_singular(left, s, m, b - 1.0, 0.0, spec);
    const auto R = quad::integrate_time_singular(right, m, t, 0.0, g - 1.0, spec);
    CheckReport rep;
    rep.check_name = "beta_time_identity";
    rep.property = "beta-time-identity";
    rep.params = {{"gamma", g}, {"beta", b}, {"s", s}, {"t", t}};
    rep.lhs = L.value + R.value;
    rep.rhs = std::pow(t - s, g + b - 1.0) * beta_function(g, b);
    rep.fitted_constant = rep.lhs / rep.rhs;
    rep.quadrature_error = L.err_estimate + R.err_estimate;
    const double tol = 1e-6 * std::max(1.0, std::abs(rep.rhs));
    rep.status = std::abs(rep.lhs - rep.rhs) <= tol && L.converged && R.converged ? Status::pass : Status::fail;
    return rep;
}

namespace {

double rho_v(double beta, double gamma, double dt, std::span<const double> dx) {
    Exponents e{beta, gamma, static_cast<int>(dx.size())};
    return rho(e, dt, dx);
}

double inner_integral(const Exponents& e1, const Exponents& e2, const Chain& c, double r,
                      const quad::QuadratureSpec& spec, double* err, bool* ok) {
    const int d = e1.dim;
    std::vector<double> xz(d), zy(d);
    auto f = [&](std::span<const double> z) {
        for (int k = 0; k < d; ++k) {
            xz[k] = c.x[k] - z[k];
            zy[k] = z[k] - c.y[k];
        }
        return rho(e1, c.t - r, xz) * rho(e2, r - c.s, zy);
    };
    quad::QuadResult q;
    if (d == 1) {
        quad::LineHints h;
        h.centers = {{c.x[0], c.t - r}, {c.y[0], r - c.s}};
        h.breakpoints = {c.x[0] - 1.0, c.x[0] + 1.0, c.y[0] - 1.0, c.y[0] + 1.0};
        q = quad::integrate_line([&](double z) { return f(std::span<const double>(&z, 1)); }, h, spec);
    } else {
        q = quad::integrate_space(f, d, {{c.x, c.t - r}, {c.y, r - c.s}}, spec);
    }
    if (err) *err += q.err_estimate;
    if (ok) *ok = *ok && q.converged;
    return q.value;
}

void check_chain(const Exponents& e1, const Exponents& e2, const Chain& c) {
    check_lemma_range(e1);
    check_lemma_range(e2);
    require(e1.dim == e2.dim, ErrorKind::domain, "convolution: exponent dimensions differ");
    require(static_cast<int>(c.x.size()) == e1.dim && c.y.size() == c.x.size(), ErrorKind::domain,
            "convolution: chain dimension mismatch");
    require(c.s < c.r && c.r < c.t, ErrorKind::domain, "convolution: need s < r < t");
}

} // namespace

CheckReport conv_space_bound(const Exponents& e1, const Exponents& e2, const Chain& c,
                             const quad::QuadratureSpec& spec) {
    check_chain(e1, e2, c);
    double err = 0.0;
    bool ok = true;
    const double lhs = inner_integral(e1, e2, c, c.r, spec, &err, &ok);
    const double a = c.t - c.r, b = c.r - c.s, T = c.t - c.s;
    const auto D = diff(c.x, c.y);
    const double b1 = e1.beta, b2 = e2.beta, g1 = e1.gamma, g2 = e2.gamma;
    const double r00 = rho_v(0.0, 0.0, T, D);
    const double rhs = std::pow(a, g1 + b1 + b2 - 1.0) * std::pow(b, g2) * r00 +
                       std::pow(a, g1 + b1 - 1.0) * std::pow(b, g2) * rho_v(b2, 0.0, T, D) +
                       std::pow(a, g1) * std::pow(b, g2 + b1 + b2 - 1.0) * r00 +
                       std::pow(a, g1) * std::pow(b, g2 + b2 - 1.0) * rho_v(b1, 0.0, T, D);
    CheckReport rep;
    rep.check_name = "conv_space_bound";
    rep.property = "convolution-space-bound";
    rep.params = {{"beta1", b1}, {"gamma1", g1}, {"beta2", b2}, {"gamma2", g2}, {"dim", e1.dim},
                  {"t", c.t},    {"r", c.r},      {"s", c.s},      {"x", c.x},      {"y", c.y}};
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.fitted_constant = lhs / rhs;
    rep.quadrature_error = err;
    rep.status = ok && std::isfinite(rep.fitted_constant) ? Status::pass : Status::fail;
    return rep;
}

CheckReport conv_spacetime_bound(const Exponents& e1, const Exponents& e2, const Chain& c,
                                 const quad::QuadratureSpec& spec) {
    check_chain(e1, e2, c);
    require(e1.gamma > -e1.beta && e2.gamma > -e2.beta, ErrorKind::domain,
            "space-time convolution bound needs gamma_i > -beta_i");
    const auto D = diff(c.x, c.y);
    const bool apart = norm2(D) > 0.0;
    const double b1 = e1.beta, b2 = e2.beta, g1 = e1.gamma, g2 = e2.gamma;
    const double right = apart ? g1 + b1 - 1.0 : g1 + b1 + b2 - 1.0;
    const double left = apart ? g2 + b2 - 1.0 : g2 + b1 + b2 - 1.0;
    double err = 0.0;
    bool ok = true;
    quad::QuadResult outer;
    {
        std::vector<double> nodes, weights;
        double prev = 0.0;
        for (int level = 0; level <= spec.max_refinements; ++level) {
            quad::split_time_rule(c.s, c.t, left, right, spec.time.nodes << level, nodes, weights);
            double acc = 0.0, e = 0.0;
            for (size_t i = 0; i < nodes.size(); ++i) {
                Chain ci = c;
                ci.r = nodes[i];
                double ie = 0.0;
                acc += weights[i] * inner_integral(e1, e2, ci, nodes[i], spec, &ie, &ok);
                e += std::abs(weights[i]) * ie;
            }
            outer.value = acc;
            outer.refinements_used = level;
            if (level > 0) {
                outer.err_estimate = std::abs(acc - prev) + e;
                if (outer.err_estimate <= 1e3 * spec.target_rel_tol * std::abs(acc) + spec.abs_floor) {
                    outer.converged = true;
                    break;
                }
            }
            prev = acc;
        }
        err = outer.err_estimate;
    }
    const double T = c.t - c.s;
    const double rhs = rho_v(0.0, g1 + g2 + b1 + b2, T, D) * beta_function(g1 + b1 + b2, 1.0 + g2) +
                       rho_v(b2, g1 + g2 + b1, T, D) * beta_function(g1 + b1, 1.0 + g2) +
                       rho_v(0.0, g1 + g2 + b1 + b2, T, D) * beta_function(g2 + b1 + b2, 1.0 + g1) +
                       rho_v(b1, g1 + g2 + b2, T, D) * beta_function(g2 + b2, 1.0 + g1);
    CheckReport rep;
    rep.check_name = "conv_spacetime_bound";
    rep.property = "convolution-spacetime-bound";
    rep.params = {{"beta1", b1}, {"gamma1", g1}, {"beta2", b2}, {"gamma2", g2},
                  {"dim", e1.dim}, {"t", c.t},   {"s", c.s},      {"x", c.x}, {"y", c.y}};
    rep.lhs = outer.value;
    rep.rhs = rhs;
    rep.fitted_constant = outer.value / rhs;
    rep.quadrature_error = err;
    rep.status = outer.converged && std::isfinite(rep.fitted_constant) ? Status::pass : Status::fail;
    return rep;
}

CheckReport conv_lp_bound(const Exponents& e1, const Exponents& e2, const Chain& c, double p,
                          const quad::QuadratureSpec& spec) {
    check_chain(e1, e2, c);
    require(p >= 1.0, ErrorKind::domain, "conv_lp_bound: p must be at least 1");
    const auto D = diff(c.x, c.y);
    const double dist = std::sqrt(norm2(D));
    require(dist > 0.0, ErrorKind::domain, "conv_lp_bound: needs x != y");
    const double right = p * (e1.gamma + e1.beta - 1.0);
    const double left = p * (e2.gamma + e2.beta - 1.0);
    require(right > -1.0 && left > -1.0, ErrorKind::domain,
            "conv_lp_bound: p too large for the endpoint singularities of the inner integral");
    bool ok = true;
    double ierr = 0.0;
    auto g = [&](double r) {
        Chain ci = c;
        ci.r = r;
        return std::pow(inner_integral(e1, e2, ci, r, spec, &ierr, &ok), p);
    };
    quad::QuadResult outer;
    std::vector<double> nodes, weights;
    double prev = 0.0;
    for (int level = 0; level <= spec.max_refinements; ++level) {
        quad::split_time_rule(c.s, c.t, left, right, spec.time.nodes << level, nodes, weights);
        double acc = 0.0;
        for (size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
        outer.value = acc;
        if (level > 0) {
            outer.err_estimate = std::abs(acc - prev);
            if (outer.err_estimate <= 1e3 * spec.target_rel_tol * std::abs(acc) + spec.abs_floor) {
                outer.converged = true;
                break;
            }
        }
        prev = acc;
    }
    CheckReport rep;
    rep.check_name = "conv_lp_bound";
    rep.property = "convolution-time-lp-bound";
    rep.params = {{"beta1", e1.beta}, {"gamma1", e1.gamma}, {"beta2", e2.beta}, {"gamma2", e2.gamma},
                  {"dim", e1.dim},    {"p", p},             {"t", c.t},         {"s", c.s}};
    rep.lhs = outer.value;
    rep.rhs = std::pow(dist, -(e1.dim + 1) * p);
    rep.fitted_constant = rep.lhs / rep.rhs;
    rep.quadrature_error = outer.err_estimate;
    rep.status = outer.converged && std::isfinite(rep.fitted_constant) ? Status::pass : Status::fail;
    return rep;
}

CheckReport conv_fuzz(const Exponents& e1, const Exponents& e2, bool spacetime, int n_chains, int batches,
                      double spread_limit, std::uint64_t seed, const quad::QuadratureSpec& spec) {
    require(n_chains >= batches && batches >= 2, ErrorKind::domain, "conv_fuzz: need at least two batches");
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xc0u};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int d = e1.dim;
    std::vector<double> batch_max(batches, 0.0);
    double worst_err = 0.0;
    bool all_ok = true;
    for (int i = 0; i < n_chains; ++i) {
        Chain c;
        c.s = 0.0;
        c.t = std::pow(10.0, -1.5 + 1.5 * U(rng));
        c.r = c.t * (0.05 + 0.9 * U(rng));
        c.x.assign(d, 0.0);
        c.y.assign(d, 0.0);
        const double dist = std::pow(10.0, -2.0 + 3.0 * U(rng));
        std::vector<double> dir(d);
        double nn = 0.0;
        std::normal_distribution<double> N;
        for (int k = 0; k < d; ++k) {
            dir[k] = N(rng);
            nn += dir[k] * dir[k];
        }
        for (int k = 0; k < d; ++k) c.x[k] = dist * dir[k] / std::sqrt(nn);
        const CheckReport r = spacetime ? conv_spacetime_bound(e1, e2, c, spec) : conv_space_bound(e1, e2, c, spec);
        all_ok = all_ok && r.pass();
        worst_err = std::max(worst_err, r.quadrature_error / std::max(std::abs(r.lhs), 1e-300));
        double& m = batch_max[i % batches];
        m = std::max(m, r.fitted_constant);
    }
    const double hi = *std::max_element(batch_max.begin(), batch_max.end());
    const double lo = *std::min_element(batch_max.begin(), batch_max.end());
    CheckReport rep;
    rep.check_name = spacetime ? "conv_spacetime_fuzz" : "conv_space_fuzz";
    rep.property = spacetime ? "convolution-spacetime-bound" : "convolution-space-bound";
    rep.params = {{"beta1", e1.beta}, {"gamma1", e1.gamma}, {"beta2", e2.beta}, {"gamma2", e2.gamma},
                  {"dim", d},         {"chains", n_chains}, {"batches", batches}, {"seed", seed}};
    rep.lhs = hi / lo;
    rep.rhs = spread_limit;
    rep.fitted_constant = hi;
    rep.quadrature_error = worst_err;
    rep.status = all_ok && hi / lo <= spread_limit ? Status::pass : Status::fail;
    rep.notes = "lhs is the spread of per-batch fitted constants";
    return rep;
}

} // namespace fhk::rho
