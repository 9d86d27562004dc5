#include "fhk/frozen.hpp"

#include <algorithm>
#include <cmath>

#include "fhk/error.hpp"

namespace fhk::frozen {

FrozenArgs frozen_args(const fields::Coefficients& co, double s, double t, std::span<const double> y,
                       const quad::QuadratureSpec& spec) {
    require(s < t, ErrorKind::domain, "frozen_args: need s < t");
    require(static_cast<int>(y.size()) == co.dim, ErrorKind::domain, "frozen_args: dimension mismatch");
    const int d = co.dim;
    FrozenArgs fa;
    fa.G.assign(d, 0.0);
    std::vector<double> bv(d);
    if (co.time_homogeneous()) {
        const double r = std::max(s, 0.0);
        fa.F = (t - s) * co.a(r, y);
        co.eval_b(r, y, bv);
        for (int i = 0; i < d; ++i) fa.G[i] = (t - s) * bv[i];
    } else {
        const quad::Rule& g = quad::gauss_legendre(std::max(spec.time.nodes, 8));
        const double h = 0.5 * (t - s);
        for (size_t k = 0; k < g.x.size(); ++k) {
            const double r = s + h * (1.0 + g.x[k]);
            fa.F += h * g.w[k] * co.a(r, y);
            co.eval_b(r, y, bv);
            for (int i = 0; i < d; ++i) fa.G[i] += h * g.w[k] * bv[i];
        }
    }
    const double slack = 1e-12 * (t - s);
    if (!(fa.F >= co.a0() * (t - s) - slack && fa.F <= co.a1() * (t - s) + slack)) {
        fail(ErrorKind::data, "frozen_args: F=" + std::to_string(fa.F) + " violates a0(t-s) <= F <= a1(t-s) on [" +
                                  std::to_string(s) + "," + std::to_string(t) + "] at y[0]=" + std::to_string(y[0]));
    }
    double g2 = 0.0;
    for (double v : fa.G) g2 += v * v;
    if (!(std::sqrt(g2) <= co.b1() * (t - s) + slack))
        fail(ErrorKind::data, "frozen_args: |G| exceeds b1(t-s) at y[0]=" + std::to_string(y[0]));
    return fa;
}

namespace {

std::vector<double> shifted(std::span<const double> x, std::span<const double> y, const FrozenArgs& fa) {
    std::vector<double> w(x.size());
    for (size_t i = 0; i < x.size(); ++i) w[i] = x[i] - y[i] + fa.G[i];
    return w;
}

} // namespace

double p0(const fields::Coefficients& co, double t, std::span<const double> x, double s, std::span<const double> y,
          const quad::QuadratureSpec& spec) {
    const FrozenArgs fa = frozen_args(co, s, t, y, spec);
    return poisson::density(fa.F, shifted(x, y, fa));
}

P0Deriv parse_p0_deriv(const std::string& name) {
    if (name == "fraclap_x") return P0Deriv::fraclap_x;
    if (name == "grad_x") return P0Deriv::grad_x;
    if (name == "dt") return P0Deriv::dt;
    if (name == "grad_fraclap") return P0Deriv::grad_fraclap;
    if (name == "grad2") return P0Deriv::grad2;
    fail(ErrorKind::domain, "unknown p0 derivative '" + name + "'");
}

std::vector<double> p0_derivative(const fields::Coefficients& co, double t, std::span<const double> x, double s,
                                  std::span<const double> y, P0Deriv which, const quad::QuadratureSpec& spec) {
    const FrozenArgs fa = frozen_args(co, s, t, y, spec);
    const auto w = shifted(x, y, fa);
    using poisson::Deriv;
    switch (which) {
    case P0Deriv::fraclap_x: return poisson::derivatives(fa.F, w, Deriv::dt);
    case P0Deriv::grad_x: return poisson::derivatives(fa.F, w, Deriv::grad);
    case P0Deriv::grad_fraclap: return poisson::derivatives(fa.F, w, Deriv::grad_dt);
    case P0Deriv::grad2: return poisson::derivatives(fa.F, w, Deriv::grad2);
    case P0Deriv::dt: {
        const double frac = poisson::derivatives(fa.F, w, Deriv::dt)[0];
        const auto grad = poisson::derivatives(fa.F, w, Deriv::grad);
        std::vector<double> bv(co.dim);
        co.eval_b(t, y, bv);
        double v = co.a(t, y) * frac;
        for (int i = 0; i < co.dim; ++i) v += bv[i] * grad[i];
        return {v};
    }
    }
    return {};
}

double q0(const fields::Coefficients& co, double t, std::span<const double> x, double s, std::span<const double> y,
          const quad::QuadratureSpec& spec) {
    const FrozenArgs fa = frozen_args(co, s, t, y, spec);
    const auto w = shifted(x, y, fa);
    const int d = co.dim;
    const double da = co.a(t, x) - co.a(t, y);
    std::vector<double> bx(d), by(d);
    co.eval_b(t, x, bx);
    co.eval_b(t, y, by);
    double v = 0.0;
    if (da != 0.0) v += da * poisson::derivatives(fa.F, w, poisson::Deriv::dt)[0];
    bool drift = false;
    for (int i = 0; i < d; ++i) drift = drift || bx[i] != by[i];
    if (drift) {
        const auto g = poisson::derivatives(fa.F, w, poisson::Deriv::grad);
        for (int i = 0; i < d; ++i) v += (bx[i] - by[i]) * g[i];
    }
    return v;
}

Cancellation parse_cancellation(const std::string& name) {
    if (name == "grad") return Cancellation::grad;
    if (name == "fraclap") return Cancellation::fraclap;
    if (name == "dt") return Cancellation::dt;
    if (name == "mass") return Cancellation::mass;
    fail(ErrorKind::domain, "unknown cancellation integral '" + name + "'");
}

CancellationResult cancellation_integral(const fields::Coefficients& co, double t, std::span<const double> x,
                                         double s, Cancellation which, const quad::QuadratureSpec& spec) {
    require(s < t, ErrorKind::domain, "cancellation_integral: need s < t");
    const int d = co.dim;
    const int comps = which == Cancellation::grad ? d : 1;
    // The peak sits where x - y + G(y) = 0, i.e. near y = x + G(x); width F(x).
    const FrozenArgs at_x = frozen_args(co, s, t, x, spec);
    std::vector<double> c(d);
    for (int i = 0; i < d; ++i) c[i] = x[i] + at_x.G[i];
    CancellationResult out;
    out.value.assign(comps, 0.0);
    for (int k = 0; k < comps; ++k) {
        auto f = [&](std::span<const double> y) {
            switch (which) {
            case Cancellation::mass: return p0(co, t, x, s, y, spec);
            case Cancellation::fraclap: return p0_derivative(co, t, x, s, y, P0Deriv::fraclap_x, spec)[0];
            case Cancellation::dt: return p0_derivative(co, t, x, s, y, P0Deriv::dt, spec)[0];
            case Cancellation::grad: return p0_derivative(co, t, x, s, y, P0Deriv::grad_x, spec)[k];
            }
            return 0.0;
        };
        std::vector<quad::SpaceCenter> centers{{c, at_x.F}};
        if (d == 1) {
            quad::LineHints h;
            h.centers.push_back({c[0], at_x.F});
            // split at |x - y| = t - s on both sides, where the frozen point crosses the peak's shoulder
            h.breakpoints = {x[0] - (t - s), x[0] + (t - s)};
            for (double b : co.a.breakpoints()) h.breakpoints.push_back(b);
            for (double b : co.b[0].breakpoints()) h.breakpoints.push_back(b);
            const auto q = quad::integrate_line([&](double y) { return f(std::span<const double>(&y, 1)); }, h, spec);
            out.value[k] = q.value;
            out.err_estimate = std::max(out.err_estimate, q.err_estimate);
            out.converged = out.converged && q.converged;
        } else {
            const auto q = quad::integrate_space(f, d, centers, spec);
            out.value[k] = q.value;
            out.err_estimate = std::max(out.err_estimate, q.err_estimate);
            out.converged = out.converged && q.converged;
        }
    }
    return out;
}

} // namespace fhk::frozen
