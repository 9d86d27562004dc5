#include "fhk/poisson.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "fhk/error.hpp"

namespace fhk::poisson {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

void check_t(double t) { require(t > 0.0 && std::isfinite(t), ErrorKind::domain, "Poisson kernel: need t > 0"); }

} // namespace

double prefactor(int dim) {
    require(dim >= 1, ErrorKind::domain, "Poisson kernel: dim must be positive");
    const double m = 0.5 * (dim + 1);
    return std::exp(std::lgamma(m) - m * std::log(std::numbers::pi));
}

double density(double t, std::span<const double> x) {
    check_t(t);
    const int d = static_cast<int>(x.size());
    const double r = norm2(x) + t * t;
    return prefactor(d) * t * std::pow(r, -0.5 * (d + 1));
}

Deriv parse_deriv(const std::string& name) {
    if (name == "grad") return Deriv::grad;
    if (name == "dt") return Deriv::dt;
    if (name == "grad2") return Deriv::grad2;
    if (name == "grad_dt") return Deriv::grad_dt;
    if (name == "grad3") return Deriv::grad3;
    if (name == "grad2_dt") return Deriv::grad2_dt;
    fail(ErrorKind::domain, "unknown derivative order '" + name + "'");
}

std::vector<double> derivatives(double t, std::span<const double> x, Deriv which) {
    check_t(t);
    const int d = static_cast<int>(x.size());
    require(d >= 1, ErrorKind::domain, "Poisson kernel: empty point");
    const double c = prefactor(d);
    const double m = 0.5 * (d + 1);
    const double x2 = norm2(x);
    const double R = x2 + t * t;
    const double Rm1 = std::pow(R, -m - 1.0);
    const double Rm2 = Rm1 / R;
    const double Rm3 = Rm2 / R;
    auto delta = [](int i, int j) { return i == j ? 1.0 : 0.0; };
    std::vector<double> out;
    switch (which) {
    case Deriv::grad:
        for (int i = 0; i < d; ++i) out.push_back(-2.0 * m * c * t * x[i] * Rm1);
        break;
    case Deriv::dt:
        out.push_back(c * Rm1 * (x2 - d * t * t));
        break;
    case Deriv::grad2:
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out.push_back(-2.0 * m * c * t * (delta(i, j) * Rm1 - 2.0 * (m + 1.0) * x[i] * x[j] * Rm2));
        break;
    case Deriv::grad_dt: {
        const double E = R - (m + 1.0) * (x2 - d * t * t);
        for (int i = 0; i < d; ++i) out.push_back(2.0 * c * x[i] * Rm2 * E);
        break;
    }
    case Deriv::grad3:
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const double sym = delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i];
                    out.push_back(4.0 * m * (m + 1.0) * c * t *
                                  (sym * Rm2 - 2.0 * (m + 2.0) * x[i] * x[j] * x[k] * Rm3));
                }
        break;
    case Deriv::grad2_dt: {
        const double E = R - (m + 1.0) * (x2 - d * t * t);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out.push_back(2.0 * c *
                              (delta(i, j) * Rm2 * E - 2.0 * (m + 2.0) * x[i] * x[j] * Rm3 * E -
                               2.0 * m * x[i] * x[j] * Rm2));
        break;
    }
    }
    return out;
}

double frac_laplacian_on_poisson(double t, std::span<const double> x) { return derivatives(t, x, Deriv::dt)[0]; }

namespace {

// Truncated one-sided integrals ∫_{eps_k}^∞ D(h)/h² dh for the ladder eps_k = eps0·scale/2^k.
template <class D>
std::vector<double> pv_ladder(const D& second_diff, double scale, const quad::PvRule& pv) {
    const double eps0 = pv.eps0 * scale;
    const double far = std::max(pv.far * scale, 2.0 * eps0);
    const double cap = pv.max_panel * scale;
    const quad::Rule& g = quad::gauss_legendre(pv.panel_order);
    // ∫ D(h)/h² dh and ∫ D(h) dh over one panel
    auto panel2 = [&](double a, double b) {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double acc = 0.0, plain = 0.0;
        for (size_t i = 0; i < g.x.size(); ++i) {
            const double h = mid + half * g.x[i];
            const double v = second_diff(h);
            acc += g.w[i] * v / (h * h);
            plain += g.w[i] * v;
        }
        return std::pair{half * acc, half * plain};
    };
    auto panel = [&](double a, double b) { return panel2(a, b).first; };
    double base = 0.0, last_plain = 0.0;
    std::vector<double> edges{eps0};
    for (double e = 2.0 * eps0; e < far; e *= 2.0) edges.push_back(e);
    edges.push_back(far);
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i], b = edges[i + 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / cap)));
        const double w = (b - a) / pieces;
        last_plain = 0.0;
        for (int k = 0; k < pieces; ++k) {
            const auto [v, p] = panel2(a + k * w, a + (k + 1) * w);
            base += v;
            last_plain += p;
        }
    }
    if (pv.tail == "average") {
        const double a = edges[edges.size() - 2];
        base += last_plain / (far - a) / far;
    } else {
        const quad::Rule& tg = quad::gauss_legendre(pv.tail_order);
        const double q = 0.25 * std::numbers::pi;
        for (size_t i = 0; i < tg.x.size(); ++i) {
            const double th = q + q * tg.x[i];
            const double c = std::cos(th);
            const double h = far + far * std::tan(th);
            base += q * tg.w[i] * far / (c * c) * second_diff(h) / (h * h);
        }
    }
    std::vector<double> ladder{base};
    double eps = eps0;
    for (int k = 1; k < pv.levels; ++k) {
        const double lo = 0.5 * eps;
        ladder.push_back(ladder.back() + panel(lo, eps));
        eps = lo;
    }
    return ladder;
}

// Richardson extrapolation eps -> 0 for I(eps) = I0 + a1 eps + a3 eps³ + ...
std::pair<double, double> richardson(const std::vector<double>& I) {
    const int n = static_cast<int>(I.size());
    std::vector<std::vector<double>> T(n);
    for (int k = 0; k < n; ++k) {
        T[k].push_back(I[k]);
        for (int j = 1; j <= k; ++j) {
            const double f = std::pow(2.0, 2 * j - 1) - 1.0;
            T[k].push_back(T[k][j - 1] + (T[k][j - 1] - T[k - 1][j - 1]) / f);
        }
    }
    const double best = T[n - 1][n - 1];
    const double err = std::abs(best - T[n - 1][n - 2]);
    return {best, err};
}

PvResult finish(const std::vector<double>& ladder, int dim) {
    PvResult out;
    out.ladder = ladder;
    auto [v, err] = richardson(ladder);
    out.unnormalized = v;
    out.err_estimate = err * pv_constant(dim);
    out.value = pv_constant(dim) * v;
    return out;
}

void check_convergence(const PvResult& r, const quad::PvRule& pv, double x0) {
    double mag = std::abs(r.unnormalized);
    for (double v : r.ladder) mag = std::max(mag, std::abs(v));
    if (r.err_estimate / pv_constant(1) > pv.tol * std::max(mag, 1e-300) + 1e-14) {
        std::ostringstream os;
        os << "principal value extrapolation did not settle at x=" << x0 << ": ladder";
        for (double v : r.ladder) os << ' ' << v;
        os << ", estimate " << r.unnormalized << " +- " << r.err_estimate;
        fail(ErrorKind::non_convergence, os.str());
    }
}

} // namespace

PvResult frac_laplacian_pv_1d(const quad::Fn1& f, double x, double scale, const quad::QuadratureSpec& spec) {
    require(scale > 0.0, ErrorKind::domain, "frac_laplacian_pv: scale must be positive");
    const double fx = f(x);
    auto d2 = [&](double h) { return f(x + h) + f(x - h) - 2.0 * fx; };
    PvResult r = finish(pv_ladder(d2, scale, spec.pv), 1);
    check_convergence(r, spec.pv, x);
    return r;
}

PvResult frac_laplacian_pv(const quad::FnD& f, std::span<const double> x, double scale,
                           const quad::QuadratureSpec& spec) {
    const int d = static_cast<int>(x.size());
    if (d == 1) {
        std::vector<double> p(1);
        return frac_laplacian_pv_1d(
            [&](double z) {
                p[0] = z;
                return f(p);
            },
            x[0], scale, spec);
    }
    require(scale > 0.0, ErrorKind::domain, "frac_laplacian_pv: scale must be positive");
    require(d == 2 || d == 3, ErrorKind::domain, "frac_laplacian_pv: dimensions 1 to 3 are supported");
    const double fx = f(x);
    std::vector<double> a(d), b(d);
    std::vector<double> total(spec.pv.levels, 0.0);
    const double pi = std::numbers::pi;
    auto accumulate = [&](const std::vector<double>& u, double w) {
        auto d2 = [&](double h) {
            for (int k = 0; k < d; ++k) {
                a[k] = x[k] + h * u[k];
                b[k] = x[k] - h * u[k];
            }
            return 0.5 * (f(a) + f(b) - 2.0 * fx);
        };
        auto lad = pv_ladder(d2, scale, spec.pv);
        for (int k = 0; k < spec.pv.levels; ++k) total[k] += w * lad[k];
    };
    const int n = spec.spatial.angular;
    if (d == 2) {
        for (int i = 0; i < n; ++i) {
            const double th = 2.0 * pi * (i + 0.5) / n;
            accumulate({std::cos(th), std::sin(th)}, 2.0 * pi / n);
        }
    } else {
        const int nu = std::max(2, n / 2);
        const quad::Rule& g = quad::gauss_legendre(nu);
        for (int j = 0; j < nu; ++j) {
            const double ct = g.x[j], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int i = 0; i < n; ++i) {
                const double ph = 2.0 * pi * (i + 0.5) / n;
                accumulate({st * std::cos(ph), st * std::sin(ph), ct}, g.w[j] * 2.0 * pi / n);
            }
        }
    }
    PvResult r = finish(total, d);
    double mag = std::abs(r.unnormalized);
    for (double v : r.ladder) mag = std::max(mag, std::abs(v));
    if (r.err_estimate / pv_constant(d) > spec.pv.tol * std::max(mag, 1e-300) + 1e-14) {
        fail(ErrorKind::non_convergence, "principal value extrapolation did not settle (d >= 2)");
    }
    return r;
}

} // namespace fhk::poisson
