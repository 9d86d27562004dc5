#include "fhk/fields.hpp"

#include <algorithm>
#include <numbers>
#include <random>

#include "fhk/error.hpp"

namespace fhk::fields {

using nlohmann::json;

namespace {

std::vector<double> read_point(const json& p, const char* key, int dim) {
    std::vector<double> c(dim, 0.0);
    if (!p.contains(key)) return c;
    const json& v = p.at(key);
    if (v.is_number()) {
        std::fill(c.begin(), c.end(), v.get<double>());
    } else {
        require(v.is_array() && static_cast<int>(v.size()) == dim, ErrorKind::config,
                std::string("field parameter '") + key + "' must be a number or a " + std::to_string(dim) +
                    "-vector");
        for (int i = 0; i < dim; ++i) c[i] = v[i].get<double>();
    }
    return c;
}

double dist(std::span<const double> x, const std::vector<double>& c) {
    double s = 0.0;
    for (size_t i = 0; i < c.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    return std::sqrt(s);
}

double num(const json& p, const char* key, double dflt) {
    if (!p.contains(key)) return dflt;
    require(p.at(key).is_number(), ErrorKind::config, std::string("field parameter '") + key + "' must be a number");
    return p.at(key).get<double>();
}

double num_required(const json& p, const char* key, const std::string& kind) {
    require(p.contains(key), ErrorKind::config, "field kind '" + kind + "' needs parameter '" + key + "'");
    return num(p, key, 0.0);
}

} // namespace

ScalarField::ScalarField() : fn_([](double, std::span<const double>) { return 0.0; }) {}

ScalarField ScalarField::constant(double v, int dim) {
    ScalarField f;
    f.kind_ = "constant";
    f.params_ = {{"value", v}};
    f.dim_ = dim;
    f.fn_ = [v](double, std::span<const double>) { return v; };
    f.lo_ = f.hi_ = v;
    f.norm_ = std::abs(v);
    f.zero_ = v == 0.0;
    return f;
}

ScalarField ScalarField::from_json(const json& j, int dim) {
    require(j.is_object() && j.contains("kind"), ErrorKind::config, "field definition needs a 'kind'");
    require(dim >= 1, ErrorKind::config, "field dimension must be positive");
    const std::string kind = j.at("kind").get<std::string>();
    const json p = j.value("params", json::object());
    ScalarField f;
    f.kind_ = kind;
    f.params_ = p;
    f.dim_ = dim;
    f.zero_ = false;
    f.flat_ = false;
    if (kind == "constant") {
        f = constant(num_required(p, "value", kind), dim);
    } else if (kind == "sinusoid") {
        const double A = num_required(p, "amplitude", kind), w = num(p, "frequency", 1.0), ph = num(p, "phase", 0.0),
                     off = num(p, "offset", 0.0);
        const int axis = static_cast<int>(num(p, "axis", 0.0));
        require(axis >= 0 && axis < dim, ErrorKind::config, "sinusoid axis out of range");
        f.fn_ = [=](double, std::span<const double> x) { return off + A * std::sin(w * x[axis] + ph); };
        f.lo_ = off - std::abs(A);
        f.hi_ = off + std::abs(A);
        f.norm_ = std::abs(off) + std::abs(A) + std::abs(A * w);
        f.zero_ = A == 0.0 && off == 0.0;
    } else if (kind == "rational_bump") {
        const double base = num(p, "base", 0.0), A = num_required(p, "amplitude", kind), w = num(p, "width", 1.0);
        require(w > 0.0, ErrorKind::config, "rational_bump width must be positive");
        const auto c = read_point(p, "center", dim);
        f.fn_ = [=](double, std::span<const double> x) {
            const double r = dist(x, c) / w;
            return base + A / (1.0 + r * r);
        };
        f.lo_ = base + std::min(0.0, A);
        f.hi_ = base + std::max(0.0, A);
        // sup of |d/du (1+u²)^{-1}| is 3√3/8
        f.norm_ = std::max(std::abs(f.lo_), std::abs(f.hi_)) + std::abs(A) * 3.0 * std::sqrt(3.0) / (8.0 * w);
    } else if (kind == "holder_cap") {
        const double base = num(p, "base", 0.0), A = num_required(p, "amplitude", kind),
                     e = num_required(p, "exponent", kind);
        require(e > 0.0 && e <= 1.0, ErrorKind::config, "holder_cap exponent must lie in (0, 1]");
        const auto c = read_point(p, "center", dim);
        f.fn_ = [=](double, std::span<const double> x) { return base + A * std::min(std::pow(dist(x, c), e), 1.0); };
        f.lo_ = base + std::min(0.0, A);
        f.hi_ = base + std::max(0.0, A);
        f.beta_ = e;
        f.norm_ = std::max(std::abs(f.lo_), std::abs(f.hi_)) + std::abs(A);
        if (dim == 1) f.breaks_ = {c[0] - 1.0, c[0], c[0] + 1.0};
    } else if (kind == "singular_power") {
        const double A = num(p, "amplitude", 1.0), eta = num_required(p, "exponent", kind), R = num(p, "radius", 1.0);
        require(eta > 0.0 && R > 0.0, ErrorKind::config, "singular_power needs exponent > 0 and radius > 0");
        const auto c = read_point(p, "center", dim);
        f.fn_ = [=](double, std::span<const double> x) {
            const double r = dist(x, c);
            return r <= R ? A * std::pow(r, -eta) : 0.0;
        };
        const double inf = std::numeric_limits<double>::infinity();
        f.lo_ = A >= 0.0 ? 0.0 : -inf;
        f.hi_ = A >= 0.0 ? inf : 0.0;
        f.beta_ = 0.0;
        f.kato_ = dim * eta < 1.0 ? 1.0 : 0.0;
        f.singular_ = {c};
        if (dim == 1) f.breaks_ = {c[0] - R, c[0], c[0] + R};
    } else if (kind == "time_cosine") {
        const double base = num(p, "base", 0.0), A = num_required(p, "amplitude", kind), w = num(p, "frequency", 1.0),
                     ph = num(p, "phase", 0.0);
        f.fn_ = [=](double t, std::span<const double>) { return base + A * std::cos(w * t + ph); };
        f.lo_ = base - std::abs(A);
        f.hi_ = base + std::abs(A);
        f.norm_ = std::max(std::abs(f.lo_), std::abs(f.hi_));
        f.homogeneous_ = A == 0.0;
        f.flat_ = true;
    } else if (kind == "sum") {
        require(p.contains("terms") && p.at("terms").is_array() && !p.at("terms").empty(), ErrorKind::config,
                "sum field needs a non-empty 'terms' array");
        std::vector<ScalarField> terms;
        for (const auto& tj : p.at("terms")) terms.push_back(from_json(tj, dim));
        f.fn_ = [terms](double t, std::span<const double> x) {
            double s = 0.0;
            for (const auto& g : terms) s += g(t, x);
            return s;
        };
        f.lo_ = f.hi_ = 0.0;
        f.norm_ = 0.0;
        f.beta_ = 1.0;
        f.kato_ = 1.0;
        f.homogeneous_ = f.flat_ = f.zero_ = true;
        for (const auto& g : terms) {
            f.lo_ += g.lo_;
            f.hi_ += g.hi_;
            f.norm_ += g.norm_;
            f.beta_ = std::min(f.beta_, g.beta_);
            f.kato_ = std::min(f.kato_, g.kato_);
            f.homogeneous_ = f.homogeneous_ && g.homogeneous_;
            f.flat_ = f.flat_ && g.flat_;
            f.zero_ = f.zero_ && g.zero_;
            f.singular_.insert(f.singular_.end(), g.singular_.begin(), g.singular_.end());
            f.breaks_.insert(f.breaks_.end(), g.breaks_.begin(), g.breaks_.end());
        }
    } else {
        fail(ErrorKind::config, "unknown field kind '" + kind + "'");
    }
    f.kind_ = kind;
    f.params_ = p;
    f.apply_overrides(j);
    return f;
}

void ScalarField::apply_overrides(const json& j) {
    if (j.contains("declared_beta")) {
        beta_ = j.at("declared_beta").get<double>();
        require(beta_ >= 0.0 && beta_ <= 1.0, ErrorKind::config, "declared_beta must lie in [0, 1]");
    }
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        if (b.contains("sup")) {
            const double s = b.at("sup").get<double>();
            require(s >= 0.0, ErrorKind::config, "bounds.sup must be non-negative");
            lo_ = -s;
            hi_ = s;
        }
        lo_ = b.value("lower", lo_);
        hi_ = b.value("upper", hi_);
        require(lo_ <= hi_, ErrorKind::config, "bounds.lower exceeds bounds.upper");
    }
    if (j.contains("holder_norm")) norm_ = j.at("holder_norm").get<double>();
    if (j.contains("kato_gamma")) kato_ = j.at("kato_gamma").get<double>();
}

json ScalarField::to_json() const {
    json j{{"kind", kind_}, {"params", params_}, {"declared_beta", beta_}};
    json b = json::object();
    if (std::isfinite(lo_)) b["lower"] = lo_;
    if (std::isfinite(hi_)) b["upper"] = hi_;
    j["bounds"] = b;
    return j;
}

double Coefficients::b1() const {
    double s = 0.0;
    for (const auto& f : b) s += f.sup_abs() * f.sup_abs();
    return std::sqrt(s);
}

double Coefficients::beta() const {
    double m = a.declared_beta();
    for (const auto& f : b) m = std::min(m, f.declared_beta());
    return m;
}

bool Coefficients::time_homogeneous() const {
    bool h = a.time_homogeneous() && c.time_homogeneous();
    for (const auto& f : b) h = h && f.time_homogeneous();
    return h;
}

bool Coefficients::constant_ab() const {
    bool k = a.space_independent() && a.time_homogeneous();
    for (const auto& f : b) k = k && f.space_independent() && f.time_homogeneous();
    return k;
}

void Coefficients::eval_b(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < dim; ++i) out[i] = b[i](t, x);
}

Coefficients Coefficients::from_json(const json& j, int dim) {
    Coefficients co;
    co.dim = dim;
    co.a = j.contains("a") ? ScalarField::from_json(j.at("a"), dim) : ScalarField::constant(1.0, dim);
    co.b.clear();
    if (!j.contains("b")) {
        for (int i = 0; i < dim; ++i) co.b.push_back(ScalarField::constant(0.0, dim));
    } else if (j.at("b").value("kind", "") == "vector") {
        const json& comps = j.at("b").value("components", json::array());
        require(static_cast<int>(comps.size()) == dim, ErrorKind::config,
                "b.components must have one entry per dimension");
        for (const auto& c : comps) co.b.push_back(ScalarField::from_json(c, dim));
    } else {
        require(dim == 1, ErrorKind::config, "in dimension > 1, b must be given with kind 'vector'");
        co.b.push_back(ScalarField::from_json(j.at("b"), dim));
    }
    co.c = j.contains("c") ? ScalarField::from_json(j.at("c"), dim) : ScalarField::constant(0.0, dim);
    require(co.a.lower() > 0.0, ErrorKind::config, "a must have a positive lower bound a0");
    require(co.a.bounded(), ErrorKind::config, "a must be bounded");
    require(co.beta() > 0.0, ErrorKind::config, "a and b must be Hölder continuous with exponent > 0");
    for (const auto& f : co.b) require(f.bounded(), ErrorKind::config, "b must be bounded");
    return co;
}

json Coefficients::to_json() const {
    json bj;
    if (dim == 1) {
        bj = b[0].to_json();
    } else {
        bj = {{"kind", "vector"}, {"components", json::array()}};
        for (const auto& f : b) bj["components"].push_back(f.to_json());
    }
    return {{"a", a.to_json()}, {"b", bj}, {"c", c.to_json()}};
}

void validate(const Coefficients& co) {
    const double tol = 1e-12;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    std::vector<double> x(co.dim), bv(co.dim);
    auto where = [&](double t) {
        std::string s = "t=" + std::to_string(t) + " x=(";
        for (int i = 0; i < co.dim; ++i) s += (i ? "," : "") + std::to_string(x[i]);
        return s + ")";
    };
    const double b1 = co.b1();
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (int k = 0; k < 801; ++k) {
            if (co.dim == 1) {
                x[0] = -10.0 + 0.025 * k;
            } else {
                for (auto& v : x) v = U(rng);
            }
            const double av = co.a(t, x);
            if (!(av >= co.a0() - tol && av <= co.a1() + tol)) {
                fail(ErrorKind::data, "a=" + std::to_string(av) + " outside declared [a0,a1]=[" +
                                          std::to_string(co.a0()) + "," + std::to_string(co.a1()) + "] at " +
                                          where(t));
            }
            co.eval_b(t, x, bv);
            double n2 = 0.0;
            for (double v : bv) n2 += v * v;
            if (!(std::sqrt(n2) <= b1 + tol))
                fail(ErrorKind::data, "|b| exceeds declared b1=" + std::to_string(b1) + " at " + where(t));
        }
    }
    SampleSpec ss;
    auto check_norm = [&](const ScalarField& f, const char* name) {
        if (!std::isfinite(f.declared_norm()) || f.declared_beta() <= 0.0) return;
        const double h = holder_norm(f, f.declared_beta(), ss);
        if (h > 1.05 * f.declared_norm()) {
            fail(ErrorKind::data, std::string("sampled Hölder norm of ") + name + " (" + std::to_string(h) +
                                      ") exceeds the declared value " + std::to_string(f.declared_norm()));
        }
    };
    check_norm(co.a, "a");
    for (const auto& f : co.b) check_norm(f, "b");
}

double holder_seminorm(const ScalarField& f, double beta, const SampleSpec& sample) {
    require(beta > 0.0 && beta <= 1.0, ErrorKind::domain, "holder_norm: beta must lie in (0, 1]");
    require(sample.n >= 2 && !sample.times.empty() && sample.hi > sample.lo, ErrorKind::domain,
            "holder_norm: empty sample corpus");
    const int d = f.dim();
    std::vector<std::vector<double>> pts;
    if (d == 1) {
        for (int i = 0; i < sample.n; ++i) pts.push_back({sample.lo + (sample.hi - sample.lo) * i / (sample.n - 1)});
        for (double b : f.breakpoints())
            for (double s = sample.near_singular; s <= 1.0; s *= 2.0) {
                pts.push_back({b - s});
                pts.push_back({b + s});
                pts.push_back({b});
            }
    } else {
        std::mt19937_64 rng(sample.seed);
        std::uniform_real_distribution<double> U(sample.lo, sample.hi);
        for (int i = 0; i < sample.n; ++i) {
            std::vector<double> p(d);
            for (auto& v : p) v = U(rng);
            pts.push_back(p);
        }
    }
    double best = 0.0;
    std::vector<double> vals(pts.size());
    for (double t : sample.times) {
        for (size_t i = 0; i < pts.size(); ++i) vals[i] = f(t, pts[i]);
        for (size_t i = 0; i < pts.size(); ++i) {
            if (!std::isfinite(vals[i])) continue;
            for (size_t k = i + 1; k < pts.size(); ++k) {
                if (!std::isfinite(vals[k])) continue;
                const double r = dist(pts[i], pts[k]);
                if (r == 0.0) continue;
                best = std::max(best, std::abs(vals[i] - vals[k]) / std::pow(r, beta));
            }
        }
    }
    return best;
}

double holder_norm(const ScalarField& f, double beta, const SampleSpec& sample) {
    double sup = 0.0;
    const int d = f.dim();
    std::vector<double> x(d, 0.0);
    for (double t : sample.times)
        for (int i = 0; i < sample.n; ++i) {
            for (auto& v : x) v = sample.lo + (sample.hi - sample.lo) * i / (sample.n - 1);
            const double v = std::abs(f(t, x));
            if (std::isfinite(v)) sup = std::max(sup, v);
        }
    return sup + holder_seminorm(f, beta, sample);
}

namespace {

// ∫ s^γ (z² + s²)^{-1} |c(τ, x + σ z)| dz, σ = ±1, d = 1.
double kato_inner(const ScalarField& pot, double gamma, double s, double tau, double x, double sigma,
                  const quad::QuadratureSpec& spec, double* err) {
    if (tau < 0.0) return 0.0;
    quad::LineHints h;
    h.centers.push_back({0.0, s});
    // c(x + σz) is singular where x + σz = p, i.e. z = σ(p - x)
    for (const auto& p : pot.singular_points()) {
        const double z = sigma * (p[0] - x);
        h.centers.push_back({z, 1e-15 * std::max(1.0, std::abs(z))});
    }
    for (double b : pot.breakpoints()) h.breakpoints.push_back(sigma * (b - x));
    const auto q = quad::integrate_line(
        [&](double z) {
            const double v = std::abs(pot.at(tau, x + sigma * z));
            return v == 0.0 ? 0.0 : std::pow(s, gamma) * v / (z * z + s * s);
        },
        h, spec);
    if (err) *err += q.err_estimate;
    return q.value;
}

} // namespace

KatoResult kato_functional(const ScalarField& pot, double gamma, double eps, KatoForm form, const KatoGrid& grid,
                           const quad::QuadratureSpec& spec) {
    require(eps > 0.0, ErrorKind::domain, "kato_functional: eps must be positive");
    require(gamma > 0.0 && gamma <= 1.0, ErrorKind::domain, "kato_functional: gamma must lie in (0, 1]");
    require(pot.dim() == 1, ErrorKind::domain, "kato_functional: only d = 1 is implemented");
    KatoResult res;
    if (pot.is_zero()) return res;
    std::vector<std::vector<double>> pts = grid.points;
    if (pts.empty()) {
        for (const auto& p : pot.singular_points()) pts.push_back(p);
        for (int i = 0; i <= 8; ++i) pts.push_back({-2.0 + 0.5 * i});
        std::mt19937_64 rng(grid.seed);
        std::uniform_real_distribution<double> U(-3.0, 3.0);
        for (int i = 0; i < grid.random_probes; ++i) pts.push_back({U(rng)});
    }
    quad::QuadratureSpec inner = spec;
    inner.target_rel_tol = std::max(spec.target_rel_tol, 1e-8);
    // s-panels graded geometrically toward 0; the part below eps·2^-panels is negligible
    const int panels = 48;
    auto outer = [&](double t, double x, int order, double* err) {
        const quad::Rule& g = quad::gauss_legendre(order);
        double minus = 0.0, plus = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double hi = eps * std::ldexp(1.0, -k), lo = 0.5 * hi, half = 0.5 * (hi - lo);
            for (size_t i = 0; i < g.x.size(); ++i) {
                const double s = lo + half * (1.0 + g.x[i]);
                minus += half * g.w[i] * kato_inner(pot, gamma, s, t - s, x, -1.0, inner, err);
                plus += half * g.w[i] * kato_inner(pot, gamma, s, t + s, x, form == KatoForm::ell ? 1.0 : -1.0,
                                                   inner, err);
            }
        }
        return form == KatoForm::ell ? minus + plus : std::max(minus, plus);
    };
    for (double t : grid.times)
        for (const auto& x : pts) {
            double err = 0.0;
            const double v = outer(t, x[0], 8, &err);
            res.probed.push_back({t, x[0], v});
            if (v > res.value) {
                res.value = v;
                res.t_at_sup = t;
                res.x_at_sup = x;
            }
        }
    double err = 0.0;
    const double fine = outer(res.t_at_sup, res.x_at_sup.empty() ? 0.0 : res.x_at_sup[0], 12, &err);
    res.err_estimate = std::abs(fine - res.value) + err;
    return res;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::domain, "loglog_slope: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CheckReport lp_lq_membership(const ScalarField& pot, double p, double q, double gamma,
                             const std::vector<double>& ladder, const quad::QuadratureSpec& spec) {
    require(p >= 1.0 && q >= 1.0, ErrorKind::domain, "lp_lq_membership: p and q must be at least 1");
    const int d = pot.dim();
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    const double lhs = d * inv_p + inv_q;
    CheckReport rep;
    rep.check_name = "lp_lq_membership";
    rep.property = "lebesgue-inclusion-in-kato-class";
    rep.params = {{"p", std::isinf(p) ? json("inf") : json(p)},
                  {"q", std::isinf(q) ? json("inf") : json(q)},
                  {"gamma", gamma},
                  {"dim", d},
                  {"ladder", ladder}};
    rep.lhs = lhs;
    rep.rhs = gamma;
    if (!(lhs < gamma)) {
        rep.status = Status::not_applicable;
        rep.notes = "outside proposition hypothesis: d/p + 1/q = " + std::to_string(lhs) + " is not below gamma";
        return rep;
    }
    const double predicted = gamma - lhs;
    std::vector<double> vals;
    double err = 0.0;
    for (double e : ladder) {
        const auto k = kato_functional(pot, gamma, e, KatoForm::ell, KatoGrid{}, spec);
        vals.push_back(k.value);
        err = std::max(err, k.err_estimate);
    }
    bool monotone = true;
    for (size_t i = 1; i < ladder.size(); ++i)
        if ((ladder[i] < ladder[i - 1]) != (vals[i] < vals[i - 1])) monotone = false;
    bool positive = std::all_of(vals.begin(), vals.end(), [](double v) { return v > 0.0; });
    const double slope = positive ? loglog_slope(ladder, vals) : 0.0;
    double c = 0.0;
    for (size_t i = 0; i < ladder.size(); ++i) c = std::max(c, vals[i] / std::pow(ladder[i], predicted));
    rep.fitted_constant = c;
    rep.quadrature_error = err;
    rep.lhs = slope;
    rep.rhs = predicted;
    rep.status = (!positive || (monotone && slope >= predicted - 0.1)) ? Status::pass : Status::fail;
    rep.notes = positive ? "lhs: observed decay slope of ell(eps); rhs: gamma - d/p - 1/q"
                         : "functional vanishes identically";
    return rep;
}

} // namespace fhk::fields
