#include "fhk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "fhk/error.hpp"

namespace fhk::quad {

namespace {

Rule golub_welsch(int n, double a, double b) {
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    const double ab = a + b;
    diag(0) = (b - a) / (ab + 2.0);
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        diag(k) = (b * b - a * a) / (s * (s + 2.0));
    }
    for (int k = 0; k + 1 < n; ++k) {
        const double s = 2.0 * k + ab;
        double b2;
        if (k == 0) {
            b2 = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        } else {
            b2 = 4.0 * (k + 1.0) * (k + 1.0 + a) * (k + 1.0 + b) * (k + 1.0 + ab) /
                 ((s + 1.0) * (s + 2.0) * (s + 2.0) * (s + 3.0));
        }
        sub(k) = std::sqrt(b2);
    }
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double mu0 =
        std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));
    if (n == 1) {
        r.x[0] = diag(0);
        r.w[0] = mu0;
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    for (int i = 0; i < n; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
    }
    return r;
}

void add_panel(double a, double b, int m, std::vector<double>& nodes, std::vector<double>& weights) {
    const Rule& r = gauss_legendre(m);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < m; ++i) {
        nodes.push_back(mid + half * r.x[i]);
        weights.push_back(half * r.w[i]);
    }
}

// z = edge + dir * W * tan(theta), theta in [0, pi/2)
void add_tail(double edge, double dir, double W, int m, std::vector<double>& nodes, std::vector<double>& weights) {
    const Rule& r = gauss_legendre(m);
    const double half = 0.25 * std::numbers::pi;
    for (int i = 0; i < m; ++i) {
        const double th = half + half * r.x[i];
        const double c = std::cos(th);
        nodes.push_back(edge + dir * W * std::tan(th));
        weights.push_back(half * r.w[i] * W / (c * c));
    }
}

struct Edges {
    std::vector<double> e;
    double wmax = 0.0;
};

Edges graded_edges(const LineHints& hints, const SpatialRule& rule) {
    Edges out;
    std::vector<Center> centers = hints.centers;
    if (centers.empty()) centers.push_back({0.0, 1.0});
    double sep = 0.0;
    for (const auto& a : centers)
        for (const auto& b : centers) sep = std::max(sep, std::abs(a.pos - b.pos));
    for (const auto& c : centers) {
        require(c.width > 0.0 && std::isfinite(c.width) && std::isfinite(c.pos), ErrorKind::domain,
                "line rule: center width must be positive and finite");
        out.wmax = std::max(out.wmax, c.width);
    }
    for (const auto& c : centers) {
        const double reach = std::max({rule.far, 8.0 * c.width, 1.5 * sep});
        out.e.push_back(c.pos);
        for (double d = c.width; d < reach; d *= rule.grading) {
            out.e.push_back(c.pos - d);
            out.e.push_back(c.pos + d);
        }
        out.e.push_back(c.pos - reach);
        out.e.push_back(c.pos + reach);
    }
    for (double b : hints.breakpoints)
        if (std::isfinite(b)) out.e.push_back(b);
    std::sort(out.e.begin(), out.e.end());
    std::vector<double> u;
    for (double v : out.e) {
        if (u.empty() || v - u.back() > 1e-13 * std::max(1.0, std::abs(v))) u.push_back(v);
    }
    out.e = std::move(u);
    return out;
}

void panels_between(const std::vector<double>& e, double cap, const SpatialRule& rule, int level,
                    std::vector<double>& nodes, std::vector<double>& weights) {
    const int sub = 1 << level;
    for (size_t i = 0; i + 1 < e.size(); ++i) {
        const double a = e[i];
        const double b = e[i + 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / cap))) * sub;
        const double h = (b - a) / pieces;
        for (int k = 0; k < pieces; ++k) add_panel(a + k * h, a + (k + 1) * h, rule.panel_order, nodes, weights);
    }
}

bool within(double err, double value, const QuadratureSpec& spec) {
    return err <= spec.target_rel_tol * std::abs(value) + spec.abs_floor;
}

} // namespace

const Rule& gauss_jacobi(int n, double alpha, double beta) {
    require(n >= 1, ErrorKind::domain, "gauss_jacobi: need at least one node");
    require(alpha > -1.0 && beta > -1.0, ErrorKind::domain, "gauss_jacobi: exponents must exceed -1");
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::unique_ptr<Rule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(n, alpha, beta);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto r = std::make_unique<Rule>(golub_welsch(n, alpha, beta));
    const Rule& ref = *r;
    cache.emplace(key, std::move(r));
    return ref;
}

void to_json(nlohmann::json& j, const QuadratureSpec& s) {
    j = nlohmann::json{
        {"spatial",
         {{"panel_order", s.spatial.panel_order},
          {"grading", s.spatial.grading},
          {"far", s.spatial.far},
          {"max_panel", s.spatial.max_panel},
          {"tail_order", s.spatial.tail_order},
          {"angular", s.spatial.angular}}},
        {"time", {{"nodes", s.time.nodes}}},
        {"pv",
         {{"eps0", s.pv.eps0},
          {"levels", s.pv.levels},
          {"far", s.pv.far},
          {"max_panel", s.pv.max_panel},
          {"panel_order", s.pv.panel_order},
          {"tail_order", s.pv.tail_order},
          {"tol", s.pv.tol},
          {"tail", s.pv.tail}}},
        {"target_rel_tol", s.target_rel_tol},
        {"abs_floor", s.abs_floor},
        {"max_refinements", s.max_refinements}};
}

void from_json(const nlohmann::json& j, QuadratureSpec& s) {
    if (j.contains("spatial")) {
        const auto& p = j.at("spatial");
        s.spatial.panel_order = p.value("panel_order", s.spatial.panel_order);
        s.spatial.grading = p.value("grading", s.spatial.grading);
        s.spatial.far = p.value("far", s.spatial.far);
        s.spatial.max_panel = p.value("max_panel", s.spatial.max_panel);
        s.spatial.tail_order = p.value("tail_order", s.spatial.tail_order);
        s.spatial.angular = p.value("angular", s.spatial.angular);
    }
    if (j.contains("time")) s.time.nodes = j.at("time").value("nodes", s.time.nodes);
    if (j.contains("pv")) {
        const auto& p = j.at("pv");
        s.pv.eps0 = p.value("eps0", s.pv.eps0);
        s.pv.levels = p.value("levels", s.pv.levels);
        s.pv.far = p.value("far", s.pv.far);
        s.pv.max_panel = p.value("max_panel", s.pv.max_panel);
        s.pv.panel_order = p.value("panel_order", s.pv.panel_order);
        s.pv.tail_order = p.value("tail_order", s.pv.tail_order);
        s.pv.tol = p.value("tol", s.pv.tol);
        s.pv.tail = p.value("tail", s.pv.tail);
    }
    s.target_rel_tol = j.value("target_rel_tol", s.target_rel_tol);
    s.abs_floor = j.value("abs_floor", s.abs_floor);
    s.max_refinements = j.value("max_refinements", s.max_refinements);
    require(s.target_rel_tol > 0.0, ErrorKind::config, "quadrature.target_rel_tol must be positive");
    require(s.max_refinements >= 1, ErrorKind::config, "quadrature.max_refinements must be at least 1");
    require(s.spatial.panel_order >= 1 && s.spatial.tail_order >= 1, ErrorKind::config,
            "quadrature.spatial orders must be positive");
    require(s.spatial.grading > 1.0, ErrorKind::config, "quadrature.spatial.grading must exceed 1");
    require(s.time.nodes >= 1, ErrorKind::config, "quadrature.time.nodes must be positive");
    require(s.pv.levels >= 2, ErrorKind::config, "quadrature.pv.levels must be at least 2");
    require(s.pv.tail == "mapped" || s.pv.tail == "average", ErrorKind::config,
            "quadrature.pv.tail must be \"mapped\" or \"average\"");
}

void line_rule(const LineHints& hints, const SpatialRule& rule, int level, std::vector<double>& nodes,
               std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    Edges ed = graded_edges(hints, rule);
    const double cap = std::max(rule.max_panel, ed.wmax);
    panels_between(ed.e, cap, rule, level, nodes, weights);
    const double lo = ed.e.front();
    const double hi = ed.e.back();
    double near_lo = hi, near_hi = lo;
    if (hints.centers.empty()) {
        near_lo = near_hi = 0.0;
    } else {
        for (const auto& c : hints.centers) {
            near_lo = std::min(near_lo, c.pos);
            near_hi = std::max(near_hi, c.pos);
        }
    }
    const int tail = rule.tail_order << level;
    add_tail(hi, +1.0, std::max(hi - near_hi, ed.wmax), tail, nodes, weights);
    add_tail(lo, -1.0, std::max(near_lo - lo, ed.wmax), tail, nodes, weights);
}

void interval_rule(double lo, double hi, const LineHints& hints, const SpatialRule& rule, int level,
                   std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    require(lo < hi, ErrorKind::domain, "interval_rule: empty interval");
    Edges ed = graded_edges(hints, rule);
    std::vector<double> e{lo};
    for (double v : ed.e)
        if (v > lo && v < hi) e.push_back(v);
    e.push_back(hi);
    panels_between(e, std::max(rule.max_panel, ed.wmax), rule, level, nodes, weights);
}

QuadResult integrate_line(const Fn1& f, const LineHints& hints, const QuadratureSpec& spec) {
    QuadResult res;
    std::vector<double> z, w;
    double prev = 0.0;
    for (int level = 0; level <= spec.max_refinements; ++level) {
        line_rule(hints, spec.spatial, level, z, w);
        double acc = 0.0;
        for (size_t i = 0; i < z.size(); ++i) acc += w[i] * f(z[i]);
        res.value = acc;
        res.refinements_used = level;
        if (level > 0) {
            res.err_estimate = std::abs(acc - prev);
            if (within(res.err_estimate, acc, spec)) {
                res.converged = true;
                return res;
            }
        }
        prev = acc;
    }
    return res;
}

namespace {

// Radial nodes on [0, inf) graded from `width`, in the style of line_rule.
void radial_rule(double width, const SpatialRule& rule, int level, std::vector<double>& r, std::vector<double>& w) {
    r.clear();
    w.clear();
    std::vector<double> e{0.0};
    const double reach = std::max(rule.far, 8.0 * width);
    for (double d = width; d < reach; d *= rule.grading) e.push_back(d);
    e.push_back(reach);
    panels_between(e, std::max(rule.max_panel, width), rule, level, r, w);
    add_tail(reach, +1.0, reach, rule.tail_order << level, r, w);
}

struct Direction {
    std::vector<double> u;
    double w;
};

std::vector<Direction> sphere_rule(int dim, int angular) {
    std::vector<Direction> out;
    const double pi = std::numbers::pi;
    if (dim == 2) {
        for (int i = 0; i < angular; ++i) {
            const double th = 2.0 * pi * (i + 0.5) / angular;
            out.push_back({{std::cos(th), std::sin(th)}, 2.0 * pi / angular});
        }
    } else if (dim == 3) {
        const int nu = std::max(2, angular / 2);
        const Rule& g = gauss_legendre(nu);
        for (int a = 0; a < nu; ++a) {
            const double ct = g.x[a];
            const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
            for (int i = 0; i < angular; ++i) {
                const double ph = 2.0 * pi * (i + 0.5) / angular;
                out.push_back({{st * std::cos(ph), st * std::sin(ph), ct}, g.w[a] * 2.0 * pi / angular});
            }
        }
    } else {
        fail(ErrorKind::domain, "integrate_space: dimensions above 3 are not supported");
    }
    return out;
}

} // namespace

QuadResult integrate_space(const FnD& f, int dim, const std::vector<SpaceCenter>& centers,
                           const QuadratureSpec& spec) {
    require(dim >= 1, ErrorKind::domain, "integrate_space: dim must be positive");
    require(!centers.empty(), ErrorKind::domain, "integrate_space: at least one center is needed");
    for (const auto& c : centers)
        require(static_cast<int>(c.pos.size()) == dim, ErrorKind::domain, "integrate_space: center dimension mismatch");
    if (dim == 1) {
        LineHints h;
        for (const auto& c : centers) h.centers.push_back({c.pos[0], c.width});
        return integrate_line([&](double z) { return f(std::span<const double>(&z, 1)); }, h, spec);
    }
    const size_t nc = centers.size();
    auto share = [&](std::span<const double> z, size_t i) {
        if (nc == 1) return 1.0;
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < nc; ++k) {
            double a = centers[k].width * centers[k].width;
            for (int j = 0; j < dim; ++j) a += (z[j] - centers[k].pos[j]) * (z[j] - centers[k].pos[j]);
            den += 1.0 / a;
            if (k == i) num = 1.0 / a;
        }
        return num / den;
    };
    QuadResult res;
    double prev = 0.0;
    std::vector<double> r, w, pt(dim);
    for (int level = 0; level <= spec.max_refinements; ++level) {
        const auto dirs = sphere_rule(dim, spec.spatial.angular << level);
        double acc = 0.0;
        for (size_t ci = 0; ci < nc; ++ci) {
            const auto& c = centers[ci];
            radial_rule(c.width, spec.spatial, level, r, w);
            for (const auto& d : dirs) {
                double line = 0.0;
                for (size_t i = 0; i < r.size(); ++i) {
                    for (int k = 0; k < dim; ++k) pt[k] = c.pos[k] + r[i] * d.u[k];
                    line += w[i] * std::pow(r[i], dim - 1) * f(pt) * share(pt, ci);
                }
                acc += d.w * line;
            }
        }
        res.value = acc;
        res.refinements_used = level;
        if (level > 0) {
            res.err_estimate = std::abs(acc - prev);
            if (within(res.err_estimate, acc, spec)) {
                res.converged = true;
                return res;
            }
        }
        prev = acc;
    }
    return res;
}

QuadResult integrate_time_singular(const Fn1& g, double s, double t, double left_exp, double right_exp,
                                   const QuadratureSpec& spec) {
    require(s < t, ErrorKind::domain, "integrate_time_singular: need s < t");
    require(left_exp > -1.0 && right_exp > -1.0, ErrorKind::domain,
            "integrate_time_singular: endpoint exponents must exceed -1");
    QuadResult res;
    double prev = 0.0;
    const double half = 0.5 * (t - s);
    const double scale = std::pow(half, left_exp + right_exp + 1.0);
    for (int level = 0; level <= spec.max_refinements; ++level) {
        const Rule& rule = gauss_jacobi(spec.time.nodes << level, right_exp, left_exp);
        double acc = 0.0;
        for (size_t i = 0; i < rule.x.size(); ++i) acc += rule.w[i] * g(s + half * (1.0 + rule.x[i]));
        acc *= scale;
        res.value = acc;
        res.refinements_used = level;
        if (level > 0) {
            res.err_estimate = std::abs(acc - prev);
            if (within(res.err_estimate, acc, spec)) {
                res.converged = true;
                return res;
            }
        }
        prev = acc;
    }
    return res;
}

void split_time_rule(double s, double t, double left_exp, double right_exp, int n_per_half,
                     std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    const double m = 0.5 * (s + t);
    const double h = 0.5 * (m - s);
    const Rule& L = gauss_jacobi(n_per_half, 0.0, left_exp);
    const double cl = std::pow(h, left_exp + 1.0);
    for (size_t i = 0; i < L.x.size(); ++i) {
        const double u = h * (1.0 + L.x[i]);
        nodes.push_back(s + u);
        weights.push_back(cl * L.w[i] / std::pow(u, left_exp));
    }
    const Rule& R = gauss_jacobi(n_per_half, right_exp, 0.0);
    const double cr = std::pow(h, right_exp + 1.0);
    for (size_t i = 0; i < R.x.size(); ++i) {
        const double u = h * (1.0 - R.x[i]);
        nodes.push_back(t - u);
        weights.push_back(cr * R.w[i] / std::pow(u, right_exp));
    }
}

QuadResult convolve_spacetime(const ConvolutionProblem& prob, const QuadratureSpec& spec) {
    require(prob.s < prob.t, ErrorKind::domain, "convolve_spacetime: need s < t");
    std::map<double, QuadResult> memo;
    auto inner = [&](double r) -> const QuadResult& {
        auto it = memo.find(r);
        if (it != memo.end()) return it->second;
        QuadResult q = integrate_line([&](double z) { return prob.integrand(r, z); }, prob.hints(r), spec);
        return memo.emplace(r, q).first->second;
    };
    QuadResult res;
    double prev = 0.0;
    std::vector<double> nodes, weights;
    for (int level = 0; level <= spec.max_refinements; ++level) {
        split_time_rule(prob.s, prob.t, prob.left_exp, prob.right_exp, spec.time.nodes << level, nodes, weights);
        double acc = 0.0, inner_err = 0.0;
        bool inner_ok = true;
        for (size_t i = 0; i < nodes.size(); ++i) {
            const QuadResult& q = inner(nodes[i]);
            acc += weights[i] * q.value;
            inner_err += std::abs(weights[i]) * q.err_estimate;
            inner_ok = inner_ok && q.converged;
        }
        res.value = acc;
        res.refinements_used = level;
        if (level > 0) {
            res.err_estimate = std::abs(acc - prev) + inner_err;
            if (inner_ok && within(res.err_estimate, acc, spec)) {
                res.converged = true;
                return res;
            }
        }
        prev = acc;
    }
    return res;
}

} // namespace fhk::quad
