#include "fhk/mc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include <Eigen/Dense>

#include "fhk/error.hpp"
#include "fhk/levi.hpp"
#include "fhk/poisson.hpp"

namespace fhk::mc {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "ensemble files are written in host byte order");

void to_json(json& j, const EnsembleSpec& s) {
    j = json{{"n_paths", s.n_paths}, {"step", s.step},       {"horizon", s.horizon}, {"start", s.start},
             {"seed", s.seed},       {"batches", s.batches}, {"threads", s.threads}};
}

void from_json(const json& j, EnsembleSpec& s) {
    s.n_paths = j.value("n_paths", s.n_paths);
    s.step = j.value("step", s.step);
    s.horizon = j.value("horizon", s.horizon);
    s.start = j.value("start", s.start);
    s.seed = j.value("seed", s.seed);
    s.batches = j.value("batches", s.batches);
    s.threads = j.value("threads", s.threads);
}

void to_json(json& j, const KdeSpec& s) {
    j = json{{"bandwidth", s.bandwidth}, {"bandwidth_scale", s.bandwidth_scale}, {"bootstrap", s.bootstrap},
             {"seed", s.seed},           {"min_local", s.min_local}};
}

void from_json(const json& j, KdeSpec& s) {
    s.bandwidth = j.value("bandwidth", s.bandwidth);
    s.bandwidth_scale = j.value("bandwidth_scale", s.bandwidth_scale);
    s.bootstrap = j.value("bootstrap", s.bootstrap);
    s.seed = j.value("seed", s.seed);
    s.min_local = j.value("min_local", s.min_local);
}

int PathEnsemble::batch_of(std::int64_t i) const {
    const std::int64_t n = size(), B = spec.batches;
    // inverse of the partition [b n / B, (b+1) n / B)
    std::int64_t b = (i * B) / n;
    while (b + 1 < B && (b + 1) * n / B <= i) ++b;
    while (b > 0 && b * n / B > i) --b;
    return static_cast<int>(b);
}

namespace {

// The distribution object caches the second variate of each polar pair, so it lives as long as the stream.
void cauchy_increment(double h, Rng& rng, std::normal_distribution<double>& N, std::span<double> out) {
    for (auto& v : out) v = N(rng);
    double den = 0.0;
    while (den == 0.0) den = std::abs(N(rng));
    for (auto& v : out) v *= h / den;
}

} // namespace

void sample_cauchy_increment(double h, Rng& rng, std::span<double> out) {
    std::normal_distribution<double> N(0.0, 1.0);
    cauchy_increment(h, rng, N, out);
}

std::vector<double> sample_cauchy_increment(int d, double h, Rng& rng) {
    require(d >= 1 && h > 0.0, ErrorKind::domain, "sample_cauchy_increment: need d >= 1 and h > 0");
    std::vector<double> v(d);
    sample_cauchy_increment(h, rng, v);
    return v;
}

namespace {

void validate(const fields::Coefficients& co, const EnsembleSpec& spec) {
    require(co.time_homogeneous(), ErrorKind::config, "the Monte Carlo oracle needs time-homogeneous coefficients");
    require(spec.n_paths >= 1 && spec.batches >= 1 && spec.batches <= spec.n_paths, ErrorKind::config,
            "mc: need 1 <= batches <= n_paths");
    require(spec.horizon > 0.0 && spec.step > 0.0, ErrorKind::config, "mc: step and horizon must be positive");
    require(spec.step <= 1e-2 * spec.horizon * (1.0 + 1e-12), ErrorKind::config,
            "mc: step must not exceed 1e-2 * horizon");
    require(static_cast<int>(spec.start.size()) == co.dim, ErrorKind::config, "mc: start has the wrong dimension");
    const double n = spec.horizon / spec.step;
    require(std::abs(n - std::round(n)) < 1e-9 * n, ErrorKind::config, "mc: horizon must be a multiple of step");
}

Rng batch_rng(std::uint64_t seed, int b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b), 0x6d63u};
    return Rng(seq);
}

template <class Body>
void for_batches(const EnsembleSpec& spec, Body&& body) {
    const int T = std::max(1, std::min(spec.threads, spec.batches));
    if (T == 1) {
        for (int b = 0; b < spec.batches; ++b) body(b);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < T; ++w)
        pool.emplace_back([&, w] {
            for (int b = w; b < spec.batches; b += T) body(b);
        });
    for (auto& t : pool) t.join();
}

PathEnsemble empty_like(const fields::Coefficients& co, const EnsembleSpec& spec) {
    PathEnsemble e;
    e.spec = spec;
    e.dim = co.dim;
    e.endpoints.assign(static_cast<size_t>(spec.n_paths) * co.dim, 0.0);
    e.weights.assign(static_cast<size_t>(spec.n_paths), 1.0);
    return e;
}

// One Euler step of length h with the Cauchy increment dc (unit scale already multiplied by h).
inline void euler_step(const fields::Coefficients& co, std::span<double> x, std::span<const double> dc, double h,
                       std::span<double> bx, double& logw) {
    const double ax = co.a(0.0, x);
    co.eval_b(0.0, x, bx);
    if (!co.c.is_zero()) logw += co.c(0.0, x) * h;
    for (size_t i = 0; i < x.size(); ++i) x[i] += bx[i] * h + ax * dc[i];
}

} // namespace

PathEnsemble euler_paths(const fields::Coefficients& co, const EnsembleSpec& spec) {
    validate(co, spec);
    PathEnsemble e = empty_like(co, spec);
    const int d = co.dim;
    const auto steps = static_cast<std::int64_t>(std::llround(spec.horizon / spec.step));
    const double h = spec.step;
    for_batches(spec, [&](int b) {
        Rng rng = batch_rng(spec.seed, b);
        std::normal_distribution<double> N(0.0, 1.0);
        std::vector<double> x(d), dc(d), bx(d);
        const std::int64_t lo = b * spec.n_paths / spec.batches, hi = (b + 1) * spec.n_paths / spec.batches;
        for (std::int64_t i = lo; i < hi; ++i) {
            std::copy(spec.start.begin(), spec.start.end(), x.begin());
            double logw = 0.0;
            for (std::int64_t k = 0; k < steps; ++k) {
                cauchy_increment(h, rng, N, dc);
                euler_step(co, x, dc, h, bx, logw);
            }
            std::copy(x.begin(), x.end(), e.endpoints.begin() + i * d);
            e.weights[i] = std::exp(logw);
        }
    });
    return e;
}

CoupledPair coupled_euler_paths(const fields::Coefficients& co, const EnsembleSpec& spec) {
    validate(co, spec);
    CoupledPair out{empty_like(co, spec), empty_like(co, spec)};
    out.fine.spec.step = 0.5 * spec.step;
    const int d = co.dim;
    const auto steps = static_cast<std::int64_t>(std::llround(spec.horizon / spec.step));
    const double h = spec.step, hf = 0.5 * spec.step;
    for_batches(spec, [&](int b) {
        Rng rng = batch_rng(spec.seed, b);
        std::normal_distribution<double> N(0.0, 1.0);
        std::vector<double> xf(d), xc(d), d1(d), d2(d), dc(d), bx(d);
        const std::int64_t lo = b * spec.n_paths / spec.batches, hi = (b + 1) * spec.n_paths / spec.batches;
        for (std::int64_t i = lo; i < hi; ++i) {
            std::copy(spec.start.begin(), spec.start.end(), xf.begin());
            std::copy(spec.start.begin(), spec.start.end(), xc.begin());
            double lf = 0.0, lc = 0.0;
            for (std::int64_t k = 0; k < steps; ++k) {
                cauchy_increment(hf, rng, N, d1);
                cauchy_increment(hf, rng, N, d2);
                euler_step(co, xf, d1, hf, bx, lf);
                euler_step(co, xf, d2, hf, bx, lf);
                for (int j = 0; j < d; ++j) dc[j] = d1[j] + d2[j];
                euler_step(co, xc, dc, h, bx, lc);
            }
            std::copy(xf.begin(), xf.end(), out.fine.endpoints.begin() + i * d);
            std::copy(xc.begin(), xc.end(), out.coarse.endpoints.begin() + i * d);
            out.fine.weights[i] = std::exp(lf);
            out.coarse.weights[i] = std::exp(lc);
        }
    });
    return out;
}

void save_ensemble(const PathEnsemble& e, const std::string& path) {
    {
        std::ofstream f(path, std::ios::binary);
        require(static_cast<bool>(f), ErrorKind::config, "cannot write " + path);
        f.write(reinterpret_cast<const char*>(e.endpoints.data()),
                static_cast<std::streamsize>(e.endpoints.size() * sizeof(double)));
        f.write(reinterpret_cast<const char*>(e.weights.data()),
                static_cast<std::streamsize>(e.weights.size() * sizeof(double)));
    }
    json side = {{"format", "fhk-ensemble"},
                 {"dtype", "float64"},
                 {"byte_order", "little"},
                 {"dim", e.dim},
                 {"n_paths", e.size()},
                 {"columns", json::array({json{{"name", "endpoint"}, {"count", e.endpoints.size()}},
                                          json{{"name", "weight"}, {"count", e.weights.size()}}})},
                 {"spec", e.spec}};
    std::ofstream s(path + ".json");
    require(static_cast<bool>(s), ErrorKind::config, "cannot write " + path + ".json");
    s << side.dump(2) << "\n";
}

PathEnsemble load_ensemble(const std::string& path) {
    std::ifstream s(path + ".json");
    require(static_cast<bool>(s), ErrorKind::config, "cannot read " + path + ".json");
    const json side = json::parse(s);
    PathEnsemble e;
    e.spec = side.at("spec").get<EnsembleSpec>();
    e.dim = side.at("dim").get<int>();
    const auto n = side.at("n_paths").get<std::int64_t>();
    e.endpoints.resize(static_cast<size_t>(n) * e.dim);
    e.weights.resize(static_cast<size_t>(n));
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::config, "cannot read " + path);
    f.read(reinterpret_cast<char*>(e.endpoints.data()),
           static_cast<std::streamsize>(e.endpoints.size() * sizeof(double)));
    f.read(reinterpret_cast<char*>(e.weights.data()), static_cast<std::streamsize>(e.weights.size() * sizeof(double)));
    require(static_cast<bool>(f), ErrorKind::data, path + " is shorter than its sidecar declares");
    return e;
}

double silverman_iqr(const PathEnsemble& e) {
    const std::int64_t n = e.size();
    std::vector<double> v(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) v[i] = e.endpoints[i * e.dim];
    auto q = [&](double p) {
        const auto k = static_cast<std::ptrdiff_t>(std::floor(p * (n - 1)));
        std::nth_element(v.begin(), v.begin() + k, v.end());
        return v[k];
    };
    const double iqr = q(0.75) - q(0.25);
    require(iqr > 0.0, ErrorKind::data, "silverman_iqr: degenerate sample");
    return 0.9 * (iqr / 1.34) * std::pow(static_cast<double>(n), -0.2);
}

KdeEstimate kde(const PathEnsemble& e, const std::vector<double>& points, const KdeSpec& spec) {
    KdeEstimate out;
    out.bandwidth = (spec.bandwidth > 0.0 ? spec.bandwidth : silverman_iqr(e)) * spec.bandwidth_scale;
    out.points = points;
    const double h = out.bandwidth, norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    const size_t m = points.size();
    const int B = e.spec.batches;
    std::vector<double> sums(static_cast<size_t>(B) * m, 0.0);
    std::vector<std::int64_t> counts(B, 0);
    out.local.assign(m, 0);
    for (std::int64_t i = 0; i < e.size(); ++i) {
        const int b = e.batch_of(i);
        ++counts[b];
        const double x = e.endpoints[i * e.dim], w = e.weights[i];
        for (size_t j = 0; j < m; ++j) {
            const double z = (points[j] - x) / h;
            if (std::abs(z) < 1.0) ++out.local[j];
            if (std::abs(z) < 9.0) sums[b * m + j] += w * std::exp(-0.5 * z * z);
        }
    }
    auto estimate = [&](const std::vector<int>& pick, std::vector<double>& val) {
        val.assign(m, 0.0);
        std::int64_t n = 0;
        for (int b : pick) {
            n += counts[b];
            for (size_t j = 0; j < m; ++j) val[j] += sums[b * m + j];
        }
        for (auto& v : val) v *= norm / static_cast<double>(n);
    };
    std::vector<int> all(B);
    for (int b = 0; b < B; ++b) all[b] = b;
    estimate(all, out.value);
    Rng rng(spec.seed);
    std::uniform_int_distribution<int> U(0, B - 1);
    std::vector<double> s1(m, 0.0), s2(m, 0.0), val;
    std::vector<int> pick(B);
    for (int r = 0; r < spec.bootstrap; ++r) {
        for (auto& p : pick) p = U(rng);
        estimate(pick, val);
        for (size_t j = 0; j < m; ++j) {
            s1[j] += val[j];
            s2[j] += val[j] * val[j];
        }
    }
    out.se.resize(m);
    const double R = spec.bootstrap;
    for (size_t j = 0; j < m; ++j)
        out.se[j] = R > 1 ? std::sqrt(std::max(0.0, (s2[j] - s1[j] * s1[j] / R) / (R - 1.0))) : 0.0;
    return out;
}

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    require(n >= 1, ErrorKind::domain, "gauss_hermite: need n >= 1");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes.resize(n);
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        nodes[k] = es.eigenvalues()(k);
        weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    }
}

SmoothedDensity parametrix_reference(const levi::Kernel& K, double t, double x) {
    auto gh = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
    gauss_hermite(32, gh->first, gh->second);
    return [&K, t, x, gh](double y, double h) {
        double v = 0.0;
        for (size_t i = 0; i < gh->first.size(); ++i) v += gh->second[i] * K.p0(t, x, 0.0, y - h * gh->first[i]);
        return v + K.phi(t, x, 0.0, y);
    };
}

SmoothedDensity constant_reference(double a, double b, double c, double t, double x) {
    auto gh = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
    gauss_hermite(32, gh->first, gh->second);
    return [=](double y, double h) {
        double v = 0.0;
        for (size_t i = 0; i < gh->first.size(); ++i)
            v += gh->second[i] * poisson::rho1(a * t, y - h * gh->first[i] - x - b * t);
        return std::exp(c * t) * v;
    };
}

CheckReport kde_compare(const PathEnsemble& e, const SmoothedDensity& ref, const std::vector<double>& points,
                        const KdeSpec& spec, double z_limit, int min_pass) {
    CheckReport r;
    r.check_name = "kde_compare";
    r.property = "feynman-kac-density";
    r.params = {{"kde", spec}, {"z_limit", z_limit}, {"min_pass", min_pass}, {"ensemble", e.spec}};
    const auto est = kde(e, points, spec);
    int agree = 0, kept = 0;
    double zmax = 0.0;
    json rows = json::array(), excluded = json::array();
    for (size_t j = 0; j < points.size(); ++j) {
        if (est.local[j] < spec.min_local) {
            excluded.push_back({{"y", points[j]}, {"local", est.local[j]}});
            continue;
        }
        ++kept;
        const double pr = ref(points[j], est.bandwidth);
        const double z = (est.value[j] - pr) / est.se[j];
        zmax = std::max(zmax, std::abs(z));
        if (std::abs(z) <= z_limit) ++agree;
        rows.push_back({points[j], est.value[j], est.se[j], pr, z});
    }
    json sens = json::array();
    for (double f : {0.5, 1.5}) {
        KdeSpec s2 = spec;
        s2.bandwidth = est.bandwidth * f;
        s2.bandwidth_scale = 1.0;
        const auto e2 = kde(e, points, s2);
        int ok = 0;
        for (size_t j = 0; j < points.size(); ++j)
            if (est.local[j] >= spec.min_local &&
                std::abs(e2.value[j] - ref(points[j], e2.bandwidth)) <= z_limit * e2.se[j])
                ++ok;
        sens.push_back({{"factor", f}, {"bandwidth", e2.bandwidth}, {"agree", ok}});
    }
    r.params["bandwidth"] = est.bandwidth;
    r.params["rows"] = rows;
    r.params["excluded"] = excluded;
    r.params["bandwidth_sensitivity"] = sens;
    r.lhs = agree;
    r.rhs = min_pass;
    r.fitted_constant = zmax;
    r.status = agree >= min_pass ? Status::pass : Status::fail;
    r.notes = "rows are (y, kde, bootstrap se, smoothed reference, z); lhs counts points with |z| <= z_limit";
    if (!excluded.empty()) r.notes += "; some points excluded for low local sample counts";
    return r;
}

CheckReport step_halving_check(const CoupledPair& pair, const std::vector<double>& points, const KdeSpec& spec,
                               double limit) {
    CheckReport r;
    r.check_name = "step_halving";
    r.property = "euler-step-convergence";
    KdeSpec s = spec;
    s.bandwidth = (spec.bandwidth > 0.0 ? spec.bandwidth : silverman_iqr(pair.coarse)) * spec.bandwidth_scale;
    s.bandwidth_scale = 1.0;
    const auto c = kde(pair.coarse, points, s);
    const auto f = kde(pair.fine, points, s);
    double worst = 0.0;
    json rows = json::array();
    for (size_t j = 0; j < points.size(); ++j) {
        const double shift = std::abs(f.value[j] - c.value[j]) / c.se[j];
        worst = std::max(worst, shift);
        rows.push_back({points[j], c.value[j], f.value[j], c.se[j], shift});
    }
    r.params = {{"coarse_step", pair.coarse.spec.step}, {"bandwidth", s.bandwidth}, {"rows", rows}, {"limit", limit}};
    r.lhs = worst;
    r.rhs = limit;
    r.fitted_constant = worst;
    r.status = worst < limit ? Status::pass : Status::fail;
    r.notes = "rows are (y, kde coarse, kde fine, se coarse, shift in se)";
    return r;
}

CheckReport tail_slope_check(const PathEnsemble& e, const std::vector<double>& radii, double tol) {
    CheckReport r;
    r.check_name = "heavy_tail_slope";
    r.property = "cauchy-tail-decay";
    std::vector<double> probs;
    for (double R : radii) {
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < e.size(); ++i) {
            double s = 0.0;
            for (int j = 0; j < e.dim; ++j) {
                const double v = e.endpoints[i * e.dim + j] - e.spec.start[j];
                s += v * v;
            }
            if (std::sqrt(s) > R) ++k;
        }
        probs.push_back(static_cast<double>(k) / static_cast<double>(e.size()));
    }
    const double slope = fields::loglog_slope(radii, probs);
    r.params = {{"radii", radii}, {"tail_probability", probs}, {"tol", tol}};
    r.lhs = slope;
    r.rhs = -1.0;
    r.fitted_constant = slope;
    r.status = std::abs(slope + 1.0) <= tol ? Status::pass : Status::fail;
    return r;
}

CheckReport mean_weight_check(const PathEnsemble& e, double c, double tol) {
    CheckReport r;
    r.check_name = "mean_weight";
    r.property = "feynman-kac-weight";
    double s = 0.0, lo = INFINITY;
    for (double w : e.weights) {
        s += w;
        lo = std::min(lo, w);
    }
    const double mean = s / static_cast<double>(e.size()), exact = std::exp(c * e.spec.horizon);
    r.params = {{"c", c}, {"mean", mean}, {"exact", exact}, {"min_weight", lo}, {"tol", tol}};
    r.lhs = std::abs(mean - exact) / exact;
    r.rhs = tol;
    r.fitted_constant = mean;
    r.status = r.lhs < tol && lo > 0.0 ? Status::pass : Status::fail;
    return r;
}

} // namespace fhk::mc
