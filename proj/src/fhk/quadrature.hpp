#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fhk::quad {

/// Nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1], via Golub–Welsch.
/// Rules are cached process-wide; the returned reference stays valid.
const Rule& gauss_jacobi(int n, double alpha, double beta);
inline const Rule& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

struct SpatialRule {
    int panel_order = 6;    // Gauss–Legendre points per panel
    double grading = 4.0;   // ratio between consecutive graded panel edges
    double far = 8.0;       // graded panels reach this far (in absolute units) past each center
    double max_panel = 1.0; // cap on a panel's length inside the graded region
    int tail_order = 16;    // points on each tan-mapped tail
    int angular = 32;       // angular resolution for d >= 2
};

struct TimeRule {
    int nodes = 16;
};

struct PvRule {
    double eps0 = 0.5;      // first truncation radius, relative to the function's scale
    int levels = 6;         // geometric ladder eps0, eps0/2, ...
    double far = 64.0;      // graded region end, relative to scale
    double max_panel = 0.5; // relative to scale
    int panel_order = 8;
    int tail_order = 32;
    double tol = 1e-6;      // acceptable disagreement between the last two extrapolants (relative)
    // Beyond far: "mapped" integrates D(h)/h² with a tan-mapped rule (f settles at infinity);
    // "average" replaces D by its mean over [far/2, far] (f bounded and oscillating).
    std::string tail = "mapped";
};

struct QuadratureSpec {
    SpatialRule spatial;
    TimeRule time;
    PvRule pv;
    double target_rel_tol = 1e-9;
    double abs_floor = 1e-14;
    int max_refinements = 4;
};

void to_json(nlohmann::json& j, const QuadratureSpec& s);
void from_json(const nlohmann::json& j, QuadratureSpec& s);

struct QuadResult {
    double value = 0.0;
    double err_estimate = 0.0;
    int refinements_used = 0;
    bool converged = false;
};

/// Peak of an integrand on the line: location and the length scale over which it varies.
struct Center {
    double pos;
    double width;
};

struct LineHints {
    std::vector<Center> centers;
    std::vector<double> breakpoints; // points where the integrand is not smooth
};

/// Composite rule on the real line: graded Gauss–Legendre panels around each center,
/// uniform capping of long panels, and tan-mapped tails. `level` subdivides every panel 2^level times.
void line_rule(const LineHints& hints, const SpatialRule& rule, int level, std::vector<double>& nodes,
               std::vector<double>& weights);

/// Same as line_rule but restricted to [lo, hi] (no tails).
void interval_rule(double lo, double hi, const LineHints& hints, const SpatialRule& rule, int level,
                   std::vector<double>& nodes, std::vector<double>& weights);

using Fn1 = std::function<double(double)>;
using FnD = std::function<double(std::span<const double>)>;

QuadResult integrate_line(const Fn1& f, const LineHints& hints, const QuadratureSpec& spec);

struct SpaceCenter {
    std::vector<double> pos;
    double width;
};

/// Integral over R^d. In d = 1 this is integrate_line with the centers as hints. In d >= 2 the
/// integrand is split by a partition of unity (weights 1/(|z-c_i|² + w_i²), normalized) and each
/// piece is integrated radially around its own center with a tan-mapped radial tail.
QuadResult integrate_space(const FnD& f, int dim, const std::vector<SpaceCenter>& centers,
                           const QuadratureSpec& spec);

/// ∫_s^t g(r) (r-s)^left_exp (t-r)^right_exp dr by Gauss–Jacobi with node doubling.
QuadResult integrate_time_singular(const Fn1& g, double s, double t, double left_exp, double right_exp,
                                   const QuadratureSpec& spec);

/// Nodes/weights on (s, t) for integrands behaving like (r-s)^left_exp near s and (t-r)^right_exp near t.
/// The interval is split at the midpoint; each half carries a one-sided Jacobi weight which is then
/// divided out, so that sum w_i f(r_i) approximates ∫ f dr directly.
void split_time_rule(double s, double t, double left_exp, double right_exp, int n_per_half,
                     std::vector<double>& nodes, std::vector<double>& weights);

/// Space-time convolution ∫_s^t dr ∫ dz k1(r, z) k2(r, z) in d = 1. Exponents describe the endpoint
/// behaviour of the inner integral as a function of r; centers(r) supply inner peak locations.
struct ConvolutionProblem {
    std::function<double(double r, double z)> integrand;
    std::function<LineHints(double r)> hints;
    double s = 0.0;
    double t = 1.0;
    double left_exp = 0.0;
    double right_exp = 0.0;
};
QuadResult convolve_spacetime(const ConvolutionProblem& prob, const QuadratureSpec& spec);

} // namespace fhk::quad
