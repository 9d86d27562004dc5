#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <json.hpp>

#include "fhk/check_report.hpp"
#include "fhk/fields.hpp"
#include "fhk/grid.hpp"
#include "fhk/quadrature.hpp"

namespace fhk::levi {

struct SeriesSpec {
    double horizon = 1.0;        // largest t - s represented
    double sigma_min_rel = 1e-4; // first grid row, relative to the horizon
    double row_ratio = 1.5;
    double xi_step = 0.25;
    double extent = 64.0;        // |x - y| covered by grid nodes; beyond it q decays as |x - y|^-2
    int time_nodes = 12;         // per half of the split time rule
    int n_max = 12;
    double tol = 1e-4;           // target for the truncation bound
    double tol_horizon = 0.5;    // t - s at which the truncation bound is evaluated
    double beta_eff = 0.0;       // 0: min(declared beta, 1/4)
    double ledger_sigma_rel = 0.01;
    double ledger_u_max = 10.0;
    double lattice_step = 0.5;   // anchor spacing for kernels needed at arbitrary y
    double lattice_extent = 12.0;
    double lattice_far_step = 2.0; // coarser anchors out to lattice_far_extent
    double lattice_far_extent = 48.0;
    int threads = 1;
};

void to_json(nlohmann::json& j, const SeriesSpec& s);
void from_json(const nlohmann::json& j, SeriesSpec& s);

/// Per-term sup norms against the Gamma-ratio profile
/// ν_n = sup |q_n| / (ϱ⁰_{(n+1)β} + ϱ^β_{nβ}), fitted as log ν_n = log A + n log(CΓ(β)) - log Γ((n+1)β).
struct Ledger {
    double beta = 0.25;
    std::vector<double> nu;
    std::vector<double> fit;
    double log_A = 0.0;
    double C = 0.0;
    double fit_residual = 0.0;     // max |ν_n / fit_n - 1|
    double truncation_bound = 0.0; // Σ_{n>N} fit_n (τ^{(n+1)β} + τ^{nβ}) at tol_horizon
    double ie_residual = 0.0;      // sup (u²+σ²)|q - q₀ - q₀∗q| over the ledger region
    int N = 0;

    nlohmann::json to_json() const;
};

/// Shared, immutable construction context.
struct Model {
    fields::Coefficients co;
    SeriesSpec series;
    quad::QuadratureSpec quad;
    Grid grid;
    double beta_eff = 0.25;
    double e_scale = -1.0; // self-similar exponent of q near the diagonal

    Model(fields::Coefficients co, SeriesSpec series, quad::QuadratureSpec quad);
};

/// Series {q_n(t,x; s,y)} for one anchor (s, y), d = 1, tabulated on the grid in (t - s, x - y).
class AnchorSeries {
public:
    AnchorSeries(std::shared_ptr<const Model> model, double s, double y);

    double s() const { return s_; }
    double y() const { return y_; }
    bool trivial() const { return trivial_; }
    int terms() const { return static_cast<int>(q_.size()); }
    const std::vector<double>& term(int n) const { return q_[n]; }
    const std::vector<double>& sum() const { return sum_; }
    const Ledger& ledger() const { return ledger_; }
    const Grid& grid() const { return model_->grid; }

    /// Interpolated q (or a single term) at t - s = tau, x.
    double q(double tau, double x) const;
    double q_term(int n, double tau, double x) const;
    /// q₀ evaluated directly, without the grid.
    double q0_direct(double tau, double x) const;

    /// Applies the recursion operator to a grid function: (K f)(τ,x) = ∫∫ q₀(τ,x;σ,z) f(σ,z) dz dσ.
    std::vector<double> apply(const std::vector<double>& f) const;

    double p0(double tau, double x) const;
    double phi(double tau, double x) const;
    /// Inner integral at one intermediate time: ∫ p₀(t,x; s+σ,z) q(s+σ,z; s,y) dz, 0 < σ < τ.
    double phi_slice(double tau, double x, double sigma) const;
    double p(double tau, double x) const { return p0(tau, x) + phi(tau, x); }
    double phi_grad(double tau, double x) const;
    double phi_fraclap(double tau, double x) const;
    double grad_x(double tau, double x) const;
    double fraclap_x(double tau, double x) const;

    /// φ at every grid node (computed once).
    const std::vector<double>& phi_table() const;

private:
    std::shared_ptr<const Model> model_;
    double s_, y_;
    bool trivial_ = false;
    std::vector<std::vector<double>> q_;
    std::vector<double> sum_;
    // With exact_q0_ the grid carries only sum_ - q₀; q₀ itself is evaluated where needed, since its
    // features at a(x) - a(y) far from the diagonal are finer than the grid there.
    bool exact_q0_ = false;
    std::vector<double> rest_;
    Ledger ledger_;
    mutable std::vector<double> phi_table_;
    mutable std::once_flag phi_once_;

    struct Coef {
        double a, b;
    };
    Coef at(double t, double x) const;
    double first_factor(int kind, double t, double r, double x, double z, const Coef& cx) const;
    template <class Sink>
    void sweep(double tau, double x, double lo, double hi, double left, double right, int kind, Sink&& sink) const;
    double phi_part(double tau, double x, int kind) const;
    void build();
    void fit_ledger(int n_terms);
};

/// Kernel p_{a,b}(t,x;s,y) = p₀ + φ with a cache of anchors. Time-homogeneous coefficients use s = 0 anchors.
class Kernel {
public:
    Kernel(const fields::Coefficients& co, const SeriesSpec& series, const quad::QuadratureSpec& quad);

    std::shared_ptr<const Model> model() const { return model_; }
    const fields::Coefficients& coefficients() const { return model_->co; }
    bool translation_invariant() const { return model_->co.constant_ab(); }

    std::shared_ptr<const AnchorSeries> anchor(double s, double y) const;

    double p0(double t, double x, double s, double y) const;
    double p(double t, double x, double s, double y) const;
    double phi(double t, double x, double s, double y) const;
    double grad_x(double t, double x, double s, double y) const;
    double fraclap_x(double t, double x, double s, double y) const;
    /// p with φ interpolated in y across lattice anchors at fixed x - y. Beyond the outermost anchor φ is
    /// continued from it at fixed x with the decay ((y_e - x)² + τ²) / ((y - x)² + τ²).
    double p_lattice(double t, double x, double s, double y) const;
    /// φ from the lattice anchors' tables (cheap, lower accuracy).
    double phi_tabulated(double t, double x, double s, double y) const;

    size_t anchors_built() const;

private:
    std::shared_ptr<const Model> model_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<double, double>, std::shared_ptr<const AnchorSeries>> cache_;

    double canonical_s(double s) const;
    std::vector<double> lattice_; // anchor positions, ascending

    template <class F>
    double lattice_combine(double t, double x, double s, double y, F&& f) const;
};

} // namespace fhk::levi
