#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <json.hpp>

#include "fhk/check_report.hpp"
#include "fhk/fields.hpp"
#include "fhk/grid.hpp"
#include "fhk/levi.hpp"
#include "fhk/quadrature.hpp"

namespace fhk::duhamel {

struct DuhamelSpec {
    double horizon = 1.0;
    double window = 0.0;    // 0: largest dyadic fraction of the horizon with Λℓ < 1/2
    double safety = 2.0;    // inflation of the observed Λ before choosing the window
    double tol = 1e-6;      // geometric tail target
    int n_max = 60;
    double sigma_min_rel = 1e-4;
    double row_ratio = 1.5;
    double xi_step = 0.25;
    double extent = 16.0;
    int time_nodes = 8;
    double ledger_sigma_rel = 0.01;
    double ledger_u_max = 10.0;
};

void to_json(nlohmann::json& j, const DuhamelSpec& s);
void from_json(const nlohmann::json& j, DuhamelSpec& s);

struct DuhamelLedger {
    std::vector<double> nu; // sup |Θ_n| / ϱ⁰₁ over the ledger region
    double ell_c1 = 0.0;    // ℓ^c_1(window)
    double lambda_fit = 0.0;
    double window = 0.0;
    double ratio = 0.0;     // lambda_fit · ell_c1
    double tail_bound = 0.0; // ratio^{N+1} / (1 - ratio)
    double residual = 0.0;  // sup |p - p_ab - p_ab∗(c p)| / (ϱ⁰₁ ν₀)
    int N = 0;
    int compositions = 0;   // doublings used to reach the horizon

    nlohmann::json to_json() const;
};

/// Full kernel p = Σ Θ_n for ℒ = a Δ^{1/2} + b ∂_x + c in d = 1 with time-homogeneous coefficients.
/// Values are stored as the ratio to e^{c(y)τ} p₀(·;y) on a self-similar grid.
/// Windows longer than the series window are reached by Chapman–Kolmogorov doubling, which needs
/// a, b and c constant; otherwise the horizon must fit in one window.
class FullKernel {
public:
    FullKernel(std::shared_ptr<const levi::Kernel> pab, DuhamelSpec spec);

    const fields::Coefficients& coefficients() const { return pab_->coefficients(); }
    const levi::Kernel& pab() const { return *pab_; }
    const DuhamelSpec& spec() const { return spec_; }
    bool translation_invariant() const { return invariant_; }

    double p(double t, double x, double s, double y) const;
    /// n-th series term inside the window.
    double theta(int n, double t, double x, double s, double y) const;
    const DuhamelLedger& ledger(double y) const;

    /// ∫ p(t,x;s,y) f(y) dy.
    quad::QuadResult apply(const quad::Fn1& f, double t, double x, double s) const;

private:
    struct Anchor;
    std::shared_ptr<const levi::Kernel> pab_;
    DuhamelSpec spec_;
    bool invariant_ = false;
    mutable std::mutex mu_;
    mutable std::map<double, std::shared_ptr<const Anchor>> cache_;
    mutable std::map<double, double> ell_cache_; // ℓ^c_1 per window, filled under mu_

    std::shared_ptr<const Anchor> anchor(double y) const;
    std::shared_ptr<const Anchor> build(double y) const;
    double frozen(double tau, double x, double y) const;
    /// Frozen kernel times e^{c(y)τ}; stored values are ratios to this.
    double base(double tau, double x, double y) const;
    double potential_at(double y) const; // c(y), or 0 for unbounded c
    double pab_value(double tau, double x, double z) const;
};

/// ∫ p(t,x;s,y) f(y) dy for any kernel callable p(t,x,s,y) in d = 1.
quad::QuadResult semigroup_apply(const std::function<double(double, double, double, double)>& p,
                                 const quad::Fn1& f, double t, double x, double s, const quad::LineHints& hints,
                                 const quad::QuadratureSpec& spec);

// Checks on the assembled kernel.

/// p(t,x;0,y) against e^{ct} ρ(a t, x - y + b t) for constant a, b, c.
CheckReport closed_form_check(const FullKernel& K, const std::vector<double>& times, double u_max, int n_u,
                              double tol);
/// Duhamel residual against ten times the geometric tail bound; geometric decay of the ledger.
CheckReport residual_check(const FullKernel& K, double y);
/// sup |Θ_{n+1}| / sup |Θ_n| ≤ Λℓ for every computed n.
CheckReport geometric_decay_check(const FullKernel& K, double y);
/// c ≤ 0 ⇒ Θ₁ ≤ 0 on the scan.
CheckReport theta_sign_check(const FullKernel& K, double y, const std::vector<double>& taus,
                             const std::vector<double>& offsets);
/// c ≤ 0 ⇒ ∫ p dy ≤ 1 + tol.
CheckReport killing_mass_check(const FullKernel& K, const std::vector<double>& taus, const std::vector<double>& xs,
                               double tol);
/// Composed [0,t/2]∘[t/2,t] against direct values inside the window.
CheckReport composition_check(const FullKernel& K, double y, const std::vector<double>& taus,
                              const std::vector<double>& offsets, double tol);
/// Chapman–Kolmogorov on the assembled kernel at one intermediate time.
CheckReport full_chapman_kolmogorov_check(const FullKernel& K, double t, double r, const std::vector<double>& xs,
                                          double y, double tol);
/// p ≤ κ₁ ϱ⁰₁, and p ≥ ϱ⁰₁/κ₂ when a is x-independent.
CheckReport full_two_sided_check(const FullKernel& K, const std::vector<double>& taus,
                                 const std::vector<double>& offsets, const std::vector<double>& anchors);
/// Gradient estimate via central differences; applicable when c has a declared Hölder exponent ≥ gamma.
CheckReport full_gradient_check(const FullKernel& K, double gamma, const std::vector<double>& taus,
                                const std::vector<double>& anchors, double spread_limit);
/// Hölder estimate; applicable when c lies in the Kato class of order 1 - gamma.
CheckReport full_holder_check(const FullKernel& K, double gamma, int n_pairs, const std::vector<double>& taus,
                              const std::vector<double>& anchors, std::uint64_t seed, double spread_limit);

} // namespace fhk::duhamel
