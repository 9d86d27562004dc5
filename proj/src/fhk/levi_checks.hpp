#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fhk/check_report.hpp"
#include "fhk/levi.hpp"

namespace fhk::levi {

/// Offsets u = x - y, gaps τ = t - s and anchors y over which a kernel property is scanned.
struct ScanGrid {
    std::vector<double> taus{0.05, 0.1, 0.25, 0.5, 1.0};
    std::vector<double> offsets;
    std::vector<double> anchors{0.0, 0.7};
    double s = 0.0;
    bool relative = false; // offsets are multiples of τ

    std::vector<double> offsets_at(double tau) const;

    static ScanGrid uniform(double u_max, int n_u, std::vector<double> taus, std::vector<double> anchors);
    /// Offsets ±τ·2^k for k = k_lo..k_hi.
    static ScanGrid scaled(int k_lo, int k_hi, std::vector<double> taus, std::vector<double> anchors);
};

/// ∫ p(t,x;s,y) f(y) dy with φ interpolated across lattice anchors. err_estimate compares two rule levels.
quad::QuadResult apply_kernel(const Kernel& K, const quad::Fn1& f, double t, double x, double s);

/// Series ledger: single fitted constant, truncation below tol with N ≤ n_limit, integral-equation
/// residual below ten times the truncation bound.
CheckReport ledger_check(const AnchorSeries& a, int n_limit = 8, double fit_limit = 0.2);

/// Term-wise sup of |q_n| against the fitted Gamma-ratio profile on the whole ledger region.
CheckReport term_bound_check(const AnchorSeries& a);

/// |∫ p(t,x;s,y) dy - 1| at every (τ, x).
CheckReport mass_check(const Kernel& K, const std::vector<double>& taus, const std::vector<double>& xs, double tol);

/// ∫ p(t,x;r,z) p(r,z;s,y) dz against p(t,x;s,y) at `slices` equally spaced r.
CheckReport chapman_kolmogorov_check(const Kernel& K, double t, const std::vector<std::pair<double, double>>& xy,
                                     int slices, double tol);

/// sup and inf of p / ϱ⁰₁ over the scan; passes when inf > 0 and sup/inf < ratio_limit.
CheckReport two_sided_check(const Kernel& K, const ScanGrid& g, double ratio_limit);

/// |p - p₀| ≤ Λ τ^β p₀ with fitted Λ, and positivity where Λ τ^β < 1/2.
CheckReport perturbation_bound_check(const Kernel& K, const ScanGrid& g);

/// ∂_t p - a Δ^{1/2} p - b ∂_x p with finite differences in t and x and the principal-value Δ^{1/2}.
/// The relative residual divides by |∂_t p| + |a Δ^{1/2} p| + |b ∂_x p|.
CheckReport pde_residual_check(const Kernel& K, double y, const std::vector<double>& taus,
                               const std::vector<double>& offsets, double tol);

/// κ = |∂_x p| (|x-y| + τ)² per τ-slice; passes when the slice maxima stay within a factor `spread_limit`.
CheckReport gradient_check(const Kernel& K, const ScanGrid& g, double spread_limit);
/// Same for |Δ^{1/2}_x p| (|x-y| + τ)².
CheckReport fraclap_bound_check(const Kernel& K, const ScanGrid& g, double spread_limit);

/// Iterated-integral gradient against a central difference of p.
CheckReport gradient_fd_check(const Kernel& K, const ScanGrid& g, int n_points, std::uint64_t seed, double tol);

/// |p(x) - p(x')| / (|x-x'|^γ (ϱ⁰_{1-γ}(τ,x-y) + ϱ⁰_{1-γ}(τ,x'-y))) on random pairs, stability of per-τ maxima.
CheckReport holder_check(const Kernel& K, double gamma, int n_pairs, const std::vector<double>& taus,
                         const std::vector<double>& anchors, std::uint64_t seed, double spread_limit);

/// p(t,x;s,y) = p(t,-x;s,-y) for b ≡ 0 and even a.
CheckReport symmetry_check(const Kernel& K, const ScanGrid& g, double tol);

/// P_{t,s} f(x) → f(x) along a decreasing τ ladder.
CheckReport initial_condition_check(const Kernel& K, const quad::Fn1& f, const std::vector<double>& xs,
                                    const std::vector<double>& ladder, double tol);

/// ∫ g (P_τ f - f)/τ dx → ∫ g ℒf dx with f = g = exp(-x²), extrapolated in τ.
CheckReport weak_generator_check(const Kernel& K, const std::vector<double>& ladder, double tol);

/// The recursion operator is linear: K(αf + βg) = αKf + βKg.
CheckReport linearity_check(const AnchorSeries& a, std::uint64_t seed, double tol);

/// φ(t,x,r) → q(r,x) as t ↓ r.
CheckReport phi_slice_limit_check(const AnchorSeries& a, double sigma, double x, const std::vector<double>& gaps);

} // namespace fhk::levi
