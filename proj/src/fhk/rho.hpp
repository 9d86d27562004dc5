#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fhk/check_report.hpp"
#include "fhk/quadrature.hpp"

namespace fhk::rho {

struct Exponents {
    double beta = 0.0;
    double gamma = 0.0;
    int dim = 1;
};

struct SpaceTimePoint {
    double t;
    std::vector<double> x;
};

/// ϱ^β_γ(t, x) = t^γ · min(|x|^β, 1) · (|x|² + t²)^{-(d+1)/2}.
double rho(const Exponents& e, double dt, std::span<const double> dx);

inline double rho1(double beta, double gamma, double dt, double dx) {
    const double a = std::abs(dx);
    const double cap = beta == 0.0 ? 1.0 : std::min(std::pow(a, beta), 1.0);
    return std::pow(dt, gamma) * cap / (dx * dx + dt * dt);
}

/// ∫_{R^d} ϱ^β_γ(t, x) dx, radially reduced.
quad::QuadResult rho_space_integral(const Exponents& e, double t, const quad::QuadratureSpec& spec);

/// Three-point inequality for ϱ⁰₀ with constant 2^d at (t,x) > (r,z) > (s,y).
CheckReport three_p_check(const SpaceTimePoint& p1, const SpaceTimePoint& p2, const SpaceTimePoint& p3);

/// Random fuzz of three_p_check: `n` tuples in dimension `dim`, deterministic in `seed`.
CheckReport three_p_fuzz(int dim, std::int64_t n, std::uint64_t seed, int threads = 1);

double beta_function(double g, double b);

CheckReport beta_time_identity_check(double g, double b, double s, double t, const quad::QuadratureSpec& spec);

/// Chain (t,x) > (r, z integrated) > (s,y).
struct Chain {
    double t, r, s;
    std::vector<double> x, y;
};

/// Spatial convolution ∫ϱ^{β1}_{γ1}(t,x;r,z) ϱ^{β2}_{γ2}(r,z;s,y) dz against the four-term bound.
/// lhs is the integral, rhs the bound without its constant; fitted_constant = lhs / rhs.
CheckReport conv_space_bound(const Exponents& e1, const Exponents& e2, const Chain& c,
                             const quad::QuadratureSpec& spec);

/// Space-time convolution over r in (s,t) against the four Beta-function terms.
CheckReport conv_spacetime_bound(const Exponents& e1, const Exponents& e2, const Chain& c,
                                 const quad::QuadratureSpec& spec);

/// ∫_s^t (∫ϱϱ dz)^p dr against |x-y|^{-(d+1)p}; fitted_constant = lhs · |x-y|^{(d+1)p}.
CheckReport conv_lp_bound(const Exponents& e1, const Exponents& e2, const Chain& c, double p,
                          const quad::QuadratureSpec& spec);

/// Fitted-constant uniformity over random chains: the chains are split into `batches` groups and
/// the ratio of largest to smallest per-batch maximum is compared with `spread_limit`.
CheckReport conv_fuzz(const Exponents& e1, const Exponents& e2, bool spacetime, int n_chains, int batches,
                      double spread_limit, std::uint64_t seed, const quad::QuadratureSpec& spec);

} // namespace fhk::rho
