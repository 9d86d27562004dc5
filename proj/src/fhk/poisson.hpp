#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fhk/quadrature.hpp"

namespace fhk::poisson {

/// Γ((d+1)/2) / π^{(d+1)/2}: prefactor of the Cauchy density, and the constant that turns the raw
/// principal-value integral into the operator with Fourier multiplier -|ξ|.
double prefactor(int dim);
inline double pv_constant(int dim) { return prefactor(dim); }

/// ρ(t, x) = c_d · t · (|x|² + t²)^{-(d+1)/2}.
double density(double t, std::span<const double> x);

enum class Deriv { grad, dt, grad2, grad_dt, grad3, grad2_dt };
Deriv parse_deriv(const std::string& name);

/// Closed-form derivative tensor, flattened row-major: grad/grad_dt have d entries,
/// grad2/grad2_dt d², grad3 d³, dt a single entry.
std::vector<double> derivatives(double t, std::span<const double> x, Deriv which);

/// Δ^{1/2} ρ(t,·)(x), which equals ∂_t ρ(t, x).
double frac_laplacian_on_poisson(double t, std::span<const double> x);

struct PvResult {
    double value = 0.0;        // normalized: c_pv times the raw principal value
    double unnormalized = 0.0; // raw principal value
    double err_estimate = 0.0;
    std::vector<double> ladder; // truncated integrals at eps0·scale, eps0·scale/2, ...
};

/// Principal-value half-Laplacian of a smooth bounded f. `scale` is the length over which f varies;
/// the truncation ladder and the graded region are laid out relative to it.
PvResult frac_laplacian_pv(const quad::FnD& f, std::span<const double> x, double scale,
                           const quad::QuadratureSpec& spec);
PvResult frac_laplacian_pv_1d(const quad::Fn1& f, double x, double scale, const quad::QuadratureSpec& spec);

// Scalar d = 1 forms used in hot loops.
inline double rho1(double t, double x) { return t / (std::numbers::pi * (x * x + t * t)); }
inline double rho1_dt(double t, double x) {
    const double r = x * x + t * t;
    return (x * x - t * t) / (std::numbers::pi * r * r);
}
inline double rho1_dx(double t, double x) {
    const double r = x * x + t * t;
    return -2.0 * t * x / (std::numbers::pi * r * r);
}
inline double rho1_dxx(double t, double x) {
    const double r = x * x + t * t;
    return 2.0 * t * (3.0 * x * x - t * t) / (std::numbers::pi * r * r * r);
}
inline double rho1_dxdt(double t, double x) {
    const double r = x * x + t * t;
    return 2.0 * x * (3.0 * t * t - x * x) / (std::numbers::pi * r * r * r);
}

} // namespace fhk::poisson
