#pragma once

#include <span>
#include <string>
#include <vector>

#include "fhk/fields.hpp"
#include "fhk/poisson.hpp"
#include "fhk/quadrature.hpp"

namespace fhk::frozen {

/// Time integrals of the coefficients at a frozen spatial point: F = ∫_s^t a(r,y) dr, G = ∫_s^t b(r,y) dr.
struct FrozenArgs {
    double F = 0.0;
    std::vector<double> G;
};

FrozenArgs frozen_args(const fields::Coefficients& co, double s, double t, std::span<const double> y,
                       const quad::QuadratureSpec& spec);

/// p₀(t,x;s,y) = ρ(F, x - y + G) with F, G frozen at y.
double p0(const fields::Coefficients& co, double t, std::span<const double> x, double s, std::span<const double> y,
          const quad::QuadratureSpec& spec);

enum class P0Deriv { fraclap_x, grad_x, dt, grad_fraclap, grad2 };
P0Deriv parse_p0_deriv(const std::string& name);

/// Flattened derivative: grad_x and grad_fraclap have d entries, grad2 d², the others one.
/// dt is a(t,y) Δ^{1/2}p₀ + b(t,y)·∇p₀ by construction.
std::vector<double> p0_derivative(const fields::Coefficients& co, double t, std::span<const double> x, double s,
                                  std::span<const double> y, P0Deriv which, const quad::QuadratureSpec& spec);

/// q₀ = (a(t,x) - a(t,y)) Δ^{1/2}_x p₀ + (b(t,x) - b(t,y))·∇_x p₀.
double q0(const fields::Coefficients& co, double t, std::span<const double> x, double s, std::span<const double> y,
          const quad::QuadratureSpec& spec);

enum class Cancellation { grad, fraclap, dt, mass };
Cancellation parse_cancellation(const std::string& name);

struct CancellationResult {
    std::vector<double> value; // d entries for grad, one otherwise
    double err_estimate = 0.0;
    bool converged = true;
};

/// ∫ (derivative of p₀)(t,x;s,y) dy over R^d, with the rule centered on the drift-recentred peak.
CancellationResult cancellation_integral(const fields::Coefficients& co, double t, std::span<const double> x,
                                         double s, Cancellation which, const quad::QuadratureSpec& spec);

// d = 1, time-homogeneous forms used in hot loops. u = x - y, frozen values a = a(y), b = b(y).
inline double p0_1(double a, double b, double delta, double u) { return poisson::rho1(a * delta, u + b * delta); }
inline double q0_1(double ax, double bx, double ay, double by, double delta, double u) {
    const double F = ay * delta, w = u + by * delta;
    return (ax - ay) * poisson::rho1_dt(F, w) + (bx - by) * poisson::rho1_dx(F, w);
}

} // namespace fhk::frozen
