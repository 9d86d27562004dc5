#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhk/check_report.hpp"
#include "fhk/quadrature.hpp"

namespace fhk::fields {

/// A scalar coefficient f(t, x) with its regularity metadata. Immutable once built;
/// f(t, ·) = 0 for t < 0.
class ScalarField {
public:
    using Fn = std::function<double(double, std::span<const double>)>;

    ScalarField();
    static ScalarField from_json(const nlohmann::json& j, int dim);
    static ScalarField constant(double v, int dim = 1);
    nlohmann::json to_json() const;

    double operator()(double t, std::span<const double> x) const { return t < 0.0 ? 0.0 : fn_(t, x); }
    double at(double t, double x) const { return (*this)(t, std::span<const double>(&x, 1)); }

    const std::string& kind() const { return kind_; }
    const nlohmann::json& params() const { return params_; }
    int dim() const { return dim_; }
    double declared_beta() const { return beta_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }
    double sup_abs() const { return std::max(std::abs(lo_), std::abs(hi_)); }
    double declared_norm() const { return norm_; }
    double kato_gamma() const { return kato_; }
    bool time_homogeneous() const { return homogeneous_; }
    bool space_independent() const { return flat_; }
    bool is_zero() const { return zero_; }
    bool bounded() const { return std::isfinite(lo_) && std::isfinite(hi_); }
    /// Points where the field blows up (integrable singularities).
    const std::vector<std::vector<double>>& singular_points() const { return singular_; }
    /// d = 1 positions where the field is not smooth (jumps, kinks, cusps).
    const std::vector<double>& breakpoints() const { return breaks_; }

private:
    std::string kind_ = "constant";
    nlohmann::json params_;
    int dim_ = 1;
    Fn fn_;
    double beta_ = 1.0;
    double lo_ = 0.0, hi_ = 0.0;
    double norm_ = std::numeric_limits<double>::quiet_NaN();
    double kato_ = 1.0;
    bool homogeneous_ = true;
    bool flat_ = true;
    bool zero_ = true;
    std::vector<std::vector<double>> singular_;
    std::vector<double> breaks_;

    void apply_overrides(const nlohmann::json& j);
};

/// The operator coefficients a (scalar), b (d-vector) and c (potential).
struct Coefficients {
    int dim = 1;
    ScalarField a = ScalarField::constant(1.0);
    std::vector<ScalarField> b{ScalarField::constant(0.0)};
    ScalarField c = ScalarField::constant(0.0);

    double a0() const { return a.lower(); }
    double a1() const { return a.upper(); }
    double b1() const;
    /// min of the declared Hölder exponents of a and b.
    double beta() const;
    bool time_homogeneous() const;
    bool constant_ab() const;
    double eval_a(double t, std::span<const double> x) const { return a(t, x); }
    void eval_b(double t, std::span<const double> x, std::span<double> out) const;
    double eval_c(double t, std::span<const double> x) const { return c(t, x); }

    static Coefficients from_json(const nlohmann::json& j, int dim);
    nlohmann::json to_json() const;
};

/// Samples a on a fixed grid and checks a0 ≤ a ≤ a1, |b| ≤ b1; raises a data error naming the sample.
void validate(const Coefficients& co);

struct SampleSpec {
    double lo = -10.0;
    double hi = 10.0;
    int n = 801;                  // grid points per axis in d = 1; random points in d ≥ 2
    std::vector<double> times{0.0, 0.5, 1.0};
    double near_singular = 1e-3;  // extra pairs clustered this close to breakpoints
    std::uint64_t seed = 1;
};

/// sup|f| + sampled sup |f(t,x) - f(t,y)| / |x-y|^β. A lower bound for the true norm.
double holder_norm(const ScalarField& f, double beta, const SampleSpec& sample);
/// The sampled quotient alone.
double holder_seminorm(const ScalarField& f, double beta, const SampleSpec& sample);

enum class KatoForm { ell, K };

struct KatoGrid {
    std::vector<double> times{1.0};
    std::vector<std::vector<double>> points; // empty: singular points plus a default d = 1 line
    int random_probes = 8;
    std::uint64_t seed = 11;
};

struct KatoResult {
    double value = 0.0;
    double t_at_sup = 0.0;
    std::vector<double> x_at_sup;
    double err_estimate = 0.0;
    std::vector<std::vector<double>> probed; // (t, x...) rows
};

/// ℓ^c_γ(ε) = sup ∫_0^ε ∫ ϱ⁰_γ(s, z) (|c(t-s, x-z)| + |c(t+s, x+z)|) dz ds (form ell) or the
/// K^γ form with the larger of the two one-sided integrals. Currently d = 1.
KatoResult kato_functional(const ScalarField& pot, double gamma, double eps, KatoForm form, const KatoGrid& grid,
                           const quad::QuadratureSpec& spec);

/// Checks d/p + 1/q < γ and fits the decay slope of ℓ^c_γ on `ladder` against γ - d/p - 1/q.
CheckReport lp_lq_membership(const ScalarField& pot, double p, double q, double gamma,
                             const std::vector<double>& ladder, const quad::QuadratureSpec& spec);

/// Log-log least-squares slope of ys against xs.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace fhk::fields
