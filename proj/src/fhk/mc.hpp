#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhk/check_report.hpp"
#include "fhk/fields.hpp"

namespace fhk::levi {
class Kernel;
}

namespace fhk::mc {

using Rng = std::mt19937_64;

struct EnsembleSpec {
    std::int64_t n_paths = 100000;
    double step = 1e-3;
    double horizon = 0.5;
    std::vector<double> start{0.0};
    std::uint64_t seed = 1;
    int batches = 200; // independent RNG streams; also the bootstrap blocks
    int threads = 1;
};

void to_json(nlohmann::json& j, const EnsembleSpec& s);
void from_json(const nlohmann::json& j, EnsembleSpec& s);

struct PathEnsemble {
    EnsembleSpec spec;
    int dim = 1;
    std::vector<double> endpoints; // n_paths × dim, row-major
    std::vector<double> weights;   // Feynman–Kac multipliers

    std::int64_t size() const { return static_cast<std::int64_t>(weights.size()); }
    /// Batch (RNG stream) of path i.
    int batch_of(std::int64_t i) const;
};

/// h·C with C standard isotropic Cauchy in d = out.size(), drawn as Z/|N|.
void sample_cauchy_increment(double h, Rng& rng, std::span<double> out);
std::vector<double> sample_cauchy_increment(int d, double h, Rng& rng);

/// X_{k+1} = X_k + b(X_k) h + a(X_k) ΔC_k with weights multiplied by exp(c(X_k) h).
PathEnsemble euler_paths(const fields::Coefficients& co, const EnsembleSpec& spec);

/// Two ensembles driven by the same noise: the fine one at step/2 and the coarse one at step, whose
/// increment is the sum of the two fine increments. `spec.step` is the coarse step.
struct CoupledPair {
    PathEnsemble fine, coarse;
};
CoupledPair coupled_euler_paths(const fields::Coefficients& co, const EnsembleSpec& spec);

/// Endpoints and weights as two little-endian float64 columns, plus `<path>.json` with the spec.
void save_ensemble(const PathEnsemble& e, const std::string& path);
PathEnsemble load_ensemble(const std::string& path);

struct KdeSpec {
    double bandwidth = 0.0;       // 0: Silverman rule on the interquartile range
    double bandwidth_scale = 1.0;
    int bootstrap = 400;
    std::uint64_t seed = 17;
    std::int64_t min_local = 500; // samples within one bandwidth of a point
};

void to_json(nlohmann::json& j, const KdeSpec& s);
void from_json(const nlohmann::json& j, KdeSpec& s);

struct KdeEstimate {
    double bandwidth = 0.0;
    std::vector<double> points;
    std::vector<double> value;
    std::vector<double> se; // block bootstrap over batches
    std::vector<std::int64_t> local;
};

/// 0.9 · (IQR/1.34) · n^{-1/5} for the first coordinate of the endpoints.
double silverman_iqr(const PathEnsemble& e);

/// Weighted Gaussian KDE of the first coordinate at `points`.
KdeEstimate kde(const PathEnsemble& e, const std::vector<double>& points, const KdeSpec& spec);

/// Reference density at y after convolution with a Gaussian of standard deviation h.
using SmoothedDensity = std::function<double(double y, double h)>;

/// y ↦ p(t,x;0,y): the frozen part is smoothed with Gauss–Hermite nodes, φ is used unsmoothed.
SmoothedDensity parametrix_reference(const levi::Kernel& K, double t, double x);
/// Closed form e^{ct} ρ(a t, y - x - b t) for constant coefficients, smoothed exactly by Gauss–Hermite.
SmoothedDensity constant_reference(double a, double b, double c, double t, double x);

/// Gauss–Hermite nodes and weights for ∫ f(s) e^{-s²/2} ds / √(2π).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Points within z_limit bootstrap SE; passes when at least min_pass of the retained points agree.
/// Points with fewer than min_local nearby samples are excluded and listed.
CheckReport kde_compare(const PathEnsemble& e, const SmoothedDensity& ref, const std::vector<double>& points,
                        const KdeSpec& spec, double z_limit, int min_pass);

/// max |KDE_fine - KDE_coarse| / SE_coarse < limit at every point.
CheckReport step_halving_check(const CoupledPair& pair, const std::vector<double>& points, const KdeSpec& spec,
                               double limit);

/// Log-log slope of P(|X - x| > R) on R ∈ radii; passes when within tol of -1.
CheckReport tail_slope_check(const PathEnsemble& e, const std::vector<double>& radii, double tol);

/// Mean Feynman–Kac weight against exp(c t) for constant c, within z_limit standard errors (or exact).
CheckReport mean_weight_check(const PathEnsemble& e, double c, double tol);

} // namespace fhk::mc
