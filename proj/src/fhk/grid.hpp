#pragma once

#include <vector>

namespace fhk::levi {

/// Scaled grid for functions f(σ, u) of a time gap σ ∈ (0, T] and an offset u = x - y.
/// Rows σ_k are geometric; row k holds nodes u = σ_k sinh(j h), |j| ≤ half_k, covering |u| ≤ extent.
/// Values between nodes are 4-point Lagrange in ξ = asinh(u/σ) within a row and 4-point Lagrange
/// in log σ across rows, applied to σ^{-e} f. Beyond a row's last node f decays like |u|^{-tail}; below
/// the first row f is continued self-similarly, f(σ, u) = (σ/σ_0)^e f(σ_0, σ_0 u / σ).
class Grid {
public:
    Grid() = default;
    Grid(double horizon, double sigma_min_rel, double ratio, double xi_step, double extent, double tail = 2.0);

    int rows() const { return static_cast<int>(sigma_.size()); }
    int size() const { return offset_.empty() ? 0 : offset_.back(); }
    double sigma(int k) const { return sigma_[k]; }
    int half(int k) const { return half_[k]; }
    double xi_step() const { return h_; }
    double horizon() const { return sigma_.back(); }
    int index(int k, int j) const { return offset_[k] + j + half_[k]; }
    double u(int k, int j) const;
    int row_of(int idx) const;

    /// Row part of a stencil: which rows contribute at σ, with their Lagrange-in-log-σ factors.
    struct RowWindow {
        int n = 0;
        int row[4];
        double factor[4];
        double u_scale = 1.0; // below the first row, u is rescaled to the first row's variable
    };
    void rows_at(double sigma, double e, RowWindow& rw) const;
    int stencil(const RowWindow& rw, double u, int* idx, double* w) const;

    /// Writes at most 16 (index, weight) pairs with f(σ, u) ≈ Σ weight · f[index]; returns the count.
    int stencil(double sigma, double u, double e, int* idx, double* w) const;

    double interpolate(const std::vector<double>& f, double sigma, double u, double e) const;

private:
    std::vector<double> sigma_;
    std::vector<double> log_sigma_;
    std::vector<int> half_;
    std::vector<int> offset_;
    double h_ = 0.25;
    double tail_ = 2.0;
    double dlog_ = 0.0;

    int row_stencil(int k, double u, int* idx, double* w) const;
};

} // namespace fhk::levi
