#include "fhk/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fhk/error.hpp"

namespace fhk::levi {

namespace {

inline void lagrange4(double t, double* w) {
    w[0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    w[1] = t * (t - 2.0) * (t - 3.0) / 2.0;
    w[2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
    w[3] = t * (t - 1.0) * (t - 2.0) / 6.0;
}

} // namespace

Grid::Grid(double horizon, double sigma_min_rel, double ratio, double xi_step, double extent, double tail)
    : h_(xi_step), tail_(tail) {
    require(horizon > 0.0 && sigma_min_rel > 0.0 && sigma_min_rel < 1.0, ErrorKind::config,
            "grid: need horizon > 0 and 0 < sigma_min_rel < 1");
    require(ratio > 1.0 && xi_step > 0.0 && extent > 0.0, ErrorKind::config,
            "grid: need row_ratio > 1, xi_step > 0, extent > 0");
    const double smin = sigma_min_rel * horizon;
    const double span = std::log(horizon / smin);
    const int K = std::max(4, static_cast<int>(std::ceil(span / std::log(ratio))) + 1);
    dlog_ = span / (K - 1);
    offset_.push_back(0);
    for (int k = 0; k < K; ++k) {
        const double s = k == K - 1 ? horizon : smin * std::exp(k * dlog_);
        sigma_.push_back(s);
        log_sigma_.push_back(std::log(s));
        const int m = std::max(3, static_cast<int>(std::ceil(std::asinh(extent / s) / h_)));
        half_.push_back(m);
        offset_.push_back(offset_.back() + 2 * m + 1);
    }
}

double Grid::u(int k, int j) const { return sigma_[k] * std::sinh(j * h_); }

int Grid::row_of(int idx) const {
    auto it = std::upper_bound(offset_.begin(), offset_.end(), idx);
    return static_cast<int>(it - offset_.begin()) - 1;
}

int Grid::row_stencil(int k, double u, int* idx, double* w) const {
    const int m = half_[k];
    const double xi = std::asinh(u / sigma_[k]);
    const double xm = m * h_;
    if (xi > xm || xi < -xm) {
        const int j = xi > 0 ? m : -m;
        const double ue = this->u(k, j);
        idx[0] = index(k, j);
        w[0] = tail_ == 2.0 ? (ue / u) * (ue / u) : std::pow(std::abs(ue / u), tail_);
        return 1;
    }
    const double p = xi / h_;
    const int js = std::clamp(static_cast<int>(std::floor(p)) - 1, -m, m - 3);
    double lw[4];
    lagrange4(p - js, lw);
    for (int r = 0; r < 4; ++r) {
        idx[r] = index(k, js + r);
        w[r] = lw[r];
    }
    return 4;
}

void Grid::rows_at(double sigma, double e, RowWindow& rw) const {
    const int K = rows();
    rw.n = 0;
    if (sigma < sigma_[0]) {
        rw.n = 1;
        rw.row[0] = 0;
        rw.factor[0] = std::pow(sigma / sigma_[0], e);
        rw.u_scale = sigma_[0] / sigma;
        return;
    }
    rw.u_scale = 1.0;
    const double lp = (std::log(sigma) - log_sigma_[0]) / dlog_;
    const int ks = std::clamp(static_cast<int>(std::floor(lp)) - 1, 0, K - 4);
    double lw[4];
    lagrange4(lp - ks, lw);
    for (int r = 0; r < 4; ++r) {
        if (lw[r] == 0.0) continue;
        rw.row[rw.n] = ks + r;
        rw.factor[rw.n] = lw[r] * std::pow(sigma / sigma_[ks + r], e);
        ++rw.n;
    }
}

int Grid::stencil(const RowWindow& rw, double u, int* idx, double* w) const {
    int n = 0;
    for (int r = 0; r < rw.n; ++r) {
        const int m = row_stencil(rw.row[r], u * rw.u_scale, idx + n, w + n);
        for (int i = n; i < n + m; ++i) w[i] *= rw.factor[r];
        n += m;
    }
    return n;
}

int Grid::stencil(double sigma, double u, double e, int* idx, double* w) const {
    RowWindow rw;
    rows_at(sigma, e, rw);
    return stencil(rw, u, idx, w);
}

double Grid::interpolate(const std::vector<double>& f, double sigma, double u, double e) const {
    int idx[16];
    double w[16];
    const int n = stencil(sigma, u, e, idx, w);
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += w[i] * f[idx[i]];
    return v;
}

} // namespace fhk::levi
