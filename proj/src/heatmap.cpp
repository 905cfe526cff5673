#include "poscal/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace poscal {

double Heatmap::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

double Heatmap::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

static bool border_contained(const Heatmap& hm, const Vec2& center, double l_tilde) {
    if (center.x < hm.origin.x || center.y < hm.origin.y ||
        center.x > hm.origin.x + hm.pitch * (hm.width - 1) ||
        center.y > hm.origin.y + hm.pitch * (hm.height - 1))
        return false;
    // Largest border value relative to the (unit) peak.
    const double dx = std::min(center.x - hm.origin.x,
                               hm.origin.x + hm.pitch * (hm.width - 1) - center.x);
    const double dy = std::min(center.y - hm.origin.y,
                               hm.origin.y + hm.pitch * (hm.height - 1) - center.y);
    const double d = std::min(dx, dy);
    return std::exp(-d * d / (2.0 * l_tilde * l_tilde)) < 1e-6;
}

Heatmap render_heatmap(const Vec2& center, double l_tilde, const GridDims& grid) {
    if (!(l_tilde > 0.0)) throw std::domain_error("render_heatmap: l_tilde must be > 0");
    if (grid.width < 1 || grid.height < 1 || !(grid.pitch > 0.0))
        throw std::domain_error("render_heatmap: bad grid");
    Heatmap hm;
    hm.width = grid.width;
    hm.height = grid.height;
    hm.origin = grid.origin;
    hm.pitch = grid.pitch;
    hm.values.assign(static_cast<std::size_t>(grid.width) * grid.height, 0.0);
    accumulate_heatmap(hm, center, l_tilde, 1.0);
    hm.truncation_warning = !border_contained(hm, center, l_tilde);
    return hm;
}

void accumulate_heatmap(Heatmap& acc, const Vec2& center, double l_tilde, double weight) {
    const double inv = 1.0 / (2.0 * l_tilde * l_tilde);
    // exp(-(dx^2+dy^2)) factors into row and column terms.
    static thread_local std::vector<double> col, row;
    col.resize(static_cast<std::size_t>(acc.width));
    row.resize(static_cast<std::size_t>(acc.height));
    for (int ix = 0; ix < acc.width; ++ix) {
        const double dx = acc.origin.x + acc.pitch * ix - center.x;
        col[static_cast<std::size_t>(ix)] = std::exp(-dx * dx * inv);
    }
    for (int iy = 0; iy < acc.height; ++iy) {
        const double dy = acc.origin.y + acc.pitch * iy - center.y;
        row[static_cast<std::size_t>(iy)] = std::exp(-dy * dy * inv);
    }
    for (int iy = 0; iy < acc.height; ++iy) {
        const double wy = weight * row[static_cast<std::size_t>(iy)];
        double* out = acc.values.data() + static_cast<std::size_t>(iy) * acc.width;
        for (int ix = 0; ix < acc.width; ++ix) out[ix] += wy * col[static_cast<std::size_t>(ix)];
    }
}

// Solve a symmetric 4x4 system by Gaussian elimination with partial pivoting.
static std::array<double, 4> solve4(std::array<std::array<double, 5>, 4> m) {
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        std::swap(m[c], m[piv]);
        if (std::abs(m[c][c]) < 1e-300) throw std::domain_error("fit_gaussian: singular system");
        for (int r = 0; r < 4; ++r) {
            if (r == c) continue;
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 5; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

static GaussianFit fit_by_moments(const Heatmap& hm) {
    double mass = 0.0;
    Vec2 mean{0.0, 0.0};
    for (int iy = 0; iy < hm.height; ++iy)
        for (int ix = 0; ix < hm.width; ++ix) {
            const double v = hm.at(ix, iy);
            const Vec2 p = hm.pixel_center(ix, iy);
            mass += v;
            mean.x += v * p.x;
            mean.y += v * p.y;
        }
    if (!(mass > 0.0)) throw std::domain_error("fit_gaussian: heatmap has no mass");
    mean.x /= mass;
    mean.y /= mass;
    double var = 0.0;
    for (int iy = 0; iy < hm.height; ++iy)
        for (int ix = 0; ix < hm.width; ++ix)
            var += hm.at(ix, iy) * (hm.pixel_center(ix, iy) - mean).norm_sq();
    var /= 2.0 * mass;  // isotropic: average of the two axis variances
    GaussianFit fit;
    fit.mean = mean;
    fit.sigma_fit = std::sqrt(var);
    const double denom = 2.0 * 3.14159265358979323846 * var;
    fit.scale = denom > 0.0 ? mass * hm.pitch * hm.pitch / denom : hm.max_value();
    return fit;
}

GaussianFit fit_gaussian(const Heatmap& hm) {
    const double peak = hm.max_value();
    if (!(peak > 0.0)) throw std::domain_error("fit_gaussian: heatmap has no mass");
    const double cutoff = 0.01 * peak;

    // log v = A + B x + C y + D (x^2 + y^2), weights v^2.
    std::array<std::array<double, 5>, 4> m{};
    long qualifying = 0;
    for (int iy = 0; iy < hm.height; ++iy) {
        for (int ix = 0; ix < hm.width; ++ix) {
            const double v = hm.at(ix, iy);
            if (v <= cutoff) continue;
            ++qualifying;
            const Vec2 p = hm.pixel_center(ix, iy);
            const double w = v * v;
            const double basis[4] = {1.0, p.x, p.y, p.x * p.x + p.y * p.y};
            const double logv = std::log(v);
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) m[r][c] += w * basis[r] * basis[c];
                m[r][4] += w * basis[r] * logv;
            }
        }
    }
    if (qualifying < 9) return fit_by_moments(hm);

    const auto beta = solve4(m);
    const double d = beta[3];
    if (!(d < 0.0)) return fit_by_moments(hm);

    GaussianFit fit;
    fit.sigma_fit = std::sqrt(-1.0 / (2.0 * d));
    fit.mean = {-beta[1] / (2.0 * d), -beta[2] / (2.0 * d)};
    fit.scale = std::exp(beta[0] - (beta[1] * beta[1] + beta[2] * beta[2]) / (4.0 * d));
    return fit;
}

double sigma_from_heatmap_fit(const Heatmap& hm, double l_tilde) {
    if (!(l_tilde > 0.0)) throw std::domain_error("sigma_from_heatmap_fit: l_tilde must be > 0");
    const GaussianFit fit = fit_gaussian(hm);
    const double v = fit.sigma_fit * fit.sigma_fit - l_tilde * l_tilde;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

}  // namespace poscal
