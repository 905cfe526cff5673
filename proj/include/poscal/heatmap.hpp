#pragma once

#include <vector>

#include "poscal/types.hpp"

namespace poscal {

/// Dense W x H grid of nonnegative pseudo-likelihood values. Pixel (ix, iy)
/// sits at world coordinates origin + pitch * (ix, iy); values are stored
/// row-major (iy * width + ix).
struct Heatmap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    Vec2 origin{0.0, 0.0};
    double pitch = 1.0;
    // Set when the rendered mass at the border exceeds 1e-6 of the peak or
    // the center fell outside the grid.
    bool truncation_warning = false;

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * width + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * width + ix]; }
    Vec2 pixel_center(int ix, int iy) const {
        return {origin.x + pitch * ix, origin.y + pitch * iy};
    }
    double max_value() const;
    double sum() const;
};

struct GridDims {
    int width = 64;
    int height = 48;
    Vec2 origin{0.0, 0.0};
    double pitch = 1.0;
};

/// Unit-peak Gaussian bump: value(m) = exp(-|m - center|^2 / (2 l_tilde^2)).
Heatmap render_heatmap(const Vec2& center, double l_tilde, const GridDims& grid);

/// Accumulate a rendered Gaussian into an existing map (used by the
/// Monte-Carlo averager; separable row/column evaluation).
void accumulate_heatmap(Heatmap& acc, const Vec2& center, double l_tilde, double weight);

struct GaussianFit {
    Vec2 mean;
    double sigma_fit = 0.0;
    double scale = 0.0;
};

/// Best-fit scaled isotropic Gaussian. Weighted least squares on log-values
/// over pixels above 1% of the peak; falls back to moment matching when
/// fewer than 9 pixels qualify. Exact on synthetically rendered Gaussians up
/// to grid quantization. Throws std::domain_error on an all-zero map.
GaussianFit fit_gaussian(const Heatmap& hm);

/// Sigma extraction for rescoring from a predicted heatmap: the fitted std
/// satisfies sigma_fit^2 = sigma^2 + l_tilde^2 for MSE-trained maps, so
/// sigma = sqrt(max(0, sigma_fit^2 - l_tilde^2)).
double sigma_from_heatmap_fit(const Heatmap& hm, double l_tilde);

}  // namespace poscal
