#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "poscal/calib.hpp"
#include "poscal/heatmap.hpp"
#include "poscal/rng.hpp"
#include "poscal/types.hpp"

namespace poscal {

/// n i.i.d. annotation draws from N(mu, sigma^2 I), deterministic per seed.
std::vector<Vec2> sample_keypoints(const AnnotationModel& model, int n, std::uint64_t seed);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Brute-force oracle for the expected OKS: sample mean and standard error
/// of the keypoint envelope over annotation draws.
McEstimate mc_expected_oks(const Vec2& p_hat, const AnnotationModel& model, double l, int n,
                           std::uint64_t seed);

/// Pixel-wise mean of rendered heatmaps over n annotation samples. As n
/// grows its peak tends to l_tilde^2/(sigma^2+l_tilde^2) and its fitted std
/// to sqrt(sigma^2 + l_tilde^2).
Heatmap mse_optimal_heatmap(const AnnotationModel& model, double l_tilde, const GridDims& grid,
                            int n, std::uint64_t seed);

struct NllGaussianFit {
    Vec2 p_hat;
    double sigma_hat = 0.0;
};

/// Maximum-likelihood isotropic Gaussian (mean free, or pinned when
/// p_hat_fixed is given). sigma_hat^2 = mean squared deviation / 2.
NllGaussianFit fit_nll_gaussian(const std::vector<Vec2>& samples,
                                std::optional<Vec2> p_hat_fixed = std::nullopt);

struct NllLaplaceFit {
    Vec2 p_hat;
    double b_hat = 0.0;
};

/// Maximum-likelihood isotropic Laplace: per-axis median location (or the
/// pinned point), b_hat = mean L1 deviation / 2.
NllLaplaceFit fit_nll_laplace(const std::vector<Vec2>& samples,
                              std::optional<Vec2> p_hat_fixed = std::nullopt);

struct ScaledGaussianMse {
    double scale = 0.0;
    double sigma_sq = 0.0;
};

/// Numeric MSE minimization of a scaled Gaussian with pinned center against
/// an arbitrary heatmap: the scale is profiled out in closed form and the
/// width found by golden-section search. Oracle for imperfect_detection.
ScaledGaussianMse fit_scaled_gaussian_mse(const Heatmap& target, const Vec2& center,
                                          double sigma_sq_lo = 1e-2, double sigma_sq_hi = 1e3);

enum class ScoreMode { heatmap_max, rle };

struct SynthConfig {
    int instance_count = 2000;
    KeypointSpec spec = KeypointSpec::coco17();
    double sigma_min = 0.5;
    double sigma_max = 4.0;
    double area_min = 1024.0;    // 32^2
    double area_max = 25600.0;   // 160^2
    double visibility_rate = 0.85;
    double feature_noise = 0.05;
    double l_tilde = 2.0;
    ScoreMode score_mode = ScoreMode::heatmap_max;
    // When set, predictions are placed at exactly this distance from mu
    // instead of being drawn from the annotation distribution.
    std::optional<double> fixed_delta;
};

inline constexpr int kFeatureDim = 7;

struct SynthInstance {
    GroundTruthInstance gt;
    PredictedInstance pred;
    std::vector<std::vector<double>> features;  // K vectors of kFeatureDim
    std::vector<double> true_sigma;             // per-keypoint annotation std
};

struct SynthBenchmark {
    SynthConfig config;
    std::uint64_t seed = 0;
    std::vector<SynthInstance> instances;
};

/// Deterministic synthetic benchmark: per instance an area, per-keypoint
/// sigmas and visibilities, an annotation draw as ground truth, an
/// independent draw as the prediction, heuristic keypoint scores
/// (heatmap-max or RLE form), and per-keypoint feature vectors that encode
/// the realized scaled error plus configurable noise.
SynthBenchmark synth_benchmark(const SynthConfig& config, std::uint64_t seed);

/// Reconstruction of the keypoint OKS from a noise-free feature vector;
/// with feature_noise = 0 this matches keypoint_oks exactly.
double feature_oks_reconstruction(const std::vector<double>& feature);

}  // namespace poscal
