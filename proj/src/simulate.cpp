#include "poscal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poscal/oks.hpp"

namespace poscal {

std::vector<Vec2> sample_keypoints(const AnnotationModel& model, int n, std::uint64_t seed) {
    model.validate();
    if (n < 1) throw std::domain_error("sample_keypoints: n must be >= 1");
    Rng rng(seed);
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec2 z = rng.next_gaussian_pair();
        out.push_back(model.mu + z * model.sigma);
    }
    return out;
}

McEstimate mc_expected_oks(const Vec2& p_hat, const AnnotationModel& model, double l, int n,
                           std::uint64_t seed) {
    model.validate();
    if (!(l > 0.0)) throw std::domain_error("mc_expected_oks: l must be > 0");
    if (n < 1) throw std::domain_error("mc_expected_oks: n must be >= 1");
    Rng rng(seed);
    // Welford accumulation: a constant sample stream (sigma = 0) yields the
    // envelope value bit-exactly with zero variance.
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 p = model.mu + rng.next_gaussian_pair() * model.sigma;
        const double v = std::exp(-(p_hat - p).norm_sq() / (2.0 * l * l));
        const double d0 = v - mean;
        mean += d0 / (i + 1);
        m2 += d0 * (v - mean);
    }
    McEstimate est;
    est.estimate = mean;
    if (n > 1) est.std_error = std::sqrt(std::max(0.0, m2 / (n - 1)) / n);
    return est;
}

Heatmap mse_optimal_heatmap(const AnnotationModel& model, double l_tilde, const GridDims& grid,
                            int n, std::uint64_t seed) {
    model.validate();
    if (!(l_tilde > 0.0)) throw std::domain_error("mse_optimal_heatmap: l_tilde must be > 0");
    if (n < 1) throw std::domain_error("mse_optimal_heatmap: n must be >= 1");
    Heatmap acc;
    acc.width = grid.width;
    acc.height = grid.height;
    acc.origin = grid.origin;
    acc.pitch = grid.pitch;
    acc.values.assign(static_cast<std::size_t>(grid.width) * grid.height, 0.0);
    Rng rng(seed);
    bool warned = false;
    const double lo_x = grid.origin.x, hi_x = grid.origin.x + grid.pitch * (grid.width - 1);
    const double lo_y = grid.origin.y, hi_y = grid.origin.y + grid.pitch * (grid.height - 1);
    for (int i = 0; i < n; ++i) {
        const Vec2 c = model.mu + rng.next_gaussian_pair() * model.sigma;
        if (c.x < lo_x || c.x > hi_x || c.y < lo_y || c.y > hi_y) warned = true;
        accumulate_heatmap(acc, c, l_tilde, 1.0);
    }
    const double inv_n = 1.0 / n;
    for (double& v : acc.values) v *= inv_n;
    acc.truncation_warning = warned;
    return acc;
}

NllGaussianFit fit_nll_gaussian(const std::vector<Vec2>& samples,
                                std::optional<Vec2> p_hat_fixed) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::domain_error("fit_nll_gaussian: need at least two samples");
    NllGaussianFit fit;
    if (p_hat_fixed) {
        fit.p_hat = *p_hat_fixed;
    } else {
        Vec2 mean{0.0, 0.0};
        for (const Vec2& p : samples) mean = mean + p;
        fit.p_hat = mean * (1.0 / static_cast<double>(n));
    }
    double ss = 0.0;
    for (const Vec2& p : samples) ss += (p - fit.p_hat).norm_sq();
    fit.sigma_hat = std::sqrt(ss / (2.0 * static_cast<double>(n)));
    return fit;
}

static double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    return 0.5 * (hi + v[n / 2 - 1]);
}

NllLaplaceFit fit_nll_laplace(const std::vector<Vec2>& samples,
                              std::optional<Vec2> p_hat_fixed) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::domain_error("fit_nll_laplace: need at least two samples");
    NllLaplaceFit fit;
    if (p_hat_fixed) {
        fit.p_hat = *p_hat_fixed;
    } else {
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = samples[i].x;
            ys[i] = samples[i].y;
        }
        fit.p_hat = {median(std::move(xs)), median(std::move(ys))};
    }
    double l1 = 0.0;
    for (const Vec2& p : samples) l1 += (p - fit.p_hat).l1();
    fit.b_hat = l1 / (2.0 * static_cast<double>(n));
    return fit;
}

ScaledGaussianMse fit_scaled_gaussian_mse(const Heatmap& target, const Vec2& center,
                                          double sigma_sq_lo, double sigma_sq_hi) {
    if (!(target.max_value() > 0.0))
        throw std::domain_error("fit_scaled_gaussian_mse: heatmap has no mass");

    // For a fixed width the best scale is linear least squares, so only the
    // width needs a search. Negated profiled objective (to minimize):
    //   -(sum g*H)^2 / sum g^2.
    auto profile = [&](double sigma_sq) {
        const double inv = 1.0 / (2.0 * sigma_sq);
        double gh = 0.0, gg = 0.0;
        for (int iy = 0; iy < target.height; ++iy) {
            for (int ix = 0; ix < target.width; ++ix) {
                const double g = std::exp(-(target.pixel_center(ix, iy) - center).norm_sq() * inv);
                gh += g * target.at(ix, iy);
                gg += g * g;
            }
        }
        return -(gh * gh) / gg;
    };

    // Coarse log-spaced scan, then golden-section refinement.
    const int coarse = 80;
    const double log_lo = std::log(sigma_sq_lo), log_hi = std::log(sigma_sq_hi);
    int best = 0;
    double best_val = profile(sigma_sq_lo);
    for (int i = 1; i < coarse; ++i) {
        const double s = std::exp(log_lo + (log_hi - log_lo) * i / (coarse - 1));
        const double v = profile(s);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    auto grid_point = [&](int i) {
        i = std::clamp(i, 0, coarse - 1);
        return std::exp(log_lo + (log_hi - log_lo) * i / (coarse - 1));
    };
    double a = std::log(grid_point(best - 1)), b = std::log(grid_point(best + 1));
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = profile(std::exp(x1)), f2 = profile(std::exp(x2));
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = profile(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = profile(std::exp(x2));
        }
    }
    ScaledGaussianMse res;
    res.sigma_sq = std::exp(0.5 * (a + b));
    const double inv = 1.0 / (2.0 * res.sigma_sq);
    double gh = 0.0, gg = 0.0;
    for (int iy = 0; iy < target.height; ++iy) {
        for (int ix = 0; ix < target.width; ++ix) {
            const double g = std::exp(-(target.pixel_center(ix, iy) - center).norm_sq() * inv);
            gh += g * target.at(ix, iy);
            gg += g * g;
        }
    }
    res.scale = gh / gg;
    return res;
}

static double logit(double p) { return std::log(p / (1.0 - p)); }

SynthBenchmark synth_benchmark(const SynthConfig& config, std::uint64_t seed) {
    config.spec.validate();
    if (config.instance_count < 1) throw std::domain_error("synth_benchmark: empty benchmark");
    if (!(config.sigma_min > 0.0 && config.sigma_max >= config.sigma_min))
        throw std::domain_error("synth_benchmark: bad sigma range");
    if (!(config.area_min > 0.0 && config.area_max >= config.area_min))
        throw std::domain_error("synth_benchmark: bad area range");
    if (!(config.visibility_rate > 0.0 && config.visibility_rate <= 1.0))
        throw std::domain_error("synth_benchmark: visibility rate must be in (0,1]");
    if (!(config.feature_noise >= 0.0))
        throw std::domain_error("synth_benchmark: feature noise must be >= 0");

    const int k_count = config.spec.count;
    SynthBenchmark bench;
    bench.config = config;
    bench.seed = seed;
    bench.instances.reserve(static_cast<std::size_t>(config.instance_count));

    Rng root(seed);
    for (int i = 0; i < config.instance_count; ++i) {
        Rng rng = root.substream(static_cast<std::uint64_t>(i));
        SynthInstance inst;
        inst.gt.id = i;
        inst.pred.id = i;
        inst.gt.area = rng.next_uniform(config.area_min, config.area_max);

        inst.gt.keypoints.resize(static_cast<std::size_t>(k_count));
        inst.gt.visibility.resize(static_cast<std::size_t>(k_count));
        inst.pred.keypoints.resize(static_cast<std::size_t>(k_count));
        inst.pred.kp_scores.resize(static_cast<std::size_t>(k_count));
        inst.pred.sigma.resize(static_cast<std::size_t>(k_count));
        inst.true_sigma.resize(static_cast<std::size_t>(k_count));
        inst.features.resize(static_cast<std::size_t>(k_count));

        int visible = 0;
        for (int k = 0; k < k_count; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            const double sigma = rng.next_uniform(config.sigma_min, config.sigma_max);
            const bool vis = rng.next_bernoulli(config.visibility_rate);
            const Vec2 mu{rng.next_uniform(0.0, 256.0), rng.next_uniform(0.0, 192.0)};
            const Vec2 gt_kp = mu + rng.next_gaussian_pair() * sigma;
            Vec2 pred_kp;
            if (config.fixed_delta) {
                const double theta = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
                pred_kp = mu + Vec2{std::cos(theta), std::sin(theta)} * (*config.fixed_delta);
            } else {
                pred_kp = mu + rng.next_gaussian_pair() * sigma;
            }

            inst.true_sigma[ki] = sigma;
            inst.gt.keypoints[ki] = gt_kp;
            inst.gt.visibility[ki] = vis;
            if (vis) ++visible;
            inst.pred.keypoints[ki] = pred_kp;
            inst.pred.sigma[ki] = sigma;
            inst.pred.kp_scores[ki] =
                config.score_mode == ScoreMode::heatmap_max
                    ? heatmap_confidence(sigma, config.l_tilde)
                    : rle_confidence_clamped(sigma / config.sigma_max);

            const double l = falloff_scale(config.spec.falloff[ki], inst.gt.area);
            const double r = (pred_kp - gt_kp).norm() / l;
            const double s_kp = std::exp(-r * r / 2.0);
            auto& f = inst.features[ki];
            f = {r,
                 r * r,
                 logit(std::clamp(s_kp, 1e-3, 1.0 - 1e-3)),
                 sigma,
                 sigma / l,
                 std::sqrt(inst.gt.area) / 100.0,
                 vis ? 1.0 : 0.0};
            if (config.feature_noise > 0.0) {
                for (double& fv : f) fv += config.feature_noise * rng.next_gaussian();
            }
        }
        if (visible == 0) {
            // Keep every instance evaluable.
            const auto ki = static_cast<std::size_t>(
                rng.next_u64() % static_cast<std::uint64_t>(k_count));
            inst.gt.visibility[ki] = true;
        }
        inst.pred.instance_conf = aggregate_threshold(inst.pred.kp_scores, kDefaultScoreThreshold);
        bench.instances.push_back(std::move(inst));
    }
    return bench;
}

double feature_oks_reconstruction(const std::vector<double>& feature) {
    if (feature.size() != static_cast<std::size_t>(kFeatureDim))
        throw std::domain_error("feature_oks_reconstruction: bad feature dim");
    return std::exp(-feature[1] / 2.0);
}

}  // namespace poscal
