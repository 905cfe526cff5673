#pragma once

#include "poscal/types.hpp"

namespace poscal {

/// Gaussian annotation-noise model: the ground-truth keypoint is treated as
/// a draw from N(mu, sigma^2 I).
struct AnnotationModel {
    Vec2 mu;
    double sigma = 0.0;  // isotropic std in pixels, >= 0

    void validate() const {
        if (!(sigma >= 0.0)) throw std::domain_error("AnnotationModel: sigma must be >= 0");
    }
};

/// Parameters of the confidence estimators under study.
struct EstimatorParams {
    double l_tilde = 2.0;    // rendered-heatmap std, > 0
    double delta_hat = 0.0;  // prediction deviation |p_hat - mu|, >= 0
    double o_hat = 1.0;      // heatmap scale factor, > 0
    double b_hat = 0.0;      // Laplace scale, >= 0
};

/// Expected OKS of a fixed prediction under annotation noise:
///   l^2/(sigma^2+l^2) * exp(-|p_hat-mu|^2 / (2(sigma^2+l^2))).
double expected_oks(const Vec2& p_hat, const AnnotationModel& model, double l);

/// Expected OKS of a perfect prediction (p_hat == mu): l^2/(sigma^2+l^2).
double oracle_score(double sigma, double l);

/// Expected peak value of an MSE-optimal heatmap rendered with std l_tilde:
/// l_tilde^2/(sigma^2+l_tilde^2). This is the maxval heuristic's limit.
double heatmap_confidence(double sigma, double l_tilde);

/// Heuristic regression confidence 1 - sigma. May be negative; callers that
/// need a score in [0,1] use the clamped variant.
double rle_confidence(double sigma);
double rle_confidence_clamped(double sigma);

/// Inversion of heatmap_confidence: sigma = l_tilde * sqrt(1/s - 1).
/// Scores >= 1 map to sigma = 0.
double sigma_from_maxval(double s_det, double l_tilde);

/// Closed-form rescoring: expected OKS expressed through (sigma, l, delta).
/// rescore(sigma, l, 0) == oracle_score(sigma, l).
double rescore(double sigma, double l, double delta_hat);

struct ImperfectRegression {
    double sigma_star = 0.0;  // sqrt(sigma^2 + delta^2/2)
    double score = 0.0;       // 1 - sigma_star
};

/// NLL-optimal scale of a Gaussian regression head whose mean is pinned at
/// distance delta_hat from mu. The confidence drops below 1 - sigma for any
/// delta_hat > 0.
ImperfectRegression imperfect_regression(double sigma, double delta_hat);

struct ImperfectDetection {
    double sigma_star_sq = 0.0;  // sqrt(sigma_tilde^4 + delta^4/4) + delta^2/2
    double o_star = 0.0;         // score form 2 l_tilde^2 / (sigma_tilde^2 + sigma_star_sq)
    double scale = 0.0;          // MSE-stationary amplitude, o_star * exp(-delta^2/(2 sbar^2))
};

/// MSE-optimal scaled Gaussian approximation of the expected heatmap when the
/// predicted center is off by delta_hat. sigma_star_sq and scale are the
/// stationary point of the pixel-wise MSE; o_star is the simplified score
/// form, equal to scale (and to heatmap_confidence) when delta_hat = 0.
ImperfectDetection imperfect_detection(double sigma, double l_tilde, double delta_hat);

struct LaplaceMisspec {
    double b_star = 0.0;  // sqrt(2/pi) * sigma
    double score = 0.0;   // 1 - b_star
};

/// NLL-optimal Laplace scale on Gaussian annotation noise. The resulting
/// confidence 1 - b_star sits above the well-specified 1 - sigma.
LaplaceMisspec laplace_misspec(double sigma);

struct RankingCounterexample {
    double sigma1 = 0.0, l1 = 0.0;
    double sigma2 = 0.0, l2 = 0.0;
    double heatmap_conf1 = 0.0, heatmap_conf2 = 0.0;
    double oracle1 = 0.0, oracle2 = 0.0;
};

/// Two instances with near-equal sigma but different falloff scales, where
/// the fixed-l_tilde heatmap confidence ranks them opposite to the expected
/// OKS. Demonstrates why maxval ranking misorders across instance sizes.
RankingCounterexample misordered_ranking_example(double l_tilde = 2.0);

}  // namespace poscal
