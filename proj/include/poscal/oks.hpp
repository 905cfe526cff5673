#pragma once

#include <optional>
#include <vector>

#include "poscal/types.hpp"

namespace poscal {

/// Keypoint falloff scale l = sqrt(var * area), the denominator scale of the
/// OKS envelope. Throws std::domain_error on non-positive input.
double falloff_scale(double var_k, double area);

/// Gaussian envelope of the end-point error: exp(-|p_hat - p|^2 / (2 l^2)).
double keypoint_oks(const Vec2& p_hat, const Vec2& p, double l);

/// Visibility-weighted mean of per-keypoint envelopes. Depends only on
/// geometry, visibility and area; prediction scores are ignored.
/// Throws NotEvaluableError when no keypoint is visible.
double instance_oks(const PredictedInstance& pred, const GroundTruthInstance& gt,
                    const KeypointSpec& spec);

/// Per-keypoint OKS values for one instance (no visibility weighting).
std::vector<double> keypoint_oks_all(const PredictedInstance& pred,
                                     const GroundTruthInstance& gt,
                                     const KeypointSpec& spec);

/// instance_oks restricted to a keypoint subset: keypoints outside the subset
/// are treated as invisible. Indices are 0-based.
double instance_oks_subset(const PredictedInstance& pred, const GroundTruthInstance& gt,
                           const KeypointSpec& spec, const std::vector<int>& subset);

// Default keypoint-score threshold of the hard aggregation rule.
inline constexpr double kDefaultScoreThreshold = 0.2;

/// Mean of the scores strictly above tau_s. When no score clears the
/// threshold, falls back to the mean of all scores so the instance
/// stays rankable.
double aggregate_threshold(const std::vector<double>& kp_scores, double tau_s);

struct SoftAggregate {
    double value = 0.0;
    bool degenerate = false;  // all visibility weights were zero
};

/// Visibility-weighted score aggregation: sum(v_k s_k) / sum(v_k) over the
/// subset (all keypoints when subset is empty). Zero total weight is flagged
/// rather than thrown; the value is 0 in that case.
SoftAggregate aggregate_soft(const std::vector<double>& kp_scores,
                             const std::vector<double>& kp_vis,
                             const std::vector<int>& subset = {});

}  // namespace poscal
