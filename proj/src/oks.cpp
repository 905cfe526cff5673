#include "poscal/oks.hpp"

#include <algorithm>
#include <numeric>

namespace poscal {

void KeypointSpec::validate() const {
    if (count < 1) throw std::domain_error("KeypointSpec: count must be >= 1");
    if (static_cast<int>(falloff.size()) != count)
        throw std::domain_error("KeypointSpec: falloff length != count");
    for (double v : falloff)
        if (!(v > 0.0)) throw std::domain_error("KeypointSpec: falloff constants must be > 0");
}

KeypointSpec KeypointSpec::coco17() {
    static const double sigmas[17] = {
        0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
        0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
    KeypointSpec s;
    s.count = 17;
    s.falloff.reserve(17);
    for (double sg : sigmas) s.falloff.push_back(4.0 * sg * sg);
    return s;
}

KeypointSpec KeypointSpec::uniform(int k, double var) {
    KeypointSpec s;
    s.count = k;
    s.falloff.assign(static_cast<std::size_t>(k), var);
    s.validate();
    return s;
}

int GroundTruthInstance::visible_count() const {
    return static_cast<int>(std::count(visibility.begin(), visibility.end(), true));
}

double falloff_scale(double var_k, double area) {
    if (!(var_k > 0.0)) throw std::domain_error("falloff_scale: var_k must be > 0");
    if (!(area > 0.0)) throw std::domain_error("falloff_scale: area must be > 0");
    return std::sqrt(var_k * area);
}

double keypoint_oks(const Vec2& p_hat, const Vec2& p, double l) {
    if (!(l > 0.0)) throw std::domain_error("keypoint_oks: l must be > 0");
    return std::exp(-(p_hat - p).norm_sq() / (2.0 * l * l));
}

static void check_shapes(const PredictedInstance& pred, const GroundTruthInstance& gt,
                         const KeypointSpec& spec) {
    const auto k = static_cast<std::size_t>(spec.count);
    if (gt.keypoints.size() != k || gt.visibility.size() != k || pred.keypoints.size() != k)
        throw std::domain_error("instance_oks: keypoint count mismatch with spec");
    if (!(gt.area > 0.0)) throw std::domain_error("instance_oks: area must be > 0");
}

std::vector<double> keypoint_oks_all(const PredictedInstance& pred,
                                     const GroundTruthInstance& gt,
                                     const KeypointSpec& spec) {
    check_shapes(pred, gt, spec);
    std::vector<double> out(static_cast<std::size_t>(spec.count));
    for (int k = 0; k < spec.count; ++k) {
        const double l = falloff_scale(spec.falloff[static_cast<std::size_t>(k)], gt.area);
        out[static_cast<std::size_t>(k)] =
            keypoint_oks(pred.keypoints[static_cast<std::size_t>(k)],
                         gt.keypoints[static_cast<std::size_t>(k)], l);
    }
    return out;
}

double instance_oks(const PredictedInstance& pred, const GroundTruthInstance& gt,
                    const KeypointSpec& spec) {
    check_shapes(pred, gt, spec);
    double sum = 0.0;
    int visible = 0;
    for (int k = 0; k < spec.count; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        if (!gt.visibility[ki]) continue;
        const double l = falloff_scale(spec.falloff[ki], gt.area);
        sum += keypoint_oks(pred.keypoints[ki], gt.keypoints[ki], l);
        ++visible;
    }
    if (visible == 0) throw NotEvaluableError("instance_oks: no visible keypoint");
    return sum / visible;
}

double instance_oks_subset(const PredictedInstance& pred, const GroundTruthInstance& gt,
                           const KeypointSpec& spec, const std::vector<int>& subset) {
    if (subset.empty()) return instance_oks(pred, gt, spec);
    GroundTruthInstance masked = gt;
    std::vector<bool> keep(masked.visibility.size(), false);
    for (int idx : subset) {
        if (idx < 0 || idx >= spec.count)
            throw std::domain_error("instance_oks_subset: index out of range");
        keep[static_cast<std::size_t>(idx)] = true;
    }
    for (std::size_t k = 0; k < keep.size(); ++k)
        if (!keep[k]) masked.visibility[k] = false;
    return instance_oks(pred, masked, spec);
}

double aggregate_threshold(const std::vector<double>& kp_scores, double tau_s) {
    if (kp_scores.empty()) throw std::domain_error("aggregate_threshold: empty score list");
    double sum = 0.0;
    int n = 0;
    for (double s : kp_scores) {
        if (s > tau_s) {
            sum += s;
            ++n;
        }
    }
    if (n == 0) {
        // Nothing clears the threshold: stay rankable via the plain mean.
        return std::accumulate(kp_scores.begin(), kp_scores.end(), 0.0) /
               static_cast<double>(kp_scores.size());
    }
    return sum / n;
}

SoftAggregate aggregate_soft(const std::vector<double>& kp_scores,
                             const std::vector<double>& kp_vis,
                             const std::vector<int>& subset) {
    if (kp_scores.size() != kp_vis.size())
        throw std::domain_error("aggregate_soft: score/visibility length mismatch");
    if (kp_scores.empty()) throw std::domain_error("aggregate_soft: empty score list");

    std::vector<int> idx = subset;
    if (idx.empty()) {
        idx.resize(kp_scores.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    }
    double num = 0.0, den = 0.0;
    for (int k : idx) {
        if (k < 0 || k >= static_cast<int>(kp_scores.size()))
            throw std::domain_error("aggregate_soft: subset index out of range");
        const auto ki = static_cast<std::size_t>(k);
        num += kp_vis[ki] * kp_scores[ki];
        den += kp_vis[ki];
    }
    if (den <= 0.0) return {0.0, true};
    return {num / den, false};
}

}  // namespace poscal
