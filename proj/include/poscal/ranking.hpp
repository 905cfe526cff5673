#pragma once

#include <optional>
#include <vector>

#include "poscal/types.hpp"

namespace poscal {

struct EvalConfig {
    std::vector<double> thresholds;  // OKS thresholds, strictly increasing
    double pck_tau = 0.5;
    int ause_steps = 20;
    int reliability_bins = 10;

    static std::vector<double> default_thresholds();  // 0.50, 0.55, ..., 0.95
    EvalConfig() : thresholds(default_thresholds()) {}
    void validate() const;
};

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct ApResult {
    double map = 0.0;
    std::vector<double> per_threshold;
    std::vector<PrPoint> pr_points;
};

struct SparsificationPoint {
    double fraction_removed = 0.0;
    double remaining_error = 0.0;
    double oracle_error = 0.0;
};

struct SparsificationCurve {
    double ause = 0.0;
    std::vector<SparsificationPoint> points;
};

struct ReliabilityBin {
    double bin_center = 0.0;
    double mean_conf = 0.0;
    double mean_oks = 0.0;
    int count = 0;
};

struct EvalReport {
    double map = 0.0;
    double mar = 0.0;
    std::vector<double> per_threshold_ap;
    std::vector<PrPoint> pr_points;
    double ause = 0.0;
    std::optional<double> pearson;      // absent when a series has zero variance
    double mean_pck = 0.0;
    std::vector<ReliabilityBin> reliability;
    std::vector<SparsificationPoint> sparsification;
    int n_instances = 0;
    int n_zero_visible = 0;
};

/// Ranking-independent average recall over the configured OKS thresholds:
/// mean over thresholds of the fraction of instances whose OKS clears it.
double average_recall(const std::vector<double>& oks, const EvalConfig& cfg);

/// Ranking-dependent average precision. Instances are sorted by confidence,
/// descending, ties broken by original index (stable sort); each instance
/// that clears a threshold contributes precision-at-its-rank / N.
ApResult average_precision(const std::vector<double>& oks, const std::vector<double>& conf,
                           const EvalConfig& cfg);

/// 101-point interpolated (COCO-style) variant, provided for cross-checking.
/// Not the default scoring rule.
double average_precision_interpolated(const std::vector<double>& oks,
                                      const std::vector<double>& conf, const EvalConfig& cfg);

/// Fraction of visible keypoints with end-point error / norm <= tau.
double pck(const PredictedInstance& pred, const GroundTruthInstance& gt, double norm,
           double tau);

/// Sparsification curve and its area: remove the f least-confident fraction
/// for f = 0, 1/steps, ..., (steps-1)/steps, track the mean remaining error,
/// subtract the oracle curve (removal by true error, descending), and average
/// the gap (left-endpoint Riemann sum). Ties follow original input order.
SparsificationCurve ause_curve(const std::vector<double>& errors,
                               const std::vector<double>& conf, int steps);
double ause(const std::vector<double>& errors, const std::vector<double>& conf, int steps);

/// Product-moment correlation. Empty when either series has zero variance.
std::optional<double> pearson(const std::vector<double>& conf, const std::vector<double>& oks);

/// Equal-width-bin reliability curve over conf in [0,1]; empty bins omitted.
std::vector<ReliabilityBin> reliability_curve(const std::vector<double>& conf,
                                              const std::vector<double>& oks, int bins);

/// Mean |mean_conf - mean_oks| over populated reliability bins.
double reliability_deviation(const std::vector<ReliabilityBin>& bins);

}  // namespace poscal
