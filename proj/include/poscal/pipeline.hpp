#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poscal/ccnet.hpp"
#include "poscal/io.hpp"
#include "poscal/oks.hpp"
#include "poscal/ranking.hpp"
#include "poscal/types.hpp"

namespace poscal {

enum class ConfidenceMode { constant, heatmap_max, rle, rescored, oracle, ccnet };

ConfidenceMode parse_confidence_mode(const std::string& name);
std::string confidence_mode_name(ConfidenceMode mode);

enum class AggMode { threshold, soft };
enum class AreaSource { gt, pred };
enum class SigmaSource { auto_detect, sigma_field, maxval };
enum class AuseErrorSource { oks, pck };  // 1-OKS (default) or 1-PCK errors

struct PipelineOptions {
    ConfidenceMode mode = ConfidenceMode::heatmap_max;
    AggMode agg = AggMode::threshold;
    double tau_s = kDefaultScoreThreshold;
    double l_tilde = 2.0;
    double rle_norm = 1.0;  // sigma divisor for the rle mode, which expects
                            // normalized-coordinate sigmas
    AuseErrorSource ause_on = AuseErrorSource::oks;
    AreaSource area_source = AreaSource::gt;
    SigmaSource sigma_source = SigmaSource::auto_detect;
    std::vector<int> subset;  // 0-based keypoint indices; empty = all
    EvalConfig eval;
};

/// Instance confidence under the configured mode. The ccnet mode needs
/// features and a trained head; rle and rescored modes need a sigma source.
std::vector<double> build_confidence(const PairedDataset& ds, const KeypointSpec& spec,
                                     const PipelineOptions& opt,
                                     const FeatureSet* features = nullptr,
                                     const CalibHead* head = nullptr);

/// Per-instance OKS (subset-aware); zero-visible instances yield nullopt.
std::vector<std::optional<double>> dataset_oks(const PairedDataset& ds, const KeypointSpec& spec,
                                               const std::vector<int>& subset);

/// Full evaluation: mAP/mAR/AUSE/Pearson/PCK, reliability and curve points.
/// Instances with no visible keypoint (within the subset) are excluded from
/// every metric and counted in n_zero_visible.
EvalReport evaluate(const PairedDataset& ds, const KeypointSpec& spec,
                    const std::vector<double>& conf, const PipelineOptions& opt);

/// Closed-form rescoring: replaces keypoint scores with
/// rescore(sigma_k, l_k, 0) and re-aggregates the instance score. Keypoint
/// geometry is untouched; the extracted sigmas are written back so the
/// operation is idempotent.
std::vector<PredictedInstance> rescore_predictions(const PairedDataset& ds,
                                                   const KeypointSpec& spec,
                                                   const PipelineOptions& opt);

}  // namespace poscal
