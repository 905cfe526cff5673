#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "poscal/ccnet.hpp"
#include "poscal/ranking.hpp"
#include "poscal/simulate.hpp"
#include "poscal/types.hpp"

namespace poscal {

/// Ground truth and predictions aligned 1:1 by id, in ground-truth file order.
struct PairedDataset {
    std::vector<GroundTruthInstance> gt;
    std::vector<PredictedInstance> pred;

    std::size_t size() const { return gt.size(); }
};

/// Per-instance, per-keypoint feature vectors keyed by instance id.
struct FeatureSet {
    int feature_dim = 0;
    int keypoint_count = 0;
    std::map<std::int64_t, std::vector<std::vector<double>>> by_id;
};

KeypointSpec load_keypoint_spec(const std::filesystem::path& path);
void save_keypoint_spec(const KeypointSpec& spec, const std::filesystem::path& path);

std::vector<GroundTruthInstance> load_ground_truth(const std::filesystem::path& path,
                                                   const KeypointSpec& spec);
std::vector<PredictedInstance> load_predictions(const std::filesystem::path& path,
                                                const KeypointSpec& spec);
void save_ground_truth(const std::vector<GroundTruthInstance>& instances,
                       const KeypointSpec& spec, const std::filesystem::path& path);
void save_predictions(const std::vector<PredictedInstance>& instances, const KeypointSpec& spec,
                      const std::filesystem::path& path);

/// Parse both files and align predictions to ground truth by id. Missing or
/// unknown prediction ids raise AlignmentError naming them.
PairedDataset load_dataset(const std::filesystem::path& gt_path,
                           const std::filesystem::path& pred_path, const KeypointSpec& spec);

FeatureSet load_features(const std::filesystem::path& path);
void save_features(const FeatureSet& features, const std::filesystem::path& path);

CalibHead load_calib_head(const std::filesystem::path& path);
void save_calib_head(const CalibHead& head, const std::filesystem::path& path);

/// Benchmark serialization into the shared instance schema (gt.json,
/// pred.json, features.json under dir).
void save_benchmark(const SynthBenchmark& bench, const std::filesystem::path& dir);

/// JSON string of a benchmark (used by determinism checks).
std::string benchmark_to_json(const SynthBenchmark& bench);

std::string report_to_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);

void write_pr_csv(const std::vector<PrPoint>& points, const std::filesystem::path& path);
void write_sparsification_csv(const std::vector<SparsificationPoint>& points,
                              const std::filesystem::path& path);
void write_reliability_csv(const std::vector<ReliabilityBin>& bins,
                           const std::filesystem::path& path);

/// Single-writer atomic file write (temp file + rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Fixed-format float for CSV rows (deterministic across runs).
std::string csv_num(double v);

}  // namespace poscal
