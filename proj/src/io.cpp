#include "poscal/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace poscal {

using nlohmann::json;

static json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

static double require_number(const json& j, const std::string& field, const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_number())
        throw ParseError(ctx + ": missing or non-numeric field '" + field + "'");
    return j[field].get<double>();
}

KeypointSpec load_keypoint_spec(const std::filesystem::path& path) {
    const json j = parse_file(path);
    KeypointSpec spec;
    spec.count = static_cast<int>(require_number(j, "count", path.string()));
    if (!j.contains("falloff") || !j["falloff"].is_array())
        throw ParseError(path.string() + ": missing 'falloff' array");
    for (const auto& v : j["falloff"]) spec.falloff.push_back(v.get<double>());
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return spec;
}

void save_keypoint_spec(const KeypointSpec& spec, const std::filesystem::path& path) {
    json j;
    j["count"] = spec.count;
    j["falloff"] = spec.falloff;
    atomic_write(path, j.dump(2) + "\n");
}

static void check_keypoint_array(const json& arr, int k, const std::string& ctx) {
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(3 * k))
        throw ParseError(ctx + ": 'keypoints' must be a flat array of " + std::to_string(3 * k) +
                         " numbers (x,y,v triplets)");
    for (const auto& v : arr)
        if (!v.is_number()) throw ParseError(ctx + ": non-numeric keypoint entry");
}

static json instances_root(const json& j, const KeypointSpec& spec, const std::string& ctx) {
    if (!j.is_object() || !j.contains("instances") || !j["instances"].is_array())
        throw ParseError(ctx + ": expected an object with an 'instances' array");
    if (j.contains("keypoint_count") &&
        j["keypoint_count"].get<int>() != spec.count)
        throw ParseError(ctx + ": keypoint_count " + j["keypoint_count"].dump() +
                         " does not match configured spec count " + std::to_string(spec.count));
    return j["instances"];
}

std::vector<GroundTruthInstance> load_ground_truth(const std::filesystem::path& path,
                                                   const KeypointSpec& spec) {
    const json root = parse_file(path);
    const json arr = instances_root(root, spec, path.string());
    std::vector<GroundTruthInstance> out;
    std::set<std::int64_t> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& j = arr[i];
        const std::string ctx = path.string() + " instance " + std::to_string(i);
        GroundTruthInstance g;
        g.id = static_cast<std::int64_t>(require_number(j, "id", ctx));
        if (!seen.insert(g.id).second)
            throw ParseError(ctx + ": duplicate id " + std::to_string(g.id));
        g.area = require_number(j, "area", ctx);
        if (!(g.area > 0.0)) throw ParseError(ctx + ": area must be > 0");
        if (!j.contains("keypoints")) throw ParseError(ctx + ": missing 'keypoints'");
        const json& kps = j["keypoints"];
        check_keypoint_array(kps, spec.count, ctx);
        for (int k = 0; k < spec.count; ++k) {
            const auto base = static_cast<std::size_t>(3 * k);
            g.keypoints.push_back({kps[base].get<double>(), kps[base + 1].get<double>()});
            g.visibility.push_back(kps[base + 2].get<double>() > 0.0);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<PredictedInstance> load_predictions(const std::filesystem::path& path,
                                                const KeypointSpec& spec) {
    const json root = parse_file(path);
    const json arr = instances_root(root, spec, path.string());
    std::vector<PredictedInstance> out;
    std::set<std::int64_t> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& j = arr[i];
        const std::string ctx = path.string() + " instance " + std::to_string(i);
        PredictedInstance p;
        p.id = static_cast<std::int64_t>(require_number(j, "id", ctx));
        if (!seen.insert(p.id).second)
            throw ParseError(ctx + ": duplicate id " + std::to_string(p.id));
        if (!j.contains("keypoints")) throw ParseError(ctx + ": missing 'keypoints'");
        const json& kps = j["keypoints"];
        check_keypoint_array(kps, spec.count, ctx);
        for (int k = 0; k < spec.count; ++k) {
            const auto base = static_cast<std::size_t>(3 * k);
            p.keypoints.push_back({kps[base].get<double>(), kps[base + 1].get<double>()});
            const double s = kps[base + 2].get<double>();
            if (!(s >= 0.0 && s <= 1.0))
                throw ParseError(ctx + ": keypoint score " + std::to_string(s) +
                                 " outside [0,1]");
            p.kp_scores.push_back(s);
        }
        if (j.contains("sigma")) {
            if (!j["sigma"].is_array() || j["sigma"].size() != static_cast<std::size_t>(spec.count))
                throw ParseError(ctx + ": 'sigma' must have one entry per keypoint");
            for (const auto& v : j["sigma"]) {
                const double s = v.get<double>();
                if (!(s >= 0.0)) throw ParseError(ctx + ": sigma entries must be >= 0");
                p.sigma.push_back(s);
            }
        }
        if (j.contains("score")) {
            p.instance_conf = require_number(j, "score", ctx);
            if (!(p.instance_conf >= 0.0 && p.instance_conf <= 1.0))
                throw ParseError(ctx + ": 'score' outside [0,1]");
        }
        if (j.contains("area")) {
            p.area = require_number(j, "area", ctx);
            if (!(p.area > 0.0)) throw ParseError(ctx + ": 'area' must be > 0");
        }
        out.push_back(std::move(p));
    }
    return out;
}

static json gt_to_json(const GroundTruthInstance& g) {
    json j;
    j["id"] = g.id;
    j["area"] = g.area;
    json kps = json::array();
    for (std::size_t k = 0; k < g.keypoints.size(); ++k) {
        kps.push_back(g.keypoints[k].x);
        kps.push_back(g.keypoints[k].y);
        kps.push_back(g.visibility[k] ? 1.0 : 0.0);
    }
    j["keypoints"] = std::move(kps);
    return j;
}

static json pred_to_json(const PredictedInstance& p) {
    json j;
    j["id"] = p.id;
    json kps = json::array();
    for (std::size_t k = 0; k < p.keypoints.size(); ++k) {
        kps.push_back(p.keypoints[k].x);
        kps.push_back(p.keypoints[k].y);
        kps.push_back(p.kp_scores[k]);
    }
    j["keypoints"] = std::move(kps);
    if (p.has_sigma()) j["sigma"] = p.sigma;
    j["score"] = p.instance_conf;
    if (p.has_area()) j["area"] = p.area;
    return j;
}

void save_ground_truth(const std::vector<GroundTruthInstance>& instances,
                       const KeypointSpec& spec, const std::filesystem::path& path) {
    json root;
    root["keypoint_count"] = spec.count;
    json arr = json::array();
    for (const auto& g : instances) arr.push_back(gt_to_json(g));
    root["instances"] = std::move(arr);
    atomic_write(path, root.dump(2) + "\n");
}

void save_predictions(const std::vector<PredictedInstance>& instances, const KeypointSpec& spec,
                      const std::filesystem::path& path) {
    json root;
    root["keypoint_count"] = spec.count;
    json arr = json::array();
    for (const auto& p : instances) arr.push_back(pred_to_json(p));
    root["instances"] = std::move(arr);
    atomic_write(path, root.dump(2) + "\n");
}

PairedDataset load_dataset(const std::filesystem::path& gt_path,
                           const std::filesystem::path& pred_path, const KeypointSpec& spec) {
    spec.validate();
    auto gts = load_ground_truth(gt_path, spec);
    auto preds = load_predictions(pred_path, spec);

    std::map<std::int64_t, std::size_t> pred_index;
    for (std::size_t i = 0; i < preds.size(); ++i) pred_index[preds[i].id] = i;

    std::set<std::int64_t> gt_ids;
    for (const auto& g : gts) gt_ids.insert(g.id);
    std::string unknown;
    for (const auto& p : preds)
        if (!gt_ids.count(p.id)) unknown += (unknown.empty() ? "" : ", ") + std::to_string(p.id);
    if (!unknown.empty())
        throw AlignmentError("predictions reference unknown ground-truth ids: " + unknown);

    std::string missing;
    PairedDataset ds;
    for (auto& g : gts) {
        const auto it = pred_index.find(g.id);
        if (it == pred_index.end()) {
            missing += (missing.empty() ? "" : ", ") + std::to_string(g.id);
            continue;
        }
        ds.pred.push_back(std::move(preds[it->second]));
        ds.gt.push_back(std::move(g));
    }
    if (!missing.empty())
        throw AlignmentError("ground-truth ids without predictions: " + missing);
    return ds;
}

FeatureSet load_features(const std::filesystem::path& path) {
    const json j = parse_file(path);
    FeatureSet fs;
    fs.feature_dim = static_cast<int>(require_number(j, "feature_dim", path.string()));
    fs.keypoint_count = static_cast<int>(require_number(j, "keypoint_count", path.string()));
    if (!j.contains("instances") || !j["instances"].is_array())
        throw ParseError(path.string() + ": missing 'instances' array");
    for (const auto& inst : j["instances"]) {
        const auto id = static_cast<std::int64_t>(require_number(inst, "id", path.string()));
        std::vector<std::vector<double>> rows;
        if (!inst.contains("features") ||
            inst["features"].size() != static_cast<std::size_t>(fs.keypoint_count))
            throw ParseError(path.string() + ": instance " + std::to_string(id) +
                             " needs one feature row per keypoint");
        for (const auto& row : inst["features"]) {
            if (row.size() != static_cast<std::size_t>(fs.feature_dim))
                throw ParseError(path.string() + ": instance " + std::to_string(id) +
                                 " feature row of wrong length");
            rows.push_back(row.get<std::vector<double>>());
        }
        fs.by_id[id] = std::move(rows);
    }
    return fs;
}

void save_features(const FeatureSet& features, const std::filesystem::path& path) {
    json root;
    root["feature_dim"] = features.feature_dim;
    root["keypoint_count"] = features.keypoint_count;
    json arr = json::array();
    for (const auto& [id, rows] : features.by_id) {
        json inst;
        inst["id"] = id;
        inst["features"] = rows;
        arr.push_back(std::move(inst));
    }
    root["instances"] = std::move(arr);
    atomic_write(path, root.dump(2) + "\n");
}

CalibHead load_calib_head(const std::filesystem::path& path) {
    const json j = parse_file(path);
    CalibHead h;
    h.feature_dim = static_cast<int>(require_number(j, "feature_dim", path.string()));
    h.keypoint_count = static_cast<int>(require_number(j, "keypoint_count", path.string()));
    if (!j.contains("weights") || !j.contains("bias"))
        throw ParseError(path.string() + ": missing 'weights' or 'bias'");
    h.weights = j["weights"].get<std::vector<double>>();
    h.bias = j["bias"].get<std::vector<double>>();
    try {
        h.validate();
    } catch (const std::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return h;
}

void save_calib_head(const CalibHead& head, const std::filesystem::path& path) {
    head.validate();
    json j;
    j["feature_dim"] = head.feature_dim;
    j["keypoint_count"] = head.keypoint_count;
    j["weights"] = head.weights;
    j["bias"] = head.bias;
    atomic_write(path, j.dump(2) + "\n");
}

static FeatureSet benchmark_features(const SynthBenchmark& bench) {
    FeatureSet fs;
    fs.feature_dim = kFeatureDim;
    fs.keypoint_count = bench.config.spec.count;
    for (const auto& inst : bench.instances) fs.by_id[inst.gt.id] = inst.features;
    return fs;
}

void save_benchmark(const SynthBenchmark& bench, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<GroundTruthInstance> gts;
    std::vector<PredictedInstance> preds;
    for (const auto& inst : bench.instances) {
        gts.push_back(inst.gt);
        preds.push_back(inst.pred);
    }
    save_ground_truth(gts, bench.config.spec, dir / "gt.json");
    save_predictions(preds, bench.config.spec, dir / "pred.json");
    save_features(benchmark_features(bench), dir / "features.json");
    save_keypoint_spec(bench.config.spec, dir / "spec.json");
}

std::string benchmark_to_json(const SynthBenchmark& bench) {
    json root;
    root["seed"] = bench.seed;
    json arr = json::array();
    for (const auto& inst : bench.instances) {
        json j;
        j["gt"] = gt_to_json(inst.gt);
        j["pred"] = pred_to_json(inst.pred);
        j["features"] = inst.features;
        j["true_sigma"] = inst.true_sigma;
        arr.push_back(std::move(j));
    }
    root["instances"] = std::move(arr);
    return root.dump();
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["map"] = report.map;
    j["mar"] = report.mar;
    j["per_threshold_ap"] = report.per_threshold_ap;
    j["ause"] = report.ause;
    if (report.pearson)
        j["pearson"] = *report.pearson;
    else
        j["pearson"] = nullptr;
    j["mean_pck"] = report.mean_pck;
    json rel = json::array();
    for (const auto& b : report.reliability) {
        json bj;
        bj["bin_center"] = b.bin_center;
        bj["mean_conf"] = b.mean_conf;
        bj["mean_oks"] = b.mean_oks;
        bj["count"] = b.count;
        rel.push_back(std::move(bj));
    }
    j["reliability"] = std::move(rel);
    j["n_instances"] = report.n_instances;
    j["n_zero_visible"] = report.n_zero_visible;
    return j.dump(2) + "\n";
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    atomic_write(path, report_to_json(report));
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_pr_csv(const std::vector<PrPoint>& points, const std::filesystem::path& path) {
    std::string out = "threshold,recall,precision\n";
    for (const auto& p : points)
        out += csv_num(p.threshold) + "," + csv_num(p.recall) + "," + csv_num(p.precision) + "\n";
    atomic_write(path, out);
}

void write_sparsification_csv(const std::vector<SparsificationPoint>& points,
                              const std::filesystem::path& path) {
    std::string out = "fraction_removed,remaining_error,oracle_error\n";
    for (const auto& p : points)
        out += csv_num(p.fraction_removed) + "," + csv_num(p.remaining_error) + "," +
               csv_num(p.oracle_error) + "\n";
    atomic_write(path, out);
}

void write_reliability_csv(const std::vector<ReliabilityBin>& bins,
                           const std::filesystem::path& path) {
    std::string out = "bin_center,mean_conf,mean_oks\n";
    for (const auto& b : bins)
        out += csv_num(b.bin_center) + "," + csv_num(b.mean_conf) + "," + csv_num(b.mean_oks) +
               "\n";
    atomic_write(path, out);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace poscal
