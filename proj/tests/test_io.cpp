#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "poscal/io.hpp"
#include "poscal/oks.hpp"
#include "poscal/pipeline.hpp"

using namespace poscal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "poscal_io_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

SynthBenchmark small_bench(int n = 12, std::uint64_t seed = 3) {
    SynthConfig cfg;
    cfg.instance_count = n;
    return synth_benchmark(cfg, seed);
}

}  // namespace

TEST_CASE("keypoint spec round trip") {
    TempDir tmp;
    const KeypointSpec spec = KeypointSpec::coco17();
    save_keypoint_spec(spec, tmp.path / "spec.json");
    const KeypointSpec loaded = load_keypoint_spec(tmp.path / "spec.json");
    CHECK(loaded.count == 17);
    for (int k = 0; k < 17; ++k)
        CHECK(loaded.falloff[static_cast<std::size_t>(k)] ==
              spec.falloff[static_cast<std::size_t>(k)]);
}

TEST_CASE("dataset round trip preserves values") {
    TempDir tmp;
    const SynthBenchmark bench = small_bench();
    save_benchmark(bench, tmp.path);

    const PairedDataset ds =
        load_dataset(tmp.path / "gt.json", tmp.path / "pred.json", bench.config.spec);
    REQUIRE(ds.size() == bench.instances.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.gt[i].id == bench.instances[i].gt.id);
        CHECK(ds.gt[i].area == bench.instances[i].gt.area);
        for (int k = 0; k < 17; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            CHECK(ds.gt[i].keypoints[ki].x == bench.instances[i].gt.keypoints[ki].x);
            CHECK(ds.pred[i].keypoints[ki].y == bench.instances[i].pred.keypoints[ki].y);
            CHECK(ds.pred[i].kp_scores[ki] == bench.instances[i].pred.kp_scores[ki]);
            CHECK(ds.pred[i].sigma[ki] == bench.instances[i].pred.sigma[ki]);
        }
    }
}

TEST_CASE("load_dataset alignment errors") {
    TempDir tmp;
    const KeypointSpec spec = KeypointSpec::uniform(1, 1.0);
    spit(tmp.path / "gt.json",
         R"({"keypoint_count":1,"instances":[
            {"id":1,"area":10.0,"keypoints":[0,0,1]},
            {"id":2,"area":10.0,"keypoints":[1,1,1]},
            {"id":3,"area":10.0,"keypoints":[2,2,1]}]})");
    spit(tmp.path / "pred.json",
         R"({"keypoint_count":1,"instances":[
            {"id":1,"keypoints":[0,0,0.9]},
            {"id":2,"keypoints":[1,1,0.8]},
            {"id":3,"keypoints":[2,2,0.7]}]})");
    const PairedDataset ds = load_dataset(tmp.path / "gt.json", tmp.path / "pred.json", spec);
    CHECK(ds.size() == 3);

    // prediction with an unknown id is rejected, naming the id
    spit(tmp.path / "pred_unknown.json",
         R"({"keypoint_count":1,"instances":[
            {"id":1,"keypoints":[0,0,0.9]},
            {"id":2,"keypoints":[1,1,0.8]},
            {"id":99,"keypoints":[2,2,0.7]}]})");
    try {
        load_dataset(tmp.path / "gt.json", tmp.path / "pred_unknown.json", spec);
        FAIL("expected AlignmentError");
    } catch (const AlignmentError& e) {
        CHECK(std::string(e.what()).find("99") != std::string::npos);
    }

    // missing prediction is an alignment error too
    spit(tmp.path / "pred_missing.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"keypoints":[0,0,0.9]}]})");
    CHECK_THROWS_AS(load_dataset(tmp.path / "gt.json", tmp.path / "pred_missing.json", spec),
                    AlignmentError);
}

TEST_CASE("schema violations raise parse errors") {
    TempDir tmp;
    const KeypointSpec spec = KeypointSpec::uniform(2, 1.0);

    // keypoint count mismatch with the configured spec
    spit(tmp.path / "bad_k.json",
         R"({"keypoint_count":3,"instances":[]})");
    CHECK_THROWS_AS(load_ground_truth(tmp.path / "bad_k.json", spec), ParseError);

    // wrong keypoint array length
    spit(tmp.path / "bad_len.json",
         R"({"keypoint_count":2,"instances":[{"id":1,"area":4.0,"keypoints":[0,0,1]}]})");
    CHECK_THROWS_AS(load_ground_truth(tmp.path / "bad_len.json", spec), ParseError);

    // duplicate ids
    spit(tmp.path / "dup.json",
         R"({"keypoint_count":2,"instances":[
            {"id":7,"area":4.0,"keypoints":[0,0,1,1,1,1]},
            {"id":7,"area":4.0,"keypoints":[0,0,1,1,1,1]}]})");
    CHECK_THROWS_AS(load_ground_truth(tmp.path / "dup.json", spec), ParseError);

    // score outside [0,1]
    spit(tmp.path / "bad_score.json",
         R"({"keypoint_count":2,"instances":[{"id":1,"keypoints":[0,0,0.5,1,1,1.5]}]})");
    CHECK_THROWS_AS(load_predictions(tmp.path / "bad_score.json", spec), ParseError);

    // missing keypoints field
    spit(tmp.path / "no_kps.json",
         R"({"keypoint_count":2,"instances":[{"id":1,"area":4.0}]})");
    CHECK_THROWS_AS(load_ground_truth(tmp.path / "no_kps.json", spec), ParseError);

    // malformed JSON
    spit(tmp.path / "broken.json", "{not json");
    CHECK_THROWS_AS(load_ground_truth(tmp.path / "broken.json", spec), ParseError);
}

TEST_CASE("feature and head round trips") {
    TempDir tmp;
    FeatureSet fs_in;
    fs_in.feature_dim = 3;
    fs_in.keypoint_count = 2;
    fs_in.by_id[4] = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    fs_in.by_id[9] = {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}};
    save_features(fs_in, tmp.path / "features.json");
    const FeatureSet fs_out = load_features(tmp.path / "features.json");
    CHECK(fs_out.feature_dim == 3);
    CHECK(fs_out.by_id.at(4)[1][2] == 0.6);
    CHECK(fs_out.by_id.at(9)[0][0] == 1.0);

    CalibHead head = CalibHead::zeros(3, 2);
    head.weights[0] = 0.25;
    head.bias[3] = -1.5;
    save_calib_head(head, tmp.path / "head.json");
    const CalibHead loaded = load_calib_head(tmp.path / "head.json");
    CHECK(loaded.weights[0] == 0.25);
    CHECK(loaded.bias[3] == -1.5);
    CHECK(loaded.feature_dim == 3);
}

TEST_CASE("writers are byte-deterministic") {
    TempDir tmp;
    const SynthBenchmark bench = small_bench();
    save_benchmark(bench, tmp.path / "a");
    save_benchmark(bench, tmp.path / "b");
    for (const char* name : {"gt.json", "pred.json", "features.json", "spec.json"})
        CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
}

TEST_CASE("rescore worked example and idempotence") {
    TempDir tmp;
    // maxval 0.5 with l_tilde 2 -> sigma 2; area 16 with var 1 -> l = 4 -> 0.8
    const KeypointSpec spec = KeypointSpec::uniform(1, 1.0);
    spit(tmp.path / "gt.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"area":16.0,"keypoints":[0,0,1]}]})");
    spit(tmp.path / "pred.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"keypoints":[0,0,0.5]}]})");
    const PairedDataset ds = load_dataset(tmp.path / "gt.json", tmp.path / "pred.json", spec);

    PipelineOptions opt;
    opt.l_tilde = 2.0;
    const auto rescored = rescore_predictions(ds, spec, opt);
    REQUIRE(rescored.size() == 1);
    CHECK(rescored[0].kp_scores[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(rescored[0].sigma[0] == doctest::Approx(2.0).epsilon(1e-12));
    // geometry untouched
    CHECK(rescored[0].keypoints[0].x == 0.0);

    // applying the rescore twice is a no-op (sigma is carried along)
    save_predictions(rescored, spec, tmp.path / "rescored.json");
    const PairedDataset ds2 =
        load_dataset(tmp.path / "gt.json", tmp.path / "rescored.json", spec);
    const auto again = rescore_predictions(ds2, spec, opt);
    save_predictions(again, spec, tmp.path / "rescored2.json");
    CHECK(slurp(tmp.path / "rescored.json") == slurp(tmp.path / "rescored2.json"));
}

TEST_CASE("rescore area source switch changes the output") {
    TempDir tmp;
    const KeypointSpec spec = KeypointSpec::uniform(1, 1.0);
    spit(tmp.path / "gt.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"area":16.0,"keypoints":[0,0,1]}]})");
    spit(tmp.path / "pred.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"keypoints":[0,0,0.5],"area":4.0}]})");
    const PairedDataset ds = load_dataset(tmp.path / "gt.json", tmp.path / "pred.json", spec);

    PipelineOptions opt;
    const auto with_gt = rescore_predictions(ds, spec, opt);
    opt.area_source = AreaSource::pred;
    const auto with_pred = rescore_predictions(ds, spec, opt);
    CHECK(with_gt[0].kp_scores[0] != with_pred[0].kp_scores[0]);
    // sigma 2, l = 2 under the predicted area: score one half
    CHECK(with_pred[0].kp_scores[0] == doctest::Approx(0.5).epsilon(1e-12));

    // missing predicted area is a configuration error
    spit(tmp.path / "pred_noarea.json",
         R"({"keypoint_count":1,"instances":[{"id":1,"keypoints":[0,0,0.5]}]})");
    const PairedDataset ds2 =
        load_dataset(tmp.path / "gt.json", tmp.path / "pred_noarea.json", spec);
    CHECK_THROWS_AS(rescore_predictions(ds2, spec, opt), ConfigError);
}

TEST_CASE("evaluate handles zero-visible instances") {
    TempDir tmp;
    const KeypointSpec spec = KeypointSpec::uniform(1, 1.0);
    spit(tmp.path / "gt.json",
         R"({"keypoint_count":1,"instances":[
            {"id":1,"area":4.0,"keypoints":[0,0,1]},
            {"id":2,"area":4.0,"keypoints":[5,5,0]},
            {"id":3,"area":4.0,"keypoints":[1,2,1]}]})");
    spit(tmp.path / "pred.json",
         R"({"keypoint_count":1,"instances":[
            {"id":1,"keypoints":[0,0,0.9]},
            {"id":2,"keypoints":[5,5,0.8]},
            {"id":3,"keypoints":[1,2,0.7]}]})");
    const PairedDataset ds = load_dataset(tmp.path / "gt.json", tmp.path / "pred.json", spec);
    PipelineOptions opt;
    opt.mode = ConfidenceMode::heatmap_max;
    const auto conf = build_confidence(ds, spec, opt);
    const EvalReport report = evaluate(ds, spec, conf, opt);
    CHECK(report.n_instances == 2);
    CHECK(report.n_zero_visible == 1);
    CHECK(report.mar == doctest::Approx(1.0));  // both evaluable predictions are exact
}

TEST_CASE("evaluate oracle mode dominates constant mode") {
    const SynthBenchmark bench = small_bench(80, 11);
    PairedDataset ds;
    for (const auto& inst : bench.instances) {
        ds.gt.push_back(inst.gt);
        ds.pred.push_back(inst.pred);
    }
    PipelineOptions opt;
    opt.mode = ConfidenceMode::constant;
    const EvalReport constant = evaluate(ds, bench.config.spec,
                                         build_confidence(ds, bench.config.spec, opt), opt);
    opt.mode = ConfidenceMode::oracle;
    const EvalReport oracle = evaluate(ds, bench.config.spec,
                                       build_confidence(ds, bench.config.spec, opt), opt);
    CHECK(oracle.map >= constant.map);
    CHECK(oracle.mar == constant.mar);
}

TEST_CASE("part-subset evaluation restricts scoring and OKS") {
    const KeypointSpec spec = KeypointSpec::uniform(2, 1.0);
    PairedDataset ds;
    GroundTruthInstance gt;
    gt.id = 1;
    gt.area = 1.0;
    gt.keypoints = {{0, 0}, {10, 0}};
    gt.visibility = {true, true};
    PredictedInstance pred;
    pred.id = 1;
    pred.keypoints = {{0, 0}, {99, 0}};  // second keypoint is hopeless
    pred.kp_scores = {0.9, 0.9};
    ds.gt.push_back(gt);
    ds.pred.push_back(pred);

    PipelineOptions opt;
    opt.subset = {0};
    const auto oks = dataset_oks(ds, spec, opt.subset);
    REQUIRE(oks[0].has_value());
    CHECK(*oks[0] == doctest::Approx(1.0));  // the bad keypoint is outside the part

    opt.subset = {1};
    const auto oks2 = dataset_oks(ds, spec, opt.subset);
    CHECK(*oks2[0] == doctest::Approx(0.0).epsilon(1e-9));
}
