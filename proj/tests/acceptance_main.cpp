// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criterion 9 drives the installed CLI binary (path from the
// POSCAL_CLI environment variable, falling back to argv[1]).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "poscal/calib.hpp"
#include "poscal/ccnet.hpp"
#include "poscal/io.hpp"
#include "poscal/oks.hpp"
#include "poscal/pipeline.hpp"
#include "poscal/ranking.hpp"
#include "poscal/simulate.hpp"

using namespace poscal;
namespace fs = std::filesystem;

namespace {

int failures = 0;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%d] %-52s %s  (%s)\n", criterion, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_closed_form_grid() {
    const double t0 = now_seconds();
    const std::vector<double> sigmas = {0.0, 0.5, 1.0, 2.0, 4.0};
    const std::vector<double> ls = {1.0, 2.0, 4.0, 8.0, 16.0};
    const std::vector<double> deltas = {0.0, 1.0, 2.0};
    const int n = 1000000;
    Rng seeder(20240001);
    double worst = 0.0;
    bool pass = true;
    for (double s : sigmas)
        for (double l : ls)
            for (double d : deltas) {
                const AnnotationModel model{{0, 0}, s};
                const Vec2 p_hat{d, 0.0};
                const double closed = expected_oks(p_hat, model, l);
                const McEstimate mc = mc_expected_oks(p_hat, model, l, n, seeder.next_u64());
                const double dev = std::abs(mc.estimate - closed);
                if (dev > 3.0 * mc.std_error + 1e-12) pass = false;
                if (mc.std_error > 0.0) worst = std::max(worst, dev / mc.std_error);
            }
    const double dt = now_seconds() - t0;
    pass = pass && dt < 60.0;
    report(1, "expected OKS: Monte-Carlo vs closed form (75 pts)", pass,
           fmt("max |dev|/se = %.2f, %.1f s", worst, dt));
}

// ---------------------------------------------------------------- criterion 2
void criterion_heatmap_derivation() {
    const double t0 = now_seconds();
    const double l_tilde = 2.0;
    const GridDims grid;
    const Vec2 mu{32.0, 24.0};
    Rng seeder(20240002);
    double worst_max = 0.0, worst_std = 0.0;
    for (double s : {0.5, 1.0, 2.0, 3.0}) {
        const Heatmap hm = mse_optimal_heatmap({mu, s}, l_tilde, grid, 100000, seeder.next_u64());
        const double closed_max = heatmap_confidence(s, l_tilde);
        const double closed_std = std::sqrt(s * s + l_tilde * l_tilde);
        worst_max = std::max(worst_max, std::abs(hm.max_value() - closed_max) / closed_max);
        worst_std =
            std::max(worst_std, std::abs(fit_gaussian(hm).sigma_fit - closed_std) / closed_std);
    }
    const double dt = now_seconds() - t0;
    const bool pass = worst_max <= 0.02 && worst_std <= 0.02 && dt < 30.0;
    report(2, "MSE-optimal heatmap: maxval and fitted std", pass,
           fmt("max rel dev: maxval %.4f, std %.4f, %.1f s", worst_max, worst_std, dt));
}

// ---------------------------------------------------------------- criterion 3
void criterion_nll_optima() {
    const int n = 1000000;
    const double sigma = 1.3;
    const auto samples = sample_keypoints({{0, 0}, sigma}, n, 20240003);

    const auto gfit = fit_nll_gaussian(samples);
    const double dev_g = std::abs(gfit.sigma_hat - sigma) / sigma;

    const double delta = 2.0;
    const auto cfit = fit_nll_gaussian(samples, Vec2{delta, 0.0});
    const double target_c = sigma * sigma + delta * delta / 2.0;
    const double dev_c = std::abs(cfit.sigma_hat * cfit.sigma_hat - target_c) / target_c;

    const auto lfit = fit_nll_laplace(samples, Vec2{0, 0});
    const double target_b = laplace_misspec(sigma).b_star;
    const double dev_b = std::abs(lfit.b_hat - target_b) / target_b;

    const bool pass = dev_g <= 0.02 && dev_c <= 0.02 && dev_b <= 0.01;
    report(3, "NLL optima: Gaussian, imperfect fit, Laplace", pass,
           fmt("rel dev: sigma %.4f, sigma*^2 %.4f, b %.4f", dev_g, dev_c, dev_b));
}

// ---------------------------------------------------------------- criterion 4
void criterion_imperfect_detection() {
    const double l_tilde = 2.0;
    const GridDims grid;
    const Vec2 mu{32.0, 24.0};
    Rng seeder(20240004);
    double worst = 0.0;
    bool monotone = true;
    for (double sigma : {0.0, 1.0}) {
        const Heatmap hm = sigma == 0.0
                               ? render_heatmap(mu, l_tilde, grid)
                               : mse_optimal_heatmap({mu, sigma}, l_tilde, grid, 100000,
                                                     seeder.next_u64());
        double prev_score = 2.0;
        for (double d = 0.0; d <= 3.0 + 1e-9; d += 0.5) {
            const auto numeric = fit_scaled_gaussian_mse(hm, {mu.x + d, mu.y});
            const auto closed = imperfect_detection(sigma, l_tilde, d);
            worst = std::max(worst, std::abs(numeric.sigma_sq - closed.sigma_star_sq) /
                                        closed.sigma_star_sq);
            worst = std::max(worst, std::abs(numeric.scale - closed.scale) / closed.scale);
            if (d > 0.0 && closed.o_star >= prev_score) monotone = false;
            prev_score = closed.o_star;
        }
    }
    const bool pass = worst <= 0.01 && monotone;
    report(4, "imperfect detection: numeric MSE min vs closed forms", pass,
           fmt("max rel dev %.4f, o* monotone %.0f", worst, monotone ? 1.0 : 0.0));
}

// ---------------------------------------------------------------- criterion 5
// Independent rank-counting oracle for the ranked-precision sum.
double ap_oracle(const std::vector<double>& oks, const std::vector<double>& conf,
                 const std::vector<double>& thresholds) {
    const std::size_t n = oks.size();
    long double total = 0.0L;
    for (double tau : thresholds) {
        long double ap_t = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(oks[i] > tau)) continue;
            std::size_t rank = 1, before = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const bool ahead = conf[j] > conf[i] || (conf[j] == conf[i] && j < i);
                if (ahead) ++rank;
                if ((ahead || j == i) && oks[j] > tau) ++before;
            }
            ap_t += static_cast<long double>(before) / rank;
        }
        total += ap_t / n;
    }
    return static_cast<double>(total / thresholds.size());
}

double ap_of_order(const std::vector<double>& oks, const std::vector<std::size_t>& order,
                   const std::vector<double>& thresholds) {
    const double n = static_cast<double>(oks.size());
    double total = 0.0;
    for (double tau : thresholds) {
        double ap_t = 0.0;
        int passing = 0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (oks[order[r]] > tau) {
                ++passing;
                ap_t += (static_cast<double>(passing) / static_cast<double>(r + 1)) / n;
            }
        }
        total += ap_t;
    }
    return total / static_cast<double>(thresholds.size());
}

void criterion_map_correctness() {
    Rng rng(20240005);
    const EvalConfig cfg;
    double worst = 0.0;
    bool pass = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        std::vector<double> oks, conf;
        for (int i = 0; i < n; ++i) {
            oks.push_back(rng.next_unit());
            conf.push_back(rng.next_bernoulli(0.25) ? 0.5 : rng.next_unit());
        }
        const double got = average_precision(oks, conf, cfg).map;
        const double want = ap_oracle(oks, conf, cfg.thresholds);
        worst = std::max(worst, std::abs(got - want));
        if (std::abs(got - want) > 1e-12) pass = false;

        if (n >= 2) {
            std::vector<std::size_t> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end());
            double best = 0.0;
            do {
                best = std::max(best, ap_of_order(oks, order, cfg.thresholds));
            } while (std::next_permutation(order.begin(), order.end()));
            if (std::abs(average_precision(oks, oks, cfg).map - best) > 1e-12) pass = false;
        }
    }
    report(5, "mAP: literal-form oracle + permutation maximum (1000 sets)", pass,
           fmt("max |dev| = %.2e", worst));
}

// ---------------------------------------------------------------- criterion 6
PairedDataset to_dataset(const SynthBenchmark& bench) {
    PairedDataset ds;
    for (const auto& inst : bench.instances) {
        ds.gt.push_back(inst.gt);
        ds.pred.push_back(inst.pred);
    }
    return ds;
}

void criterion_rescoring_order() {
    const double t0 = now_seconds();
    SynthConfig cfg;
    cfg.instance_count = 2000;
    const SynthBenchmark bench = synth_benchmark(cfg, 0);
    const PairedDataset ds = to_dataset(bench);

    auto eval_mode = [&](ConfidenceMode mode) {
        PipelineOptions opt;
        opt.mode = mode;
        return evaluate(ds, cfg.spec, build_confidence(ds, cfg.spec, opt), opt);
    };
    const EvalReport constant = eval_mode(ConfidenceMode::constant);
    const EvalReport heuristic = eval_mode(ConfidenceMode::heatmap_max);
    const EvalReport rescored = eval_mode(ConfidenceMode::rescored);
    const EvalReport oracle = eval_mode(ConfidenceMode::oracle);

    const double dt = now_seconds() - t0;
    const bool order = constant.map < heuristic.map && heuristic.map < rescored.map &&
                       rescored.map <= oracle.map;
    const bool mar_fixed = constant.mar == heuristic.mar && heuristic.mar == rescored.mar &&
                           rescored.mar == oracle.mar;
    const bool pass = order && mar_fixed && dt < 10.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "mAP const %.4f < heur %.4f < resc %.4f <= oracle %.4f, mAR fixed %d, %.1f s",
                  constant.map, heuristic.map, rescored.map, oracle.map, mar_fixed ? 1 : 0, dt);
    report(6, "rescoring mAP ordering on the default benchmark", pass, buf);
}

// ---------------------------------------------------------------- criterion 7
void criterion_ccnet_end_to_end() {
    const double t0 = now_seconds();
    SynthConfig cfg;
    cfg.instance_count = 2000;
    const SynthBenchmark bench = synth_benchmark(cfg, 0);

    TrainConfig tc;
    tc.epochs = 5;
    tc.seed = 0;
    const CalibHead head = train(bench, tc);

    const Split split = split_instances(bench.instances.size(), tc.holdout_fraction, tc.seed);
    PairedDataset held;
    FeatureSet features;
    features.feature_dim = kFeatureDim;
    features.keypoint_count = cfg.spec.count;
    for (std::size_t i : split.heldout) {
        held.gt.push_back(bench.instances[i].gt);
        held.pred.push_back(bench.instances[i].pred);
        features.by_id[bench.instances[i].gt.id] = bench.instances[i].features;
    }

    PipelineOptions heur_opt;
    heur_opt.mode = ConfidenceMode::heatmap_max;
    const EvalReport before =
        evaluate(held, cfg.spec, build_confidence(held, cfg.spec, heur_opt), heur_opt);

    PipelineOptions cc_opt;
    cc_opt.mode = ConfidenceMode::ccnet;
    cc_opt.agg = AggMode::soft;
    const EvalReport after = evaluate(
        held, cfg.spec, build_confidence(held, cfg.spec, cc_opt, &features, &head), cc_opt);

    const double dt = now_seconds() - t0;
    const bool map_up = after.map > before.map;
    const bool ause_down = after.ause < before.ause;
    const bool pearson_up = after.pearson.value_or(-2.0) > before.pearson.value_or(2.0);
    const bool rel_down = reliability_deviation(after.reliability) <
                          reliability_deviation(before.reliability);
    const bool mar_same = after.mar == before.mar;
    const bool pass = map_up && ause_down && pearson_up && rel_down && mar_same && dt < 60.0;
    char buf[300];
    std::snprintf(buf, sizeof(buf),
                  "mAP %.4f->%.4f, AUSE %.4f->%.4f, pearson %.3f->%.3f, relidev %.4f->%.4f, "
                  "mAR same %d, %.1f s",
                  before.map, after.map, before.ause, after.ause, before.pearson.value_or(0.0),
                  after.pearson.value_or(0.0), reliability_deviation(before.reliability),
                  reliability_deviation(after.reliability), mar_same ? 1 : 0, dt);
    report(7, "learned head end-to-end on the default benchmark", pass, buf);
}

// ---------------------------------------------------------------- criterion 8
void criterion_gradient_check() {
    Rng rng(20240008);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const int k = 4, f = kFeatureDim;
        CalibHead head = CalibHead::zeros(f, k);
        for (double& w : head.weights) w = 0.5 * rng.next_gaussian();
        for (double& b : head.bias) b = 0.2 * rng.next_gaussian();
        std::vector<TrainSample> batch;
        for (int s = 0; s < 8; ++s) {
            TrainSample sample;
            for (int i = 0; i < k; ++i) {
                std::vector<double> feat;
                for (int j = 0; j < f; ++j) feat.push_back(rng.next_gaussian());
                sample.features.push_back(std::move(feat));
                sample.s.push_back(rng.next_unit());
                sample.v.push_back(rng.next_bernoulli(0.7));
            }
            batch.push_back(std::move(sample));
        }
        TrainConfig cfg;
        worst = std::max(worst, analytic_grad_check(head, batch, cfg));
    }
    report(8, "analytic gradients vs central finite differences", worst < 1e-5,
           fmt("max rel dev = %.2e", worst));
}

// ---------------------------------------------------------------- criterion 9
bool run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a))
        if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a));
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
        std::ifstream fa(a / r, std::ios::binary), fb(b / r, std::ios::binary);
        if (!fb) {
            why = "missing " + r.string();
            return false;
        }
        const std::string ca{std::istreambuf_iterator<char>(fa), {}};
        const std::string cb{std::istreambuf_iterator<char>(fb), {}};
        if (ca != cb) {
            why = "differs: " + r.string();
            return false;
        }
    }
    return true;
}

void criterion_cli_determinism(const std::string& cli) {
    if (cli.empty()) {
        report(9, "CLI determinism (rerun => byte-identical outputs)", false,
               "POSCAL_CLI not set and no argv[1] given");
        return;
    }
    const fs::path work = fs::temp_directory_path() / "poscal_acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);

    bool pass = true;
    std::string why;
    auto run_twice = [&](const std::string& label, const std::string& args_a,
                         const std::string& args_b, const fs::path& out_a,
                         const fs::path& out_b) {
        if (!run_cli(cli, args_a) || !run_cli(cli, args_b)) {
            pass = false;
            why = label + " command failed";
            return;
        }
        std::string detail;
        if (!trees_identical(out_a, out_b, detail)) {
            pass = false;
            why = label + " " + detail;
        }
    };

    const std::string b1 = (work / "bench1").string(), b2 = (work / "bench2").string();
    run_twice("gen", "gen --out " + b1 + " --n 300 --seed 7",
              "gen --out " + b2 + " --n 300 --seed 7", b1, b2);

    if (pass) {
        const std::string e1 = (work / "eval1").string(), e2 = (work / "eval2").string();
        const std::string data = " --gt " + b1 + "/gt.json --pred " + b1 + "/pred.json --spec " +
                                 b1 + "/spec.json";
        run_twice("eval", "eval" + data + " --mode rescored --out " + e1,
                  "eval" + data + " --mode rescored --out " + e2, e1, e2);

        fs::create_directories(work / "r1");
        fs::create_directories(work / "r2");
        run_twice("rescore", "rescore" + data + " --out " + (work / "r1" / "p.json").string(),
                  "rescore" + data + " --out " + (work / "r2" / "p.json").string(), work / "r1",
                  work / "r2");

        const std::string t1 = (work / "tc1").string(), t2 = (work / "tc2").string();
        run_twice("train-calib",
                  "train-calib --bench " + b1 + " --out " + t1 + " --epochs 1 --seed 3",
                  "train-calib --bench " + b1 + " --out " + t2 + " --epochs 1 --seed 3", t1, t2);

        const std::string s1 = (work / "sim1").string(), s2 = (work / "sim2").string();
        run_twice("simulate", "simulate --quick --seed 5 --out " + s1,
                  "simulate --quick --seed 5 --out " + s2, s1, s2);
    }

    report(9, "CLI determinism (rerun => byte-identical outputs)", pass,
           pass ? "gen/eval/rescore/train-calib/simulate all byte-identical" : why);
    fs::remove_all(work);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    if (const char* env = std::getenv("POSCAL_CLI")) cli = env;
    if (cli.empty() && argc > 1) cli = argv[1];

    criterion_closed_form_grid();
    criterion_heatmap_derivation();
    criterion_nll_optima();
    criterion_imperfect_detection();
    criterion_map_correctness();
    criterion_rescoring_order();
    criterion_ccnet_end_to_end();
    criterion_gradient_check();
    criterion_cli_determinism(cli);

    if (failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", failures);
    return 1;
}
