// poscal: pose-confidence calibration toolkit.
//
// Subcommands: gen (synthetic benchmark), eval (ranking metrics under a
// confidence mode), rescore (closed-form confidence correction), simulate
// (closed-form vs Monte-Carlo verification suite), train-calib (learned
// confidence/visibility head).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poscal/calib.hpp"
#include "poscal/ccnet.hpp"
#include "poscal/io.hpp"
#include "poscal/oks.hpp"
#include "poscal/pipeline.hpp"
#include "poscal/simulate.hpp"

namespace fs = std::filesystem;
using namespace poscal;

namespace {

struct SimCheck {
    std::string name;
    double observed = 0.0;
    double limit = 0.0;
    bool pass = false;
};

KeypointSpec resolve_spec(const std::string& spec_path) {
    if (spec_path.empty()) return KeypointSpec::coco17();
    return load_keypoint_spec(spec_path);
}

std::vector<int> parse_subset(const std::string& text) {
    std::vector<int> out;
    if (text.empty()) return out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        const auto dash = token.find('-');
        if (dash == std::string::npos) {
            out.push_back(std::stoi(token));
        } else {
            const int lo = std::stoi(token.substr(0, dash));
            const int hi = std::stoi(token.substr(dash + 1));
            for (int k = lo; k <= hi; ++k) out.push_back(k);
        }
    }
    return out;
}

int run_gen(const std::string& out_dir, const SynthConfig& cfg, std::uint64_t seed) {
    const SynthBenchmark bench = synth_benchmark(cfg, seed);
    save_benchmark(bench, out_dir);
    std::cout << "wrote " << bench.instances.size() << " instances to " << out_dir << "\n";
    return exit_ok;
}

struct EvalArgs {
    std::string gt, pred, spec, out, mode = "heatmap-max", agg = "threshold";
    std::string area_source = "gt", sigma_source = "auto", subset, features, head;
    std::vector<double> thresholds;
    double tau_s = kDefaultScoreThreshold;
    double l_tilde = 2.0;
    double rle_norm = 1.0;
    double pck_tau = 0.5;
    std::string ause_on = "oks";
    int ause_steps = 20;
    int bins = 10;
    bool coco_interp = false;
};

PipelineOptions make_options(const EvalArgs& a) {
    PipelineOptions opt;
    opt.mode = parse_confidence_mode(a.mode);
    opt.agg = a.agg == "soft" ? AggMode::soft : AggMode::threshold;
    if (a.agg != "soft" && a.agg != "threshold")
        throw ConfigError("unknown aggregation mode '" + a.agg + "'");
    opt.tau_s = a.tau_s;
    opt.l_tilde = a.l_tilde;
    opt.rle_norm = a.rle_norm;
    if (a.ause_on == "oks")
        opt.ause_on = AuseErrorSource::oks;
    else if (a.ause_on == "pck")
        opt.ause_on = AuseErrorSource::pck;
    else
        throw ConfigError("unknown --ause-on value '" + a.ause_on + "'");
    if (a.area_source == "gt")
        opt.area_source = AreaSource::gt;
    else if (a.area_source == "pred")
        opt.area_source = AreaSource::pred;
    else
        throw ConfigError("unknown area source '" + a.area_source + "'");
    if (a.sigma_source == "auto")
        opt.sigma_source = SigmaSource::auto_detect;
    else if (a.sigma_source == "sigma")
        opt.sigma_source = SigmaSource::sigma_field;
    else if (a.sigma_source == "maxval")
        opt.sigma_source = SigmaSource::maxval;
    else
        throw ConfigError("unknown sigma source '" + a.sigma_source + "'");
    opt.subset = parse_subset(a.subset);
    if (!a.thresholds.empty()) opt.eval.thresholds = a.thresholds;
    opt.eval.ause_steps = a.ause_steps;
    opt.eval.reliability_bins = a.bins;
    opt.eval.pck_tau = a.pck_tau;
    opt.eval.validate();
    return opt;
}

int run_eval(const EvalArgs& a) {
    const KeypointSpec spec = resolve_spec(a.spec);
    const PairedDataset ds = load_dataset(a.gt, a.pred, spec);
    const PipelineOptions opt = make_options(a);

    FeatureSet features;
    CalibHead head;
    const FeatureSet* features_ptr = nullptr;
    const CalibHead* head_ptr = nullptr;
    if (opt.mode == ConfidenceMode::ccnet) {
        if (a.features.empty() || a.head.empty())
            throw ConfigError("ccnet mode needs --features and --head");
        features = load_features(a.features);
        head = load_calib_head(a.head);
        features_ptr = &features;
        head_ptr = &head;
    }

    const std::vector<double> conf = build_confidence(ds, spec, opt, features_ptr, head_ptr);
    const EvalReport report = evaluate(ds, spec, conf, opt);

    const fs::path out(a.out);
    save_report(report, out / "report.json");
    write_pr_csv(report.pr_points, out / "pr_curve.csv");
    write_sparsification_csv(report.sparsification, out / "sparsification.csv");
    write_reliability_csv(report.reliability, out / "reliability.csv");

    std::printf("mode=%s  mAP=%.4f  mAR=%.4f  AUSE=%.4f", confidence_mode_name(opt.mode).c_str(),
                report.map, report.mar, report.ause);
    if (report.pearson) std::printf("  pearson=%.4f", *report.pearson);
    std::printf("  (n=%d, zero-visible=%d)\n", report.n_instances, report.n_zero_visible);
    if (a.coco_interp) {
        const auto oks_opt = dataset_oks(ds, spec, opt.subset);
        std::vector<double> oks, c;
        for (std::size_t i = 0; i < oks_opt.size(); ++i) {
            if (!oks_opt[i]) continue;
            oks.push_back(*oks_opt[i]);
            c.push_back(conf[i]);
        }
        std::printf("coco-interpolated mAP=%.4f\n",
                    average_precision_interpolated(oks, c, opt.eval));
    }
    return exit_ok;
}

int run_rescore(const EvalArgs& a) {
    const KeypointSpec spec = resolve_spec(a.spec);
    const PairedDataset ds = load_dataset(a.gt, a.pred, spec);
    const PipelineOptions opt = make_options(a);
    const auto rescored = rescore_predictions(ds, spec, opt);
    save_predictions(rescored, spec, a.out);
    std::cout << "wrote " << rescored.size() << " rescored predictions to " << a.out << "\n";
    return exit_ok;
}

int run_train_calib(const std::string& bench_dir, const std::string& out_dir, TrainConfig cfg,
                    double tau_s) {
    const fs::path bdir(bench_dir);
    const KeypointSpec spec = load_keypoint_spec(bdir / "spec.json");
    const PairedDataset ds = load_dataset(bdir / "gt.json", bdir / "pred.json", spec);
    const FeatureSet features = load_features(bdir / "features.json");

    std::vector<TrainSample> samples;
    samples.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto it = features.by_id.find(ds.gt[i].id);
        if (it == features.by_id.end())
            throw ConfigError("no features for instance " + std::to_string(ds.gt[i].id));
        TrainSample s;
        s.features = it->second;
        s.s = keypoint_oks_all(ds.pred[i], ds.gt[i], spec);
        s.v.assign(ds.gt[i].visibility.begin(), ds.gt[i].visibility.end());
        samples.push_back(std::move(s));
    }

    const CalibHead head = train_samples(samples, features.feature_dim, spec.count, cfg);

    // Held-out split mirrors the one used inside training.
    const Split split = split_instances(ds.size(), cfg.holdout_fraction, cfg.seed);
    PairedDataset held;
    for (std::size_t i : split.heldout) {
        held.gt.push_back(ds.gt[i]);
        held.pred.push_back(ds.pred[i]);
    }
    if (held.size() < 2) throw ConfigError("held-out split too small; lower --holdout or add data");

    PipelineOptions before_opt;
    before_opt.mode = ConfidenceMode::heatmap_max;
    before_opt.tau_s = tau_s;
    PipelineOptions after_opt;
    after_opt.mode = ConfidenceMode::ccnet;
    after_opt.agg = AggMode::soft;

    FeatureSet held_features = features;
    const EvalReport before = evaluate(held, spec, build_confidence(held, spec, before_opt), before_opt);
    const EvalReport after = evaluate(
        held, spec, build_confidence(held, spec, after_opt, &held_features, &head), after_opt);

    if (before.mar != after.mar)
        throw std::runtime_error("train-calib: mAR changed; geometry must stay fixed");

    const fs::path out(out_dir);
    save_calib_head(head, out / "head.json");
    save_report(before, out / "report_before.json");
    save_report(after, out / "report_after.json");
    write_reliability_csv(before.reliability, out / "reliability_before.csv");
    write_reliability_csv(after.reliability, out / "reliability_after.csv");

    std::printf("held-out (%zu instances):\n", held.size());
    std::printf("  before  mAP=%.4f  mAR=%.4f  AUSE=%.4f  pearson=%.4f\n", before.map, before.mar,
                before.ause, before.pearson.value_or(0.0));
    std::printf("  after   mAP=%.4f  mAR=%.4f  AUSE=%.4f  pearson=%.4f\n", after.map, after.mar,
                after.ause, after.pearson.value_or(0.0));
    return exit_ok;
}

// Closed-form vs Monte-Carlo verification suite (the simulate subcommand).
int run_simulate(const std::string& out_dir, std::uint64_t seed, bool quick) {
    std::vector<SimCheck> checks;
    const fs::path out(out_dir);
    Rng seeder(seed);

    // Expected OKS over a (sigma, l, delta) grid.
    {
        const std::vector<double> sigmas = quick ? std::vector<double>{0.0, 1.0, 4.0}
                                                 : std::vector<double>{0.0, 0.5, 1.0, 2.0, 4.0};
        const std::vector<double> ls = quick ? std::vector<double>{1.0, 4.0}
                                             : std::vector<double>{1.0, 2.0, 4.0, 8.0, 16.0};
        const std::vector<double> deltas = {0.0, 1.0, 2.0};
        const int n = quick ? 20000 : 1000000;
        std::string csv = "sigma,l,delta,closed_form,mc_estimate,std_error\n";
        double worst = 0.0;
        for (double s : sigmas)
            for (double l : ls)
                for (double d : deltas) {
                    const AnnotationModel model{{0.0, 0.0}, s};
                    const Vec2 p_hat{d, 0.0};
                    const double closed = expected_oks(p_hat, model, l);
                    const McEstimate mc =
                        mc_expected_oks(p_hat, model, l, n, seeder.next_u64());
                    const double dev = std::abs(mc.estimate - closed);
                    const double norm = mc.std_error > 0.0 ? dev / mc.std_error : 0.0;
                    worst = std::max(worst, norm);
                    csv += csv_num(s) + "," + csv_num(l) + "," + csv_num(d) + "," +
                           csv_num(closed) + "," + csv_num(mc.estimate) + "," +
                           csv_num(mc.std_error) + "\n";
                }
        atomic_write(out / "expected_oks_grid.csv", csv);
        checks.push_back({"expected OKS grid (|dev| / std_error)", worst, 3.0, worst <= 3.0});
    }

    // Heatmap maxval and fitted std across a sigma sweep.
    {
        const int n = quick ? 5000 : 100000;
        const double l_tilde = 2.0;
        const GridDims grid;
        std::string csv = "sigma,maxval,closed_maxval,fitted_std,closed_std\n";
        double worst = 0.0;
        for (double s : {0.5, 1.0, 2.0, 3.0}) {
            const AnnotationModel model{{32.0, 24.0}, s};
            const Heatmap hm = mse_optimal_heatmap(model, l_tilde, grid, n, seeder.next_u64());
            const double maxval = hm.max_value();
            const double closed_max = heatmap_confidence(s, l_tilde);
            const GaussianFit fit = fit_gaussian(hm);
            const double closed_std = std::sqrt(s * s + l_tilde * l_tilde);
            worst = std::max(worst, std::abs(maxval - closed_max) / closed_max);
            worst = std::max(worst, std::abs(fit.sigma_fit - closed_std) / closed_std);
            csv += csv_num(s) + "," + csv_num(maxval) + "," + csv_num(closed_max) + "," +
                   csv_num(fit.sigma_fit) + "," + csv_num(closed_std) + "\n";
        }
        atomic_write(out / "sigma_sweep.csv", csv);
        checks.push_back({"heatmap maxval/std sweep (relative)", worst, 0.02, worst <= 0.02});
    }

    // NLL optima: Gaussian, constrained-imperfect, Laplace.
    {
        const int n = quick ? 20000 : 1000000;
        const double sigma = 1.3;
        const AnnotationModel model{{0.0, 0.0}, sigma};
        const auto samples = sample_keypoints(model, n, seeder.next_u64());
        const auto gfit = fit_nll_gaussian(samples);
        const double dev_g = std::abs(gfit.sigma_hat - sigma) / sigma;

        const double delta = 2.0;
        const auto cfit = fit_nll_gaussian(samples, Vec2{delta, 0.0});
        const double target = sigma * sigma + delta * delta / 2.0;
        const double dev_c = std::abs(cfit.sigma_hat * cfit.sigma_hat - target) / target;

        const auto lfit = fit_nll_laplace(samples, Vec2{0.0, 0.0});
        const double b_target = laplace_misspec(sigma).b_star;
        const double dev_l = std::abs(lfit.b_hat - b_target) / b_target;

        std::string csv = "fit,observed,target\n";
        csv += "gaussian_sigma," + csv_num(gfit.sigma_hat) + "," + csv_num(sigma) + "\n";
        csv += "imperfect_sigma_sq," + csv_num(cfit.sigma_hat * cfit.sigma_hat) + "," +
               csv_num(target) + "\n";
        csv += "laplace_b," + csv_num(lfit.b_hat) + "," + csv_num(b_target) + "\n";
        atomic_write(out / "nll_optima.csv", csv);
        checks.push_back({"gaussian NLL sigma (relative)", dev_g, 0.02, dev_g <= 0.02});
        checks.push_back({"imperfect-fit sigma^2 (relative)", dev_c, 0.02, dev_c <= 0.02});
        checks.push_back({"laplace NLL b (relative)", dev_l, 0.01, dev_l <= 0.01});
    }

    // Imperfect-detection closed forms vs numeric MSE minimization.
    {
        const double l_tilde = 2.0, sigma = quick ? 0.0 : 1.0;
        const int n = quick ? 2000 : 100000;
        const GridDims grid;
        const Vec2 mu{32.0, 24.0};
        std::string csv =
            "delta,sigma_star_sq_closed,sigma_star_sq_numeric,scale_closed,scale_numeric,"
            "score_form\n";
        double worst = 0.0;
        double prev_score = 2.0;
        bool monotone = true;
        const std::vector<double> deltas = quick ? std::vector<double>{0.0, 1.5, 3.0}
                                                 : std::vector<double>{0.0, 0.5, 1.0, 1.5,
                                                                       2.0, 2.5, 3.0};
        for (double d : deltas) {
            const AnnotationModel model{mu, sigma};
            const Heatmap hm =
                sigma == 0.0 ? render_heatmap(mu, l_tilde, grid)
                             : mse_optimal_heatmap(model, l_tilde, grid, n, seeder.next_u64());
            const Vec2 p_hat{mu.x + d, mu.y};
            const ScaledGaussianMse numeric = fit_scaled_gaussian_mse(hm, p_hat);
            const ImperfectDetection closed = imperfect_detection(sigma, l_tilde, d);
            worst = std::max(worst,
                             std::abs(numeric.sigma_sq - closed.sigma_star_sq) /
                                 closed.sigma_star_sq);
            worst = std::max(worst, std::abs(numeric.scale - closed.scale) / closed.scale);
            if (closed.o_star >= prev_score && d > 0.0) monotone = false;
            prev_score = closed.o_star;
            csv += csv_num(d) + "," + csv_num(closed.sigma_star_sq) + "," +
                   csv_num(numeric.sigma_sq) + "," + csv_num(closed.scale) + "," +
                   csv_num(numeric.scale) + "," + csv_num(closed.o_star) + "\n";
        }
        atomic_write(out / "imperfect_detection.csv", csv);
        checks.push_back(
            {"imperfect-detection closed vs numeric (relative)", worst, 0.01, worst <= 0.01});
        checks.push_back({"o_star monotone decreasing", monotone ? 0.0 : 1.0, 0.5, monotone});
    }

    std::string report = "check,observed,limit,pass\n";
    bool all_pass = true;
    for (const auto& c : checks) {
        std::printf("%-48s %10.4g  (limit %g)  %s\n", c.name.c_str(), c.observed, c.limit,
                    c.pass ? "PASS" : "FAIL");
        report += c.name + "," + csv_num(c.observed) + "," + csv_num(c.limit) + "," +
                  (c.pass ? "1" : "0") + "\n";
        all_pass = all_pass && c.pass;
    }
    atomic_write(out / "simulate_report.csv", report);
    return all_pass ? exit_ok : exit_tolerance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pose-confidence calibration toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark");
    std::string gen_out = "bench";
    SynthConfig gen_cfg;
    std::uint64_t gen_seed = 0;
    int gen_k = 17;
    std::string gen_score_mode = "heatmap";
    double gen_fixed_delta = -1.0;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--n", gen_cfg.instance_count, "instance count");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--k", gen_k, "keypoint count (17 uses the COCO falloffs)");
    gen->add_option("--sigma-min", gen_cfg.sigma_min);
    gen->add_option("--sigma-max", gen_cfg.sigma_max);
    gen->add_option("--area-min", gen_cfg.area_min);
    gen->add_option("--area-max", gen_cfg.area_max);
    gen->add_option("--vis-rate", gen_cfg.visibility_rate);
    gen->add_option("--feature-noise", gen_cfg.feature_noise);
    gen->add_option("--l-tilde", gen_cfg.l_tilde);
    gen->add_option("--score-mode", gen_score_mode, "heatmap | rle");
    gen->add_option("--fixed-delta", gen_fixed_delta, "fixed prediction deviation (pixels)");

    // eval / rescore share the argument bundle
    EvalArgs ev;
    auto add_common = [&](CLI::App* cmd, bool with_mode) {
        cmd->add_option("--gt", ev.gt, "ground-truth JSON")->required();
        cmd->add_option("--pred", ev.pred, "prediction JSON")->required();
        cmd->add_option("--spec", ev.spec, "keypoint spec JSON (default: COCO-17)");
        cmd->add_option("--out", ev.out, "output path")->required();
        if (with_mode) cmd->add_option("--mode", ev.mode,
                                       "constant | heatmap-max | rle | rescored | oracle | ccnet");
        cmd->add_option("--thresholds", ev.thresholds, "OKS thresholds")->delimiter(',');
        cmd->add_option("--tau-s", ev.tau_s, "keypoint-score threshold for aggregation");
        cmd->add_option("--agg", ev.agg, "threshold | soft");
        cmd->add_option("--l-tilde", ev.l_tilde, "rendered-heatmap std for sigma extraction");
        cmd->add_option("--rle-norm", ev.rle_norm, "sigma divisor for the rle mode");
        cmd->add_option("--area-source", ev.area_source, "gt | pred");
        cmd->add_option("--sigma-source", ev.sigma_source, "auto | sigma | maxval");
    };
    auto* eval = app.add_subcommand("eval", "evaluate ranking metrics under a confidence mode");
    add_common(eval, true);
    eval->add_option("--subset", ev.subset, "keypoint subset, e.g. 0-4,7");
    eval->add_option("--features", ev.features, "feature JSON (ccnet mode)");
    eval->add_option("--head", ev.head, "trained head JSON (ccnet mode)");
    eval->add_option("--ause-steps", ev.ause_steps);
    eval->add_option("--ause-on", ev.ause_on, "error source for sparsification: oks | pck");
    eval->add_option("--bins", ev.bins, "reliability bins");
    eval->add_option("--pck-tau", ev.pck_tau);
    eval->add_flag("--coco-interp", ev.coco_interp, "also print 101-point interpolated mAP");

    auto* rescore_cmd = app.add_subcommand("rescore", "closed-form confidence correction");
    add_common(rescore_cmd, false);

    // simulate
    auto* sim = app.add_subcommand("simulate", "closed-form vs Monte-Carlo verification suite");
    std::string sim_out = "simulate_out";
    std::uint64_t sim_seed = 0;
    bool sim_quick = false;
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--seed", sim_seed, "Monte-Carlo seed");
    sim->add_flag("--quick", sim_quick, "reduced sample counts (smoke mode)");

    // train-calib
    auto* tc = app.add_subcommand("train-calib", "train the calibration head");
    std::string tc_bench, tc_out = "calib_out";
    TrainConfig tc_cfg;
    double tc_tau_s = kDefaultScoreThreshold;
    tc->add_option("--bench", tc_bench, "benchmark directory (gt/pred/features/spec)")->required();
    tc->add_option("--out", tc_out, "output directory");
    tc->add_option("--epochs", tc_cfg.epochs);
    tc->add_option("--lambda-vis", tc_cfg.lambda_vis);
    tc->add_option("--lr", tc_cfg.learning_rate);
    tc->add_option("--lr-decay", tc_cfg.lr_decay);
    tc->add_option("--batch", tc_cfg.batch_size);
    tc->add_option("--holdout", tc_cfg.holdout_fraction);
    tc->add_option("--seed", tc_cfg.seed);
    tc->add_option("--tau-s", tc_tau_s, "threshold for the heuristic baseline report");
    bool tc_ce = false;
    tc->add_flag("--cross-entropy", tc_ce, "use the CE confidence-loss variant");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (gen_k == 17)
                gen_cfg.spec = KeypointSpec::coco17();
            else
                gen_cfg.spec = KeypointSpec::uniform(gen_k, 0.01);
            if (gen_score_mode == "heatmap")
                gen_cfg.score_mode = ScoreMode::heatmap_max;
            else if (gen_score_mode == "rle")
                gen_cfg.score_mode = ScoreMode::rle;
            else
                throw ConfigError("unknown score mode '" + gen_score_mode + "'");
            if (gen_fixed_delta >= 0.0) gen_cfg.fixed_delta = gen_fixed_delta;
            return run_gen(gen_out, gen_cfg, gen_seed);
        }
        if (eval->parsed()) return run_eval(ev);
        if (rescore_cmd->parsed()) return run_rescore(ev);
        if (sim->parsed()) return run_simulate(sim_out, sim_seed, sim_quick);
        if (tc->parsed()) {
            tc_cfg.cross_entropy_conf = tc_ce;
            return run_train_calib(tc_bench, tc_out, tc_cfg, tc_tau_s);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_parse;
    } catch (const AlignmentError& e) {
        std::cerr << "alignment error: " << e.what() << "\n";
        return exit_alignment;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_failure;
}
