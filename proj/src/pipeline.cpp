#include "poscal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poscal/calib.hpp"
#include "poscal/oks.hpp"

namespace poscal {

ConfidenceMode parse_confidence_mode(const std::string& name) {
    if (name == "constant") return ConfidenceMode::constant;
    if (name == "heatmap-max") return ConfidenceMode::heatmap_max;
    if (name == "rle") return ConfidenceMode::rle;
    if (name == "rescored") return ConfidenceMode::rescored;
    if (name == "oracle") return ConfidenceMode::oracle;
    if (name == "ccnet") return ConfidenceMode::ccnet;
    throw ConfigError("unknown confidence mode '" + name + "'");
}

std::string confidence_mode_name(ConfidenceMode mode) {
    switch (mode) {
        case ConfidenceMode::constant: return "constant";
        case ConfidenceMode::heatmap_max: return "heatmap-max";
        case ConfidenceMode::rle: return "rle";
        case ConfidenceMode::rescored: return "rescored";
        case ConfidenceMode::oracle: return "oracle";
        case ConfidenceMode::ccnet: return "ccnet";
    }
    return "?";
}

static std::vector<int> effective_subset(const std::vector<int>& subset, int k_count) {
    std::vector<int> idx = subset;
    if (idx.empty()) {
        idx.resize(static_cast<std::size_t>(k_count));
        for (int k = 0; k < k_count; ++k) idx[static_cast<std::size_t>(k)] = k;
    }
    for (int k : idx)
        if (k < 0 || k >= k_count) throw ConfigError("subset index out of range");
    return idx;
}

// Per-keypoint sigma under the configured extraction rule.
static std::vector<double> extract_sigma(const PredictedInstance& pred,
                                         const PipelineOptions& opt) {
    const SigmaSource src = opt.sigma_source == SigmaSource::auto_detect
                                ? (pred.has_sigma() ? SigmaSource::sigma_field
                                                    : SigmaSource::maxval)
                                : opt.sigma_source;
    if (src == SigmaSource::sigma_field) {
        if (!pred.has_sigma())
            throw ConfigError("instance " + std::to_string(pred.id) +
                              " has no sigma field but sigma source requires it");
        return pred.sigma;
    }
    std::vector<double> out;
    out.reserve(pred.kp_scores.size());
    for (double s : pred.kp_scores)
        out.push_back(sigma_from_maxval(std::max(s, 1e-9), opt.l_tilde));
    return out;
}

static double instance_area(const GroundTruthInstance& gt, const PredictedInstance& pred,
                            const PipelineOptions& opt) {
    if (opt.area_source == AreaSource::gt) return gt.area;
    if (!pred.has_area())
        throw ConfigError("instance " + std::to_string(pred.id) +
                          " has no predicted area but area source is 'pred'");
    return pred.area;
}

static double aggregate(const std::vector<double>& scores, const std::vector<double>& vis,
                        const std::vector<int>& subset, const PipelineOptions& opt) {
    if (opt.agg == AggMode::soft) return aggregate_soft(scores, vis, subset).value;
    std::vector<double> picked;
    picked.reserve(subset.size());
    for (int k : subset) picked.push_back(scores[static_cast<std::size_t>(k)]);
    return aggregate_threshold(picked, opt.tau_s);
}

std::vector<std::optional<double>> dataset_oks(const PairedDataset& ds, const KeypointSpec& spec,
                                               const std::vector<int>& subset) {
    std::vector<std::optional<double>> out;
    out.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        try {
            out.push_back(instance_oks_subset(ds.pred[i], ds.gt[i], spec, subset));
        } catch (const NotEvaluableError&) {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

std::vector<double> build_confidence(const PairedDataset& ds, const KeypointSpec& spec,
                                     const PipelineOptions& opt, const FeatureSet* features,
                                     const CalibHead* head) {
    const std::vector<int> subset = effective_subset(opt.subset, spec.count);
    std::vector<double> conf;
    conf.reserve(ds.size());
    const std::vector<double> ones(static_cast<std::size_t>(spec.count), 1.0);

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& gt = ds.gt[i];
        const auto& pred = ds.pred[i];
        switch (opt.mode) {
            case ConfidenceMode::constant:
                conf.push_back(0.5);
                break;
            case ConfidenceMode::heatmap_max:
                conf.push_back(aggregate(pred.kp_scores, ones, subset, opt));
                break;
            case ConfidenceMode::rle: {
                if (!pred.has_sigma())
                    throw ConfigError("rle mode needs per-keypoint sigma (instance " +
                                      std::to_string(pred.id) + ")");
                if (!(opt.rle_norm > 0.0)) throw ConfigError("rle_norm must be > 0");
                std::vector<double> scores;
                scores.reserve(pred.sigma.size());
                for (double s : pred.sigma)
                    scores.push_back(rle_confidence_clamped(s / opt.rle_norm));
                conf.push_back(aggregate(scores, ones, subset, opt));
                break;
            }
            case ConfidenceMode::rescored: {
                const std::vector<double> sigma = extract_sigma(pred, opt);
                const double area = instance_area(gt, pred, opt);
                std::vector<double> scores(static_cast<std::size_t>(spec.count));
                for (int k = 0; k < spec.count; ++k) {
                    const auto ki = static_cast<std::size_t>(k);
                    scores[ki] = rescore(sigma[ki], falloff_scale(spec.falloff[ki], area), 0.0);
                }
                conf.push_back(aggregate(scores, ones, subset, opt));
                break;
            }
            case ConfidenceMode::oracle: {
                try {
                    conf.push_back(instance_oks_subset(pred, gt, spec, subset));
                } catch (const NotEvaluableError&) {
                    conf.push_back(0.0);  // excluded from metrics downstream anyway
                }
                break;
            }
            case ConfidenceMode::ccnet: {
                if (features == nullptr || head == nullptr)
                    throw ConfigError("ccnet mode needs a feature file and a trained head");
                const auto it = features->by_id.find(pred.id);
                if (it == features->by_id.end())
                    throw ConfigError("no features for instance " + std::to_string(pred.id));
                const HeadOutput out = forward(it->second, *head);
                conf.push_back(aggregate_soft(out.s_hat, out.v_hat, subset).value);
                break;
            }
        }
    }
    return conf;
}

EvalReport evaluate(const PairedDataset& ds, const KeypointSpec& spec,
                    const std::vector<double>& conf, const PipelineOptions& opt) {
    if (conf.size() != ds.size()) throw std::domain_error("evaluate: conf length mismatch");
    opt.eval.validate();
    const std::vector<int> subset = effective_subset(opt.subset, spec.count);

    const auto oks_all = dataset_oks(ds, spec, subset);
    std::vector<double> oks, c;
    EvalReport report;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!oks_all[i]) {
            ++report.n_zero_visible;
            continue;
        }
        kept.push_back(i);
        oks.push_back(*oks_all[i]);
        c.push_back(conf[i]);
    }
    report.n_instances = static_cast<int>(oks.size());
    if (oks.empty()) throw NotEvaluableError("evaluate: no evaluable instance");

    const ApResult ap = average_precision(oks, c, opt.eval);
    report.map = ap.map;
    report.per_threshold_ap = ap.per_threshold;
    report.pr_points = ap.pr_points;
    report.mar = average_recall(oks, opt.eval);

    // Per-instance PCK with the subset-masked visibility, norm sqrt(area).
    std::vector<double> pck_vals;
    pck_vals.reserve(kept.size());
    for (std::size_t i : kept) {
        GroundTruthInstance masked = ds.gt[i];
        std::vector<bool> keep(masked.visibility.size(), false);
        for (int k : subset) keep[static_cast<std::size_t>(k)] = true;
        for (std::size_t k = 0; k < keep.size(); ++k)
            if (!keep[k]) masked.visibility[k] = false;
        pck_vals.push_back(pck(ds.pred[i], masked, std::sqrt(masked.area), opt.eval.pck_tau));
    }
    report.mean_pck =
        pck_vals.empty()
            ? 0.0
            : std::accumulate(pck_vals.begin(), pck_vals.end(), 0.0) /
                  static_cast<double>(pck_vals.size());

    std::vector<double> errors;
    errors.reserve(oks.size());
    if (opt.ause_on == AuseErrorSource::pck) {
        for (double p : pck_vals) errors.push_back(1.0 - p);
    } else {
        for (double o : oks) errors.push_back(1.0 - o);
    }
    if (oks.size() >= 2) {
        const SparsificationCurve sc = ause_curve(errors, c, opt.eval.ause_steps);
        report.ause = sc.ause;
        report.sparsification = sc.points;
        report.pearson = pearson(c, oks);
    }
    report.reliability = reliability_curve(c, oks, opt.eval.reliability_bins);
    return report;
}

std::vector<PredictedInstance> rescore_predictions(const PairedDataset& ds,
                                                   const KeypointSpec& spec,
                                                   const PipelineOptions& opt) {
    std::vector<PredictedInstance> out;
    out.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        PredictedInstance p = ds.pred[i];
        const std::vector<double> sigma = extract_sigma(p, opt);
        const double area = instance_area(ds.gt[i], p, opt);
        for (int k = 0; k < spec.count; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            p.kp_scores[ki] = rescore(sigma[ki], falloff_scale(spec.falloff[ki], area), 0.0);
        }
        p.sigma = sigma;  // keep the extracted sigmas so a second pass is a no-op
        p.instance_conf = aggregate_threshold(p.kp_scores, opt.tau_s);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace poscal
