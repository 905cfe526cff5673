#include "poscal/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace poscal {

std::vector<double> EvalConfig::default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

void EvalConfig::validate() const {
    if (thresholds.empty()) throw std::domain_error("EvalConfig: need at least one threshold");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
            throw std::domain_error("EvalConfig: thresholds must lie in (0,1)");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw std::domain_error("EvalConfig: thresholds must be strictly increasing");
    }
    if (ause_steps < 2) throw std::domain_error("EvalConfig: ause_steps must be >= 2");
    if (reliability_bins < 2) throw std::domain_error("EvalConfig: reliability_bins must be >= 2");
    if (!(pck_tau > 0.0)) throw std::domain_error("EvalConfig: pck_tau must be > 0");
}

double average_recall(const std::vector<double>& oks, const EvalConfig& cfg) {
    cfg.validate();
    if (oks.empty()) throw std::domain_error("average_recall: empty input");
    const double n = static_cast<double>(oks.size());
    double total = 0.0;
    for (double tau : cfg.thresholds) {
        double pass = 0.0;
        for (double c : oks)
            if (c > tau) pass += 1.0;
        total += pass / n;
    }
    return total / static_cast<double>(cfg.thresholds.size());
}

// Indices sorted by confidence descending, ties by original index.
static std::vector<std::size_t> rank_by_confidence(const std::vector<double>& conf) {
    std::vector<std::size_t> order(conf.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&conf](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
    return order;
}

ApResult average_precision(const std::vector<double>& oks, const std::vector<double>& conf,
                           const EvalConfig& cfg) {
    cfg.validate();
    if (oks.empty()) throw std::domain_error("average_precision: empty input");
    if (oks.size() != conf.size())
        throw std::domain_error("average_precision: oks/conf length mismatch");

    const auto order = rank_by_confidence(conf);
    const double n = static_cast<double>(oks.size());

    ApResult res;
    res.per_threshold.reserve(cfg.thresholds.size());
    for (double tau : cfg.thresholds) {
        double ap_t = 0.0;
        int passing = 0;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const bool pass = oks[order[rank]] > tau;
            if (pass) ++passing;
            const double precision = static_cast<double>(passing) / static_cast<double>(rank + 1);
            const double recall = static_cast<double>(passing) / n;
            if (pass) ap_t += precision / n;
            res.pr_points.push_back({tau, recall, precision});
        }
        res.per_threshold.push_back(ap_t);
    }
    res.map = std::accumulate(res.per_threshold.begin(), res.per_threshold.end(), 0.0) /
              static_cast<double>(res.per_threshold.size());
    return res;
}

double average_precision_interpolated(const std::vector<double>& oks,
                                      const std::vector<double>& conf, const EvalConfig& cfg) {
    cfg.validate();
    if (oks.empty()) throw std::domain_error("average_precision_interpolated: empty input");
    if (oks.size() != conf.size())
        throw std::domain_error("average_precision_interpolated: oks/conf length mismatch");

    const auto order = rank_by_confidence(conf);
    const double n = static_cast<double>(oks.size());
    double total = 0.0;
    for (double tau : cfg.thresholds) {
        // Precision/recall after each rank, then the running-max envelope.
        std::vector<double> prec(order.size()), rec(order.size());
        int passing = 0;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            if (oks[order[rank]] > tau) ++passing;
            prec[rank] = static_cast<double>(passing) / static_cast<double>(rank + 1);
            rec[rank] = static_cast<double>(passing) / n;
        }
        for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
        double ap_t = 0.0;
        for (int r = 0; r <= 100; ++r) {
            const double target = r / 100.0;
            const auto it = std::lower_bound(rec.begin(), rec.end(), target);
            ap_t += (it == rec.end()) ? 0.0 : prec[static_cast<std::size_t>(it - rec.begin())];
        }
        total += ap_t / 101.0;
    }
    return total / static_cast<double>(cfg.thresholds.size());
}

double pck(const PredictedInstance& pred, const GroundTruthInstance& gt, double norm,
           double tau) {
    if (!(norm > 0.0)) throw std::domain_error("pck: norm must be > 0");
    if (!(tau > 0.0)) throw std::domain_error("pck: tau must be > 0");
    if (pred.keypoints.size() != gt.keypoints.size() ||
        gt.keypoints.size() != gt.visibility.size())
        throw std::domain_error("pck: keypoint count mismatch");
    int visible = 0, correct = 0;
    for (std::size_t k = 0; k < gt.keypoints.size(); ++k) {
        if (!gt.visibility[k]) continue;
        ++visible;
        if ((pred.keypoints[k] - gt.keypoints[k]).norm() / norm <= tau) ++correct;
    }
    if (visible == 0) throw NotEvaluableError("pck: no visible keypoint");
    return static_cast<double>(correct) / visible;
}

SparsificationCurve ause_curve(const std::vector<double>& errors,
                               const std::vector<double>& conf, int steps) {
    if (errors.size() != conf.size())
        throw std::domain_error("ause: errors/conf length mismatch");
    const std::size_t n = errors.size();
    if (n < 2) throw std::domain_error("ause: need at least two samples");
    if (steps < 2) throw std::domain_error("ause: steps must be >= 2");

    // Removal orders: ascending confidence (least confident first) and
    // descending true error (oracle), both stable in the original index.
    std::vector<std::size_t> by_conf(n), by_err(n);
    std::iota(by_conf.begin(), by_conf.end(), std::size_t{0});
    std::iota(by_err.begin(), by_err.end(), std::size_t{0});
    std::stable_sort(by_conf.begin(), by_conf.end(),
                     [&conf](std::size_t a, std::size_t b) { return conf[a] < conf[b]; });
    std::stable_sort(by_err.begin(), by_err.end(),
                     [&errors](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });

    // Suffix means after removing the first r elements of a removal order.
    auto remaining_mean = [&errors](const std::vector<std::size_t>& order, std::size_t removed) {
        double sum = 0.0;
        for (std::size_t i = removed; i < order.size(); ++i) sum += errors[order[i]];
        return sum / static_cast<double>(order.size() - removed);
    };

    SparsificationCurve out;
    double gap_sum = 0.0;
    for (int j = 0; j < steps; ++j) {
        const double f = static_cast<double>(j) / steps;
        const std::size_t removed = (static_cast<std::size_t>(j) * n) / static_cast<std::size_t>(steps);
        const double rem = remaining_mean(by_conf, removed);
        const double ora = remaining_mean(by_err, removed);
        out.points.push_back({f, rem, ora});
        gap_sum += rem - ora;
    }
    out.ause = gap_sum / steps;
    return out;
}

double ause(const std::vector<double>& errors, const std::vector<double>& conf, int steps) {
    return ause_curve(errors, conf, steps).ause;
}

std::optional<double> pearson(const std::vector<double>& conf, const std::vector<double>& oks) {
    if (conf.size() != oks.size()) throw std::domain_error("pearson: length mismatch");
    const std::size_t n = conf.size();
    if (n < 2) throw std::domain_error("pearson: need at least two samples");
    const double mc = std::accumulate(conf.begin(), conf.end(), 0.0) / static_cast<double>(n);
    const double mo = std::accumulate(oks.begin(), oks.end(), 0.0) / static_cast<double>(n);
    double sc = 0.0, so = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dc = conf[i] - mc;
        const double dk = oks[i] - mo;
        sc += dc * dc;
        so += dk * dk;
        cross += dc * dk;
    }
    if (sc <= 0.0 || so <= 0.0) return std::nullopt;
    return cross / std::sqrt(sc * so);
}

std::vector<ReliabilityBin> reliability_curve(const std::vector<double>& conf,
                                              const std::vector<double>& oks, int bins) {
    if (conf.size() != oks.size()) throw std::domain_error("reliability_curve: length mismatch");
    if (bins < 2) throw std::domain_error("reliability_curve: bins must be >= 2");
    std::vector<double> sum_c(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> sum_o(static_cast<std::size_t>(bins), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < conf.size(); ++i) {
        int b = static_cast<int>(conf[i] * bins);
        b = std::clamp(b, 0, bins - 1);  // conf == 1.0 lands in the last bin
        const auto bi = static_cast<std::size_t>(b);
        sum_c[bi] += conf[i];
        sum_o[bi] += oks[i];
        ++cnt[bi];
    }
    std::vector<ReliabilityBin> out;
    for (int b = 0; b < bins; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (cnt[bi] == 0) continue;
        out.push_back({(b + 0.5) / bins, sum_c[bi] / cnt[bi], sum_o[bi] / cnt[bi], cnt[bi]});
    }
    return out;
}

double reliability_deviation(const std::vector<ReliabilityBin>& bins) {
    if (bins.empty()) return 0.0;
    double dev = 0.0;
    for (const auto& b : bins) dev += std::abs(b.mean_conf - b.mean_oks);
    return dev / static_cast<double>(bins.size());
}

}  // namespace poscal
