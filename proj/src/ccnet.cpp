#include "poscal/ccnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poscal/oks.hpp"
#include "poscal/rng.hpp"

namespace poscal {

CalibHead CalibHead::zeros(int feature_dim, int keypoint_count) {
    CalibHead h;
    h.feature_dim = feature_dim;
    h.keypoint_count = keypoint_count;
    h.weights.assign(static_cast<std::size_t>(2 * keypoint_count) * feature_dim, 0.0);
    h.bias.assign(static_cast<std::size_t>(2 * keypoint_count), 0.0);
    return h;
}

void CalibHead::validate() const {
    if (feature_dim < 1 || keypoint_count < 1)
        throw std::domain_error("CalibHead: bad dimensions");
    if (weights.size() != static_cast<std::size_t>(2 * keypoint_count) * feature_dim ||
        bias.size() != static_cast<std::size_t>(2 * keypoint_count))
        throw std::domain_error("CalibHead: parameter shape mismatch");
}

void TrainConfig::validate() const {
    if (!(lambda_vis >= 0.0)) throw std::domain_error("TrainConfig: lambda_vis must be >= 0");
    if (epochs < 1) throw std::domain_error("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::domain_error("TrainConfig: learning_rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw std::domain_error("TrainConfig: lr_decay must be in (0,1]");
    if (batch_size < 1) throw std::domain_error("TrainConfig: batch_size must be >= 1");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw std::domain_error("TrainConfig: holdout_fraction must be in [0,1)");
}

static double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

HeadOutput forward(const std::vector<std::vector<double>>& features, const CalibHead& head) {
    head.validate();
    const int k_count = head.keypoint_count;
    const int f_dim = head.feature_dim;
    if (features.size() != static_cast<std::size_t>(k_count))
        throw std::domain_error("forward: keypoint count mismatch");
    HeadOutput out;
    out.s_hat.resize(static_cast<std::size_t>(k_count));
    out.v_hat.resize(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        const auto& f = features[static_cast<std::size_t>(k)];
        if (f.size() != static_cast<std::size_t>(f_dim))
            throw std::domain_error("forward: feature dim mismatch");
        const double* ws = head.weights.data() + static_cast<std::size_t>(k) * f_dim;
        const double* wv = head.weights.data() + static_cast<std::size_t>(k_count + k) * f_dim;
        double zs = head.bias[static_cast<std::size_t>(k)];
        double zv = head.bias[static_cast<std::size_t>(k_count + k)];
        for (int j = 0; j < f_dim; ++j) {
            zs += ws[j] * f[static_cast<std::size_t>(j)];
            zv += wv[j] * f[static_cast<std::size_t>(j)];
        }
        out.s_hat[static_cast<std::size_t>(k)] = logistic(zs);
        out.v_hat[static_cast<std::size_t>(k)] = logistic(zv);
    }
    return out;
}

static double bce(double p, double target) {
    const double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

double ccnet_loss(const std::vector<double>& s_hat, const std::vector<double>& v_hat,
                  const std::vector<double>& s, const std::vector<bool>& v, double lambda_vis,
                  bool cross_entropy_conf) {
    if (s_hat.size() != s.size() || v_hat.size() != v.size() || s_hat.size() != v_hat.size())
        throw std::domain_error("ccnet_loss: length mismatch");
    double loss = 0.0;
    for (std::size_t k = 0; k < s_hat.size(); ++k) {
        if (v[k]) {
            loss += cross_entropy_conf ? bce(s_hat[k], s[k])
                                       : (s_hat[k] - s[k]) * (s_hat[k] - s[k]);
        }
        loss += lambda_vis * bce(v_hat[k], v[k] ? 1.0 : 0.0);
    }
    return loss;
}

Split split_instances(std::size_t n, double holdout_fraction, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng(seed).substream(0x5117u);
    // Fisher-Yates with the counter-based generator.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto heldout = static_cast<std::size_t>(std::floor(holdout_fraction * n));
    Split s;
    s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(heldout));
    s.heldout.assign(order.end() - static_cast<std::ptrdiff_t>(heldout), order.end());
    return s;
}

TrainSample make_sample(const SynthInstance& inst, const KeypointSpec& spec) {
    TrainSample s;
    s.features = inst.features;
    s.s = keypoint_oks_all(inst.pred, inst.gt, spec);
    s.v.assign(inst.gt.visibility.begin(), inst.gt.visibility.end());
    return s;
}

double batch_loss(const CalibHead& head, const std::vector<TrainSample>& batch,
                  const TrainConfig& cfg) {
    if (batch.empty()) throw std::domain_error("batch_loss: empty batch");
    double total = 0.0;
    for (const auto& sample : batch) {
        const HeadOutput out = forward(sample.features, head);
        total += ccnet_loss(out.s_hat, out.v_hat, sample.s, sample.v, cfg.lambda_vis,
                            cfg.cross_entropy_conf);
    }
    return total / static_cast<double>(batch.size());
}

void batch_gradient(const CalibHead& head, const std::vector<TrainSample>& batch,
                    const TrainConfig& cfg, std::vector<double>& grad_w,
                    std::vector<double>& grad_b) {
    if (batch.empty()) throw std::domain_error("batch_gradient: empty batch");
    const int k_count = head.keypoint_count;
    const int f_dim = head.feature_dim;
    grad_w.assign(head.weights.size(), 0.0);
    grad_b.assign(head.bias.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& sample : batch) {
        const HeadOutput out = forward(sample.features, head);
        for (int k = 0; k < k_count; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            const auto& f = sample.features[ki];
            // d loss / d z for the confidence logit. With the CE variant the
            // logistic derivative cancels; with MSE it stays.
            double dz_s = 0.0;
            if (sample.v[ki]) {
                const double sh = out.s_hat[ki];
                dz_s = cfg.cross_entropy_conf
                           ? (sh - sample.s[ki])
                           : 2.0 * (sh - sample.s[ki]) * sh * (1.0 - sh);
            }
            const double dz_v =
                cfg.lambda_vis * (out.v_hat[ki] - (sample.v[ki] ? 1.0 : 0.0));
            double* gw_s = grad_w.data() + static_cast<std::size_t>(k) * f_dim;
            double* gw_v = grad_w.data() + static_cast<std::size_t>(k_count + k) * f_dim;
            for (int j = 0; j < f_dim; ++j) {
                gw_s[j] += inv_b * dz_s * f[static_cast<std::size_t>(j)];
                gw_v[j] += inv_b * dz_v * f[static_cast<std::size_t>(j)];
            }
            grad_b[ki] += inv_b * dz_s;
            grad_b[static_cast<std::size_t>(k_count + k)] += inv_b * dz_v;
        }
    }
}

CalibHead train_samples(const std::vector<TrainSample>& samples, int feature_dim,
                        int keypoint_count, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw std::domain_error("train: no samples");
    const int k_count = keypoint_count;
    const int f_dim = feature_dim;

    const Split split = split_instances(samples.size(), cfg.holdout_fraction, cfg.seed);
    if (split.train.empty()) throw std::domain_error("train: empty train split");

    CalibHead head = CalibHead::zeros(f_dim, k_count);
    Rng init_rng = Rng(cfg.seed).substream(0xccu);
    for (double& w : head.weights) w = 0.1 * init_rng.next_gaussian();

    // Adam state.
    std::vector<double> mw(head.weights.size(), 0.0), vw(head.weights.size(), 0.0);
    std::vector<double> mb(head.bias.size(), 0.0), vb(head.bias.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order = split.train;
    std::vector<double> gw, gb;
    std::vector<TrainSample> batch;
    CalibHead last_good = head;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
        Rng shuffle_rng = Rng(cfg.seed).substream(1000 + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);

            batch_gradient(head, batch, cfg, gw, gb);
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            bool finite = true;
            auto adam_update = [&](std::vector<double>& p, std::vector<double>& m,
                                   std::vector<double>& v, const std::vector<double>& g) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam_eps);
                    if (!std::isfinite(p[i])) finite = false;
                }
            };
            adam_update(head.weights, mw, vw, gw);
            adam_update(head.bias, mb, vb, gb);
            if (!finite || !std::isfinite(batch_loss(head, batch, cfg))) {
                throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch),
                                    last_good, epoch);
            }
            last_good = head;
        }
    }
    return head;
}

CalibHead train(const SynthBenchmark& bench, const TrainConfig& cfg) {
    if (bench.instances.empty()) throw std::domain_error("train: empty benchmark");
    std::vector<TrainSample> samples;
    samples.reserve(bench.instances.size());
    for (const auto& inst : bench.instances)
        samples.push_back(make_sample(inst, bench.config.spec));
    return train_samples(samples, kFeatureDim, bench.config.spec.count, cfg);
}

double analytic_grad_check(const CalibHead& head, const std::vector<TrainSample>& batch,
                           const TrainConfig& cfg) {
    std::vector<double> gw, gb;
    batch_gradient(head, batch, cfg, gw, gb);

    const double h = 1e-6;
    double worst = 0.0;
    auto check = [&](std::vector<double> CalibHead::* member, const std::vector<double>& analytic) {
        CalibHead probe = head;
        auto& params = probe.*member;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double orig = params[i];
            params[i] = orig + h;
            const double up = batch_loss(probe, batch, cfg);
            params[i] = orig - h;
            const double dn = batch_loss(probe, batch, cfg);
            params[i] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
            worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
        }
    };
    check(&CalibHead::weights, gw);
    check(&CalibHead::bias, gb);
    return worst;
}

}  // namespace poscal
