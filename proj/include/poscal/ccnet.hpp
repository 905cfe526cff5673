#pragma once

#include <cstdint>
#include <vector>

#include "poscal/simulate.hpp"
#include "poscal/types.hpp"

namespace poscal {

/// One fully-connected layer mapping per-keypoint features to 2K logits
/// (K confidence + K visibility), squashed through a logistic. Row k of the
/// weight matrix scores keypoint k; row K+k predicts its visibility.
struct CalibHead {
    int feature_dim = 0;
    int keypoint_count = 0;
    std::vector<double> weights;  // row-major, 2K x F
    std::vector<double> bias;     // 2K

    static CalibHead zeros(int feature_dim, int keypoint_count);
    void validate() const;
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

struct HeadOutput {
    std::vector<double> s_hat;  // K, strictly inside (0,1)
    std::vector<double> v_hat;  // K, strictly inside (0,1)
};

/// Deterministic forward pass; features is a K-vector of F-vectors.
HeadOutput forward(const std::vector<std::vector<double>>& features, const CalibHead& head);

struct TrainConfig {
    double lambda_vis = 2e-2;
    int epochs = 2;
    double learning_rate = 0.1;
    double lr_decay = 0.7;  // multiplicative step decay per epoch
    int batch_size = 32;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;
    bool cross_entropy_conf = false;  // optional CE variant of the confidence loss

    void validate() const;
};

/// Calibration loss for one instance: visibility-masked squared error on the
/// confidence targets plus lambda-weighted BCE on visibility,
///   sum_k v_k (s_hat_k - s_k)^2 + lambda * sum_k BCE(v_hat_k, v_k).
double ccnet_loss(const std::vector<double>& s_hat, const std::vector<double>& v_hat,
                  const std::vector<double>& s, const std::vector<bool>& v, double lambda_vis,
                  bool cross_entropy_conf = false);

struct TrainSample {
    std::vector<std::vector<double>> features;  // K x F
    std::vector<double> s;                      // per-keypoint OKS targets
    std::vector<bool> v;
};

struct TrainingError : std::runtime_error {
    CalibHead last_good;
    int epoch = 0;
    TrainingError(const std::string& msg, CalibHead head, int ep)
        : std::runtime_error(msg), last_good(std::move(head)), epoch(ep) {}
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> heldout;
};

/// Deterministic instance-level split (shuffle by seed, first part trains).
Split split_instances(std::size_t n, double holdout_fraction, std::uint64_t seed);

/// Per-keypoint OKS targets and visibilities for one benchmark instance.
TrainSample make_sample(const SynthInstance& inst, const KeypointSpec& spec);

/// Adam with step LR decay on the train split of the given samples.
/// Deterministic per config seed. Throws TrainingError with the last finite
/// weights when the loss stops being finite.
CalibHead train_samples(const std::vector<TrainSample>& samples, int feature_dim,
                        int keypoint_count, const TrainConfig& cfg);

/// Same, assembling samples from a synthetic benchmark. The benchmark (and
/// hence every geometric metric) is left untouched.
CalibHead train(const SynthBenchmark& bench, const TrainConfig& cfg);

/// Batch-mean loss and its analytic gradient, exposed for verification.
double batch_loss(const CalibHead& head, const std::vector<TrainSample>& batch,
                  const TrainConfig& cfg);
void batch_gradient(const CalibHead& head, const std::vector<TrainSample>& batch,
                    const TrainConfig& cfg, std::vector<double>& grad_w,
                    std::vector<double>& grad_b);

/// Max relative deviation between analytic and central finite-difference
/// gradients over all parameters (step 1e-6).
double analytic_grad_check(const CalibHead& head, const std::vector<TrainSample>& batch,
                           const TrainConfig& cfg);

}  // namespace poscal
