#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bihm/model.hpp"
#include "bihm/rng.hpp"

namespace bihm {

struct TrainConfig {
  std::size_t k_train = 10;  // importance samples per datapoint
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  double l1_lambda = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;

  // Optional second phase, run after `epochs`: fine-tune with more samples
  // and a lower learning rate. Disabled when finetune_epochs == 0.
  std::size_t finetune_epochs = 0;
  std::size_t finetune_k = 100;
  double finetune_learning_rate = 3e-4;

  // Metrics. log Z^2 is estimated every `z_every` epochs (0 = never) with
  // z_k_outer outer samples; eval_k samples per datapoint for the
  // train/valid log p~* columns (0 = use k_train of the active phase).
  std::size_t z_every = 0;
  std::size_t z_k_outer = 10000;
  std::size_t eval_k = 0;
  /// Cap on training rows used for the train_logptilde metric (0 = all).
  std::size_t train_metric_rows = 0;

  void validate() const;
};

struct AdamState {
  ModelGradient first_moment;
  ModelGradient second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros_like(const BihmModel& model);
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::uint64_t updates = 0;
  double train_log_ptilde = 0.0;
  std::optional<double> valid_log_ptilde;
  std::optional<double> two_log_z;
  std::optional<double> ess_percent;
  double seconds = 0.0;
};

/// Glorot-uniform weights, every bias (layers and prior) set to -1.
BihmModel init_model(const std::vector<Index>& layer_sizes, std::uint64_t seed);

/// Importance-weighted ascent direction for log p~*(x), averaged over the
/// rows of `batch`: for each datapoint K draws from q(h | x), weights
/// w~_k proportional to sqrt(p(x, h_k) / q(h_k | x)), and
/// sum_k w~_k d/dtheta [log p(x, h_k) + log q(h_k | x)].
ModelGradient minibatch_gradient(const BihmModel& model, const Matrix& batch, std::size_t k, Rng& rng);

/// Bias-corrected Adam ascent step followed by L1 shrinkage
/// w -= lr * lambda * sign(w) on weights (biases are not regularized).
void adam_update(BihmModel& model, AdamState& state, const ModelGradient& gradient, const TrainConfig& config);
/// Same step with an explicit learning rate (used by the fine-tune phase).
void adam_update(BihmModel& model, AdamState& state, const ModelGradient& gradient, const TrainConfig& config,
                 double learning_rate);

struct TrainResult {
  BihmModel model;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&, const BihmModel&)>;

/// Shuffled-minibatch training loop. `valid` may be empty. Throws
/// TrainingDivergedError if a parameter becomes non-finite.
TrainResult train(BihmModel model, const Matrix& data, const Matrix& valid, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace bihm
