#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bihm/model.hpp"
#include "bihm/rng.hpp"

namespace bihm {

/// A Monte-Carlo estimate in nats with its delta-method standard error.
struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t num_samples = 0;
};

/// K proposal samples from q(h | x) with their importance weights
/// log_w = 1/2 (log p(x, h) - log q(h | x)).
struct WeightedSampleSet {
  LatentBatch samples;
  Vector log_p;
  Vector log_q;
  Vector log_w;
  Vector log_w_normalized;

  Index size() const { return log_w.size(); }
};

struct ZEstimateConfig {
  std::size_t k_outer = 100000;
  std::size_t k_inner = 1;
};

struct EffectiveSampleSize {
  double value = 1.0;
  std::size_t num_samples = 0;
  /// Every weight was -inf; value is reported as 1.
  bool degenerate = false;

  double percent() const { return num_samples == 0 ? 0.0 : 100.0 * value / static_cast<double>(num_samples); }
};

WeightedSampleSet importance_weights(const BihmModel& model, const Vector& x, const LatentBatch& samples);
WeightedSampleSet importance_weights(const BihmModel& model, const Vector& x, const std::vector<LatentConfig>& samples);
WeightedSampleSet draw_weighted_samples(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng);

/// log p~*(x) = 2 [logsumexp(log_w) - log K] on an existing sample set.
EstimateWithError log_ptilde_from(const WeightedSampleSet& set);
/// log p(x) = logsumexp(log p - log q) - log K on an existing sample set.
EstimateWithError log_p_from(const WeightedSampleSet& set);

EstimateWithError est_log_ptilde(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng);
EstimateWithError est_log_p(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng);

/// log p~*(x), log p(x) and the ESS computed from one shared set of K draws.
/// Large K is processed in bounded-memory chunks.
struct LikelihoodEstimates {
  EstimateWithError log_ptilde;
  EstimateWithError log_p;
  EffectiveSampleSize ess;
};
LikelihoodEstimates est_log_likelihoods(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng);

/// Estimate of log Z^2. The mean of the linear-domain terms is unbiased for
/// Z^2; its log is biased low.
EstimateWithError est_log_z2(const BihmModel& model, const ZEstimateConfig& config, Rng& rng);

/// log p*(x) = log p~*(x) - log Z^2, standard errors added in quadrature.
EstimateWithError est_log_pstar(const BihmModel& model, const Vector& x, std::size_t k, double log_z2, Rng& rng,
                                double log_z2_std_error = 0.0);

/// (sum w)^2 / sum w^2 from log weights, clamped to [1, K].
EffectiveSampleSize ess(std::span<const double> log_w);

/// Per-datapoint estimates averaged over a data matrix (one row per datapoint).
struct DatasetEvaluation {
  EstimateWithError mean_log_ptilde;  // std_error: spread across datapoints, sd / sqrt(N)
  EstimateWithError mean_log_p;
  double mean_ess_percent = 0.0;
  std::size_t num_datapoints = 0;
};
DatasetEvaluation evaluate_dataset(const BihmModel& model, const Matrix& data, std::size_t k, Rng& rng);

}  // namespace bihm
