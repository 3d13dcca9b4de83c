#include "bihm/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "bihm/errors.hpp"
#include "bihm/math.hpp"

namespace bihm {
namespace {

// Upper bound on the number of sample rows scored at once.
constexpr Index kChunkRows = 8192;

void require_k(std::size_t k, const char* what) {
  if (k < 1) throw ArgumentError(std::string(what) + ": number of samples must be >= 1");
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Matrix replicate_row(const Vector& x, Index n) { return x.transpose().replicate(n, 1); }

EstimateWithError from_accumulator(const LogMeanAccumulator& acc, double scale) {
  return {scale * acc.log_mean(), scale * acc.log_mean_std_error(), acc.count()};
}

// log mean(w^2) = 2 log mean(w) + log(K / ess). The second term is >= 0 by
// construction, so the result never drops below the p~* estimate through
// rounding. `ratios` holds the same samples as log(w^2) and supplies the SE.
double log_p_value(const LogMeanAccumulator& weights) {
  return 2.0 * weights.log_mean() + std::log(static_cast<double>(weights.count()) / weights.effective_sample_size());
}

EstimateWithError log_p_from_accumulators(const LogMeanAccumulator& weights, const LogMeanAccumulator& ratios) {
  return {log_p_value(weights), ratios.log_mean_std_error(), ratios.count()};
}

}  // namespace

WeightedSampleSet importance_weights(const BihmModel& model, const Vector& x, const LatentBatch& samples) {
  const Index k = samples.rows();
  if (k == 0) throw ArgumentError("importance_weights: empty sample set");
  const Matrix xs = replicate_row(x, k);
  WeightedSampleSet set;
  set.samples = samples;
  set.log_p = log_joint_p_rows(model, xs, samples);
  set.log_q = log_q_rows(model, xs, samples);
  set.log_w = 0.5 * (set.log_p - set.log_q);
  set.log_w_normalized = set.log_w.array() - log_sum_exp(as_span(set.log_w));
  return set;
}

WeightedSampleSet importance_weights(const BihmModel& model, const Vector& x,
                                     const std::vector<LatentConfig>& samples) {
  if (samples.empty()) throw ArgumentError("importance_weights: empty sample set");
  return importance_weights(model, x, LatentBatch::from_configs(samples));
}

WeightedSampleSet draw_weighted_samples(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng) {
  require_k(k, "draw_weighted_samples");
  const Matrix xs = replicate_row(x, static_cast<Index>(k));
  ScoredSamples scored = draw_from_q_and_score(model, xs, rng);
  WeightedSampleSet set;
  set.samples = std::move(scored.latents);
  set.log_p = std::move(scored.log_p);
  set.log_q = std::move(scored.log_q);
  set.log_w = 0.5 * (set.log_p - set.log_q);
  set.log_w_normalized = set.log_w.array() - log_sum_exp(as_span(set.log_w));
  return set;
}

EstimateWithError log_ptilde_from(const WeightedSampleSet& set) {
  LogMeanAccumulator acc;
  for (Index i = 0; i < set.size(); ++i) acc.add(set.log_w[i]);
  return from_accumulator(acc, 2.0);
}

EstimateWithError log_p_from(const WeightedSampleSet& set) {
  LogMeanAccumulator weights;
  LogMeanAccumulator ratios;
  for (Index i = 0; i < set.size(); ++i) {
    weights.add(set.log_w[i]);
    ratios.add(set.log_p[i] - set.log_q[i]);
  }
  return log_p_from_accumulators(weights, ratios);
}

LikelihoodEstimates est_log_likelihoods(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng) {
  require_k(k, "est_log_likelihoods");
  if (x.size() != model.visible_dim()) throw ShapeError("est_log_likelihoods: visible size mismatch");
  LogMeanAccumulator weights;
  LogMeanAccumulator ratios;
  auto remaining = static_cast<Index>(k);
  while (remaining > 0) {
    const Index n = std::min(remaining, kChunkRows);
    const ScoredSamples scored = draw_from_q_and_score(model, replicate_row(x, n), rng);
    for (Index i = 0; i < n; ++i) {
      const double log_ratio = scored.log_p[i] - scored.log_q[i];
      weights.add(0.5 * log_ratio);
      ratios.add(log_ratio);
    }
    remaining -= n;
  }
  return {from_accumulator(weights, 2.0), log_p_from_accumulators(weights, ratios),
          {weights.effective_sample_size(), weights.count(), weights.degenerate()}};
}

EstimateWithError est_log_ptilde(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng) {
  return est_log_likelihoods(model, x, k, rng).log_ptilde;
}

EstimateWithError est_log_p(const BihmModel& model, const Vector& x, std::size_t k, Rng& rng) {
  return est_log_likelihoods(model, x, k, rng).log_p;
}

EstimateWithError est_log_z2(const BihmModel& model, const ZEstimateConfig& config, Rng& rng) {
  require_k(config.k_outer, "est_log_z2 (k_outer)");
  require_k(config.k_inner, "est_log_z2 (k_inner)");
  const auto inner = static_cast<Index>(config.k_inner);
  const Index outer_chunk = std::max<Index>(1, kChunkRows / inner);
  LogMeanAccumulator outer;
  auto remaining = static_cast<Index>(config.k_outer);
  while (remaining > 0) {
    const Index n = std::min(remaining, outer_chunk);
    const JointBatch joint = sample_p_rows(model, n, rng);
    const Vector log_p = log_joint_p_rows(model, joint.x, joint.h);
    const Vector log_q = log_q_rows(model, joint.x, joint.h);
    // Row r * inner + j holds the j-th inner draw for outer sample r.
    const Matrix xs = joint.x.replicate(1, inner).reshaped<Eigen::RowMajor>(n * inner, joint.x.cols());
    const ScoredSamples inner_draws = draw_from_q_and_score(model, xs, rng);
    for (Index r = 0; r < n; ++r) {
      LogMeanAccumulator terms;
      for (Index j = 0; j < inner; ++j) {
        const Index row = r * inner + j;
        terms.add(0.5 * ((inner_draws.log_p[row] - log_p[r]) + (log_q[r] - inner_draws.log_q[row])));
      }
      outer.add(terms.log_mean());
    }
    remaining -= n;
  }
  EstimateWithError est = from_accumulator(outer, 1.0);
  est.num_samples = config.k_outer * config.k_inner;
  return est;
}

EstimateWithError est_log_pstar(const BihmModel& model, const Vector& x, std::size_t k, double log_z2, Rng& rng,
                                double log_z2_std_error) {
  const EstimateWithError ptilde = est_log_ptilde(model, x, k, rng);
  return {ptilde.value - log_z2, std::hypot(ptilde.std_error, log_z2_std_error), ptilde.num_samples};
}

EffectiveSampleSize ess(std::span<const double> log_w) {
  if (log_w.empty()) throw ArgumentError("ess: empty weight vector");
  LogMeanAccumulator acc;
  for (const double lw : log_w) acc.add(lw);
  return {acc.effective_sample_size(), acc.count(), acc.degenerate()};
}

DatasetEvaluation evaluate_dataset(const BihmModel& model, const Matrix& data, std::size_t k, Rng& rng) {
  require_k(k, "evaluate_dataset");
  if (data.cols() != model.visible_dim()) throw ShapeError("evaluate_dataset: visible size mismatch");
  const Index n = data.rows();
  if (n == 0) throw ArgumentError("evaluate_dataset: empty dataset");
  const auto kk = static_cast<Index>(k);

  Vector ptilde(n);
  Vector logp(n);
  double ess_pct = 0.0;
  if (kk >= kChunkRows) {
    for (Index i = 0; i < n; ++i) {
      const LikelihoodEstimates est = est_log_likelihoods(model, data.row(i).transpose(), k, rng);
      ptilde[i] = est.log_ptilde.value;
      logp[i] = est.log_p.value;
      ess_pct += est.ess.percent();
    }
  } else {
    // Several datapoints per chunk; row b * K + j is sample j of datapoint b.
    const Index per_chunk = std::max<Index>(1, kChunkRows / kk);
    for (Index start = 0; start < n; start += per_chunk) {
      const Index b = std::min(per_chunk, n - start);
      const Matrix xs = data.middleRows(start, b).replicate(1, kk).reshaped<Eigen::RowMajor>(b * kk, data.cols());
      const ScoredSamples scored = draw_from_q_and_score(model, xs, rng);
      for (Index i = 0; i < b; ++i) {
        LogMeanAccumulator weights;
        for (Index j = 0; j < kk; ++j) weights.add(0.5 * (scored.log_p[i * kk + j] - scored.log_q[i * kk + j]));
        ptilde[start + i] = 2.0 * weights.log_mean();
        logp[start + i] = log_p_value(weights);
        ess_pct += 100.0 * weights.effective_sample_size() / static_cast<double>(kk);
      }
    }
  }

  auto summarize = [&](const Vector& v) {
    const double mean = v.mean();
    const double var = n > 1 ? (v.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    return EstimateWithError{mean, std::sqrt(var / static_cast<double>(n)), k};
  };
  DatasetEvaluation out;
  out.mean_log_ptilde = summarize(ptilde);
  out.mean_log_p = summarize(logp);
  out.mean_ess_percent = ess_pct / static_cast<double>(n);
  out.num_datapoints = static_cast<std::size_t>(n);
  return out;
}

}  // namespace bihm
