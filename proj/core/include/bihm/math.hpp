#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include "bihm/rng.hpp"

namespace bihm {

/// Sigmoid outputs are clamped to [kProbEpsilon, 1 - kProbEpsilon] before
/// taking logs, so every Bernoulli log-probability is finite.
inline constexpr double kProbEpsilon = 1e-7;

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// log(1 + exp(a)) without overflow.
inline double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

/// log(clamp(sigmoid(a), eps, 1 - eps)).
inline double clamped_log_sigmoid(double a) {
  static const double lo = std::log(kProbEpsilon);
  static const double hi = std::log1p(-kProbEpsilon);
  const double v = -softplus(-a);
  return v < lo ? lo : (v > hi ? hi : v);
}

/// Clamped log-probability of bit `t` under Bernoulli(sigmoid(a)).
inline double bernoulli_log_prob(double a, double t) {
  return t != 0.0 ? clamped_log_sigmoid(a) : clamped_log_sigmoid(-a);
}

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// log(sum_i exp(values[i])); -inf for an empty span.
double log_sum_exp(std::span<const double> values);

/// Index drawn with probability proportional to exp(log_weights[i]).
/// All -inf weights fall back to a uniform draw.
std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng);

/// Streaming accumulator for importance weights given in the log domain.
///
/// Keeps shifted sums S1 = sum exp(v - m) and S2 = sum exp(2 (v - m)) with m
/// the running maximum, which is enough for the log of the mean, the
/// delta-method standard error of that log, and the effective sample size.
class LogMeanAccumulator {
 public:
  void add(double log_value);

  std::size_t count() const { return count_; }

  /// log((1/n) sum exp(v_i)).
  double log_mean() const;

  /// Standard error of log_mean(): SE(mean) / mean, with the unbiased
  /// (n - 1) sample variance. Zero for n < 2.
  double log_mean_std_error() const;

  /// (sum w)^2 / sum w^2, in [1, n]; 1 when every value is -inf.
  double effective_sample_size() const;

  /// True when every accumulated value was -inf.
  bool degenerate() const { return count_ > 0 && s1_ == 0.0; }

 private:
  std::size_t count_ = 0;
  double max_ = -std::numeric_limits<double>::infinity();
  double s1_ = 0.0;
  double s2_ = 0.0;
};

}  // namespace bihm
