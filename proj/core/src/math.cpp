#include "bihm/math.hpp"

#include <algorithm>

namespace bihm {

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return kNegInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (const double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  const std::size_t n = log_weights.size();
  if (n == 1) return 0;
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (m == -std::numeric_limits<double>::infinity()) return static_cast<std::size_t>(rng.below(n));
  double total = 0.0;
  for (const double lw : log_weights) total += std::exp(lw - m);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    u -= std::exp(log_weights[i] - m);
    if (u < 0.0) return i;
  }
  // Rounding left a sliver of mass: return the last non-zero entry.
  for (std::size_t i = n; i-- > 0;) {
    if (log_weights[i] != -std::numeric_limits<double>::infinity()) return i;
  }
  return n - 1;
}

void LogMeanAccumulator::add(double log_value) {
  ++count_;
  if (log_value == -std::numeric_limits<double>::infinity()) return;
  if (log_value > max_) {
    if (s1_ > 0.0) {
      const double r = std::exp(max_ - log_value);
      s1_ *= r;
      s2_ *= r * r;
    }
    max_ = log_value;
  }
  const double e = std::exp(log_value - max_);
  s1_ += e;
  s2_ += e * e;
}

double LogMeanAccumulator::log_mean() const {
  if (count_ == 0 || s1_ == 0.0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(s1_ / static_cast<double>(count_));
}

double LogMeanAccumulator::log_mean_std_error() const {
  if (count_ < 2 || s1_ == 0.0) return 0.0;
  const auto n = static_cast<double>(count_);
  const double mean = s1_ / n;
  const double var = std::max(0.0, (s2_ / n - mean * mean) * n / (n - 1.0));
  return std::sqrt(var / n) / mean;
}

double LogMeanAccumulator::effective_sample_size() const {
  if (count_ == 0 || s1_ == 0.0) return 1.0;
  const double ess = s1_ * s1_ / s2_;
  return std::clamp(ess, 1.0, static_cast<double>(count_));
}

}  // namespace bihm
