#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "bihm/model.hpp"

namespace bihm {

/// Exhaustive-enumeration ground truth for small models.
///
/// Every routine enumerates binary configurations in lexicographic order
/// (first element most significant) and refuses with EnumerationLimitError
/// before doing any work if the enumerated bits exceed the limit.
struct EnumLimit {
  int max_total_bits = 24;
};

/// Bit vector of length n for configuration index `index`, element 0 most significant.
Vector config_from_index(std::uint64_t index, Index n);
std::uint64_t index_from_config(const Vector& bits);

/// log p~*(x) = 2 log sum_h sqrt(p(x, h) q(h | x)).
double exact_log_ptilde(const BihmModel& model, const Vector& x, EnumLimit limit = {});
/// log p(x) = log sum_h p(x, h).
double exact_log_p(const BihmModel& model, const Vector& x, EnumLimit limit = {});
/// log Z^2 = log sum_x p~*(x).
double exact_log_z2(const BihmModel& model, EnumLimit limit = {});
/// Bhattacharyya distance between p and q, -log Z.
double exact_bhattacharyya(const BihmModel& model, EnumLimit limit = {});
/// log p*(x) = log p~*(x) - log Z^2.
double exact_log_pstar(const BihmModel& model, const Vector& x, EnumLimit limit = {});

/// Gradient of log p~*(x): sum_h g_h d/dtheta [log p(x, h) + log q(h | x)]
/// with g_h proportional to sqrt(p(x, h) q(h | x)).
ModelGradient exact_grad_log_ptilde(const BihmModel& model, const Vector& x, EnumLimit limit = {});

/// Partial assignment to (x, h_1, ..., h_L); layers[0] is x. Entries are
/// 0, 1 or kFreeBit.
struct PartialAssignment {
  static constexpr int kFreeBit = -1;
  std::vector<std::vector<int>> layers;

  /// Everything free.
  static PartialAssignment all_free(const BihmModel& model);
  /// Clamp a full state, then free layer `l`.
  static PartialAssignment free_layer(const Vector& x, const LatentConfig& h, int l);
};

/// Normalized p*(free bits | clamped bits) by enumeration of the free bits.
struct ConditionalDistribution {
  std::vector<std::pair<int, Index>> free_bits;  // (layer, position), layer 0 = x
  Vector probabilities;                         // indexed by free-bit configuration
};
ConditionalDistribution exact_conditional_pstar(const BihmModel& model, const PartialAssignment& clamped,
                                                EnumLimit limit = {}, int max_free_bits = 16);

struct OracleReport {
  std::vector<double> log_ptilde_by_x;  // indexed by config_from_index order
  std::vector<double> log_p_by_x;
  double log_z2 = 0.0;
  double bhattacharyya = 0.0;
  std::optional<ModelGradient> exact_grad;
};

/// All oracle quantities at once; `grad_x` requests the exact gradient for one datapoint.
OracleReport oracle_report(const BihmModel& model, const std::optional<Vector>& grad_x = std::nullopt,
                           EnumLimit limit = {});

}  // namespace bihm
