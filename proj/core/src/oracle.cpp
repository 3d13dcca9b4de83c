#include "bihm/oracle.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "bihm/errors.hpp"
#include "bihm/math.hpp"

namespace bihm {
namespace {

constexpr std::uint64_t kChunk = 4096;

void require_bits(Index bits, EnumLimit limit, const char* what) {
  if (bits > limit.max_total_bits || bits >= 63) {
    throw EnumerationLimitError(std::string(what) + ": " + std::to_string(bits) + " bits exceeds the limit of " +
                                std::to_string(limit.max_total_bits));
  }
}

// Latent configurations [first, first + count) with h_1 ... h_L concatenated,
// h_1's first unit most significant.
LatentBatch latent_chunk(const BihmModel& model, std::uint64_t first, std::uint64_t count) {
  const Index total = model.latent_bits();
  LatentBatch batch;
  for (int l = 1; l <= model.depth(); ++l) {
    batch.layers.emplace_back(static_cast<Index>(count), model.layer_sizes()[static_cast<std::size_t>(l)]);
  }
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::uint64_t idx = first + r;
    Index bit = total - 1;
    for (auto& m : batch.layers) {
      for (Index c = 0; c < m.cols(); ++c, --bit) m(static_cast<Index>(r), c) = static_cast<double>((idx >> bit) & 1u);
    }
  }
  return batch;
}

// Calls fn(log_p, log_q, batch) for every chunk of latent configurations.
template <class Fn>
void for_each_latent_chunk(const BihmModel& model, const Vector& x, Fn&& fn) {
  const std::uint64_t n = std::uint64_t{1} << model.latent_bits();
  for (std::uint64_t first = 0; first < n; first += kChunk) {
    const std::uint64_t count = std::min(kChunk, n - first);
    const LatentBatch batch = latent_chunk(model, first, count);
    const Matrix xs = x.transpose().replicate(static_cast<Index>(count), 1);
    fn(log_joint_p_rows(model, xs, batch), log_q_rows(model, xs, batch), batch);
  }
}

void check_x(const BihmModel& model, const Vector& x) {
  if (x.size() != model.visible_dim()) throw ShapeError("oracle: visible size mismatch");
  require_binary(x, "oracle visible vector");
}

double log_ptilde_unchecked(const BihmModel& model, const Vector& x) {
  std::vector<double> terms;
  terms.reserve(std::size_t{1} << model.latent_bits());
  for_each_latent_chunk(model, x, [&](const Vector& lp, const Vector& lq, const LatentBatch&) {
    for (Index i = 0; i < lp.size(); ++i) terms.push_back(0.5 * (lp[i] + lq[i]));
  });
  return 2.0 * log_sum_exp(terms);
}

double log_p_unchecked(const BihmModel& model, const Vector& x) {
  std::vector<double> terms;
  terms.reserve(std::size_t{1} << model.latent_bits());
  for_each_latent_chunk(model, x, [&](const Vector& lp, const Vector&, const LatentBatch&) {
    for (Index i = 0; i < lp.size(); ++i) terms.push_back(lp[i]);
  });
  return log_sum_exp(terms);
}

}  // namespace

Vector config_from_index(std::uint64_t index, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<double>((index >> (n - 1 - i)) & 1u);
  return v;
}

std::uint64_t index_from_config(const Vector& bits) {
  std::uint64_t idx = 0;
  for (Index i = 0; i < bits.size(); ++i) idx = (idx << 1) | (bits[i] != 0.0 ? 1u : 0u);
  return idx;
}

double exact_log_ptilde(const BihmModel& model, const Vector& x, EnumLimit limit) {
  require_bits(model.latent_bits(), limit, "exact_log_ptilde");
  check_x(model, x);
  return log_ptilde_unchecked(model, x);
}

double exact_log_p(const BihmModel& model, const Vector& x, EnumLimit limit) {
  require_bits(model.latent_bits(), limit, "exact_log_p");
  check_x(model, x);
  return log_p_unchecked(model, x);
}

double exact_log_z2(const BihmModel& model, EnumLimit limit) {
  require_bits(model.visible_dim() + model.latent_bits(), limit, "exact_log_z2");
  const std::uint64_t nx = std::uint64_t{1} << model.visible_dim();
  std::vector<double> terms(nx);
  for (std::uint64_t i = 0; i < nx; ++i) terms[i] = log_ptilde_unchecked(model, config_from_index(i, model.visible_dim()));
  return log_sum_exp(terms);
}

double exact_bhattacharyya(const BihmModel& model, EnumLimit limit) { return -0.5 * exact_log_z2(model, limit); }

double exact_log_pstar(const BihmModel& model, const Vector& x, EnumLimit limit) {
  const double log_z2 = exact_log_z2(model, limit);
  return exact_log_ptilde(model, x, limit) - log_z2;
}

ModelGradient exact_grad_log_ptilde(const BihmModel& model, const Vector& x, EnumLimit limit) {
  require_bits(model.latent_bits(), limit, "exact_grad_log_ptilde");
  check_x(model, x);
  const double norm = 0.5 * log_ptilde_unchecked(model, x);  // log sum_h sqrt(p q)
  const int L = model.depth();
  ModelGradient grad = ModelGradient::zeros_like(model);
  for_each_latent_chunk(model, x, [&](const Vector& lp, const Vector& lq, const LatentBatch& batch) {
    for (Index r = 0; r < lp.size(); ++r) {
      const double gamma = std::exp(0.5 * (lp[r] + lq[r]) - norm);
      const LatentConfig h = batch.row(r);
      auto at = [&](int l) -> const Vector& { return l == 0 ? x : h.layers[static_cast<std::size_t>(l - 1)]; };
      for (Index i = 0; i < model.prior().dim(); ++i) {
        grad.d_prior[i] += gamma * (at(L)[i] - sigmoid(model.prior().biases[i]));
      }
      for (int l = 1; l <= L; ++l) {
        const auto idx = static_cast<std::size_t>(l - 1);
        const LayerGradient gp = layer_grad(model.p_layer(l), at(l), at(l - 1));
        const LayerGradient gq = layer_grad(model.q_layer(l), at(l - 1), at(l));
        grad.p_layers[idx].d_weights += gamma * gp.d_weights;
        grad.p_layers[idx].d_biases += gamma * gp.d_biases;
        grad.q_layers[idx].d_weights += gamma * gq.d_weights;
        grad.q_layers[idx].d_biases += gamma * gq.d_biases;
      }
    }
  });
  return grad;
}

PartialAssignment PartialAssignment::all_free(const BihmModel& model) {
  PartialAssignment a;
  for (const Index s : model.layer_sizes()) a.layers.emplace_back(static_cast<std::size_t>(s), kFreeBit);
  return a;
}

PartialAssignment PartialAssignment::free_layer(const Vector& x, const LatentConfig& h, int l) {
  PartialAssignment a;
  auto push = [&](const Vector& v) {
    std::vector<int> bits(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) bits[static_cast<std::size_t>(i)] = v[i] != 0.0 ? 1 : 0;
    a.layers.push_back(std::move(bits));
  };
  push(x);
  for (const auto& layer : h.layers) push(layer);
  if (l < 0 || l >= static_cast<int>(a.layers.size())) throw ArgumentError("free_layer: layer index out of range");
  for (auto& b : a.layers[static_cast<std::size_t>(l)]) b = kFreeBit;
  return a;
}

ConditionalDistribution exact_conditional_pstar(const BihmModel& model, const PartialAssignment& clamped,
                                                EnumLimit limit, int max_free_bits) {
  const auto& sizes = model.layer_sizes();
  if (clamped.layers.size() != sizes.size()) throw ShapeError("exact_conditional_pstar: layer count mismatch");
  ConditionalDistribution out;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    if (static_cast<Index>(clamped.layers[l].size()) != sizes[l]) {
      throw ShapeError("exact_conditional_pstar: layer size mismatch");
    }
    for (std::size_t i = 0; i < clamped.layers[l].size(); ++i) {
      const int b = clamped.layers[l][i];
      if (b == PartialAssignment::kFreeBit) {
        out.free_bits.emplace_back(static_cast<int>(l), static_cast<Index>(i));
      } else if (b != 0 && b != 1) {
        throw ArgumentError("exact_conditional_pstar: clamped bits must be 0, 1 or free");
      }
    }
  }
  const auto nfree = static_cast<Index>(out.free_bits.size());
  if (nfree > max_free_bits) {
    throw EnumerationLimitError("exact_conditional_pstar: " + std::to_string(nfree) + " free bits exceeds " +
                                std::to_string(max_free_bits));
  }
  require_bits(model.latent_bits(), limit, "exact_conditional_pstar");

  // log p*(x, h) up to a constant: 1/2 [log p(x, h) + log q(h | x) + log p~*(x)].
  std::unordered_map<std::uint64_t, double> ptilde_cache;
  const std::uint64_t n = std::uint64_t{1} << nfree;
  std::vector<double> logw(n);
  Vector x(sizes[0]);
  LatentConfig h;
  for (std::size_t l = 1; l < sizes.size(); ++l) h.layers.emplace_back(sizes[l]);
  for (std::uint64_t c = 0; c < n; ++c) {
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      Vector& target = l == 0 ? x : h.layers[l - 1];
      for (std::size_t i = 0; i < clamped.layers[l].size(); ++i) target[static_cast<Index>(i)] = clamped.layers[l][i];
    }
    for (Index f = 0; f < nfree; ++f) {
      const auto [layer, pos] = out.free_bits[static_cast<std::size_t>(f)];
      const double bit = static_cast<double>((c >> (nfree - 1 - f)) & 1u);
      (layer == 0 ? x : h.layers[static_cast<std::size_t>(layer - 1)])[pos] = bit;
    }
    const std::uint64_t xi = index_from_config(x);
    auto it = ptilde_cache.find(xi);
    if (it == ptilde_cache.end()) it = ptilde_cache.emplace(xi, log_ptilde_unchecked(model, x)).first;
    logw[c] = 0.5 * (log_joint_p(model, x, h) + log_q_given_x(model, x, h) + it->second);
  }
  const double norm = log_sum_exp(logw);
  out.probabilities.resize(static_cast<Index>(n));
  for (std::uint64_t c = 0; c < n; ++c) out.probabilities[static_cast<Index>(c)] = std::exp(logw[c] - norm);
  return out;
}

OracleReport oracle_report(const BihmModel& model, const std::optional<Vector>& grad_x, EnumLimit limit) {
  require_bits(model.visible_dim() + model.latent_bits(), limit, "oracle_report");
  OracleReport report;
  const std::uint64_t nx = std::uint64_t{1} << model.visible_dim();
  for (std::uint64_t i = 0; i < nx; ++i) {
    const Vector x = config_from_index(i, model.visible_dim());
    report.log_ptilde_by_x.push_back(log_ptilde_unchecked(model, x));
    report.log_p_by_x.push_back(log_p_unchecked(model, x));
  }
  report.log_z2 = log_sum_exp(report.log_ptilde_by_x);
  report.bhattacharyya = -0.5 * report.log_z2;
  if (grad_x) report.exact_grad = exact_grad_log_ptilde(model, *grad_x, limit);
  return report;
}

}  // namespace bihm
