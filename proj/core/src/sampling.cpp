#include "bihm/sampling.hpp"

#include <string>

#include "bihm/errors.hpp"
#include "bihm/math.hpp"

namespace bihm {
namespace {

const Vector& level(const GibbsState& s, int l) {
  return l == 0 ? s.x : s.latents.layers[static_cast<std::size_t>(l - 1)];
}

void check_state(const BihmModel& model, const GibbsState& state) {
  if (state.x.size() != model.visible_dim()) throw ShapeError("gibbs state: visible size mismatch");
  if (static_cast<int>(state.latents.layers.size()) != model.depth()) {
    throw ShapeError("gibbs state: latent depth mismatch");
  }
  for (int l = 1; l <= model.depth(); ++l) {
    if (level(state, l).size() != model.layer_sizes()[static_cast<std::size_t>(l)]) {
      throw ShapeError("gibbs state: latent layer size mismatch");
    }
  }
}

Vector logits_of(const BeliefLayer& layer, const Vector& input) { return layer.weights * input + layer.biases; }

// Logits of p(h_l | h_{l+1}), or of the prior for l = L.
Vector top_down_logits(const BihmModel& model, const GibbsState& state, int l) {
  return l == model.depth() ? model.prior().biases : logits_of(model.p_layer(l + 1), level(state, l + 1));
}

Vector rowwise_log_prob(const Vector& logits, const Matrix& targets) {
  return log_prob_from_logits(logits.transpose().replicate(targets.rows(), 1), targets);
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

void GibbsConfig::validate() const {
  if (num_sweeps < 1) throw ArgumentError("num_sweeps must be >= 1");
  if (proposals_per_step < 1) throw ArgumentError("proposals_per_step must be >= 1");
  if (ptilde_k < 1) throw ArgumentError("ptilde_k must be >= 1");
}

Vector hidden_candidate_log_weights(const BihmModel& model, const GibbsState& state, int l,
                                    const Matrix& candidates) {
  const int L = model.depth();
  if (l < 1 || l > L) throw ArgumentError("gibbs: hidden layer index " + std::to_string(l) + " out of range");
  check_state(model, state);
  const Index k = candidates.rows();

  const Vector lp = rowwise_log_prob(top_down_logits(model, state, l), candidates);
  const Vector lq = rowwise_log_prob(logits_of(model.q_layer(l), level(state, l - 1)), candidates);
  const Matrix below = level(state, l - 1).transpose().replicate(k, 1);
  Vector numerator = lp + lq + layer_log_prob_rows(model.p_layer(l), candidates, below);
  if (l < L) {
    const Matrix above = level(state, l + 1).transpose().replicate(k, 1);
    numerator += layer_log_prob_rows(model.q_layer(l + 1), candidates, above);
  }
  Vector out(k);
  for (Index i = 0; i < k; ++i) out[i] = 0.5 * numerator[i] - log_add_exp(lp[i], lq[i]);
  return out;
}

Vector gibbs_update_hidden(const BihmModel& model, const GibbsState& state, int l, const GibbsConfig& config,
                           Rng& rng) {
  config.validate();
  if (l < 1 || l > model.depth()) throw ArgumentError("gibbs: hidden layer index " + std::to_string(l) + " out of range");
  check_state(model, state);
  const Vector p_logits = top_down_logits(model, state, l);
  const Vector q_logits = logits_of(model.q_layer(l), level(state, l - 1));
  const auto k = static_cast<Index>(config.proposals_per_step);
  const Vector p_mu = p_logits.unaryExpr([](double v) { return sigmoid(v); });
  const Vector q_mu = q_logits.unaryExpr([](double v) { return sigmoid(v); });
  Matrix candidates(k, p_logits.size());
  for (Index i = 0; i < k; ++i) {
    const Vector& mu = rng.bernoulli(0.5) ? p_mu : q_mu;
    for (Index j = 0; j < mu.size(); ++j) candidates(i, j) = rng.bernoulli(mu[j]) ? 1.0 : 0.0;
  }
  if (k == 1) return candidates.row(0).transpose();
  const Vector lw = hidden_candidate_log_weights(model, state, l, candidates);
  return candidates.row(static_cast<Index>(sample_log_categorical(as_span(lw), rng))).transpose();
}

Vector gibbs_update_visible(const BihmModel& model, const GibbsState& state, const GibbsConfig& config, Rng& rng,
                            const Vector* observed) {
  config.validate();
  check_state(model, state);
  if (observed && observed->size() != model.visible_dim()) throw ShapeError("gibbs: mask size mismatch");
  const Vector& h1 = state.latents.layers.front();
  const Vector a = logits_of(model.p_layer(1), h1);
  const Vector mu = a.unaryExpr([](double v) { return sigmoid(v); });
  const auto k = static_cast<Index>(config.proposals_per_step);
  const Index v = model.visible_dim();

  Matrix candidates(k, v);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < v; ++j) {
      if (observed && (*observed)[j] != 0.0) {
        candidates(i, j) = state.x[j];
      } else {
        candidates(i, j) = rng.bernoulli(mu[j]) ? 1.0 : 0.0;
      }
    }
  }
  if (k == 1) return candidates.row(0).transpose();

  // log p~*(candidate) from ptilde_k draws of q(h | candidate) each.
  const auto m = static_cast<Index>(config.ptilde_k);
  const Matrix xs = candidates.replicate(1, m).reshaped<Eigen::RowMajor>(k * m, v);
  const ScoredSamples scored = draw_from_q_and_score(model, xs, rng);
  Vector log_ptilde(k);
  for (Index i = 0; i < k; ++i) {
    LogMeanAccumulator acc;
    for (Index j = 0; j < m; ++j) acc.add(0.5 * (scored.log_p[i * m + j] - scored.log_q[i * m + j]));
    log_ptilde[i] = 2.0 * acc.log_mean();
  }

  const Vector log_q_h1 = layer_log_prob_rows(model.q_layer(1), candidates, h1.transpose().replicate(k, 1));
  Vector lw(k);
  for (Index i = 0; i < k; ++i) {
    double full = 0.0;
    double free = 0.0;
    for (Index j = 0; j < v; ++j) {
      const double lp = bernoulli_log_prob(a[j], candidates(i, j));
      full += lp;
      if (!observed || (*observed)[j] == 0.0) free += lp;
    }
    lw[i] = 0.5 * (log_ptilde[i] + log_q_h1[i] + full) - free;
  }
  return candidates.row(static_cast<Index>(sample_log_categorical(as_span(lw), rng))).transpose();
}

void gibbs_sweep(const BihmModel& model, GibbsState& state, const GibbsConfig& config, Rng& rng,
                 const Vector* observed) {
  const int L = model.depth();
  for (int l = 1; l <= L; l += 2) {
    state.latents.layers[static_cast<std::size_t>(l - 1)] = gibbs_update_hidden(model, state, l, config, rng);
  }
  for (int l = 2; l <= L; l += 2) {
    state.latents.layers[static_cast<std::size_t>(l - 1)] = gibbs_update_hidden(model, state, l, config, rng);
  }
  state.x = gibbs_update_visible(model, state, config, rng, observed);
}

GibbsState gibbs_sample(const BihmModel& model, const std::optional<GibbsState>& init, const GibbsConfig& config,
                        Rng& rng) {
  config.validate();
  GibbsState state;
  if (init) {
    check_state(model, *init);
    state = *init;
  } else {
    JointSample s = sample_p(model, rng);
    state = {std::move(s.x), std::move(s.h)};
  }
  for (std::size_t i = 0; i < config.num_sweeps; ++i) gibbs_sweep(model, state, config, rng);
  return state;
}

GibbsState inpaint_chain(const BihmModel& model, const Vector& x_corrupt, const Vector& mask,
                         const GibbsConfig& config, Rng& rng) {
  config.validate();
  if (x_corrupt.size() != model.visible_dim()) throw ShapeError("inpaint: image size mismatch");
  if (mask.size() != model.visible_dim()) throw ShapeError("inpaint: mask size mismatch");
  require_binary(x_corrupt, "inpaint image");
  require_binary(mask, "inpaint mask");
  GibbsState state{x_corrupt, sample_q(model, x_corrupt, rng)};
  for (std::size_t i = 0; i < config.num_sweeps; ++i) gibbs_sweep(model, state, config, rng, &mask);
  return state;
}

Vector inpaint(const BihmModel& model, const Vector& x_corrupt, const Vector& mask, const GibbsConfig& config,
               Rng& rng) {
  return inpaint_chain(model, x_corrupt, mask, config, rng).x;
}

Vector expected_visible(const BihmModel& model, const GibbsState& state) {
  check_state(model, state);
  const Vector a = logits_of(model.p_layer(1), state.latents.layers.front());
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace bihm
