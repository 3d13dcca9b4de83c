#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bihm/rng.hpp"

namespace bihm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// Sample matrices are row-major in meaning: one sample per row.
using Matrix = Eigen::MatrixXd;

/// One conditional Bernoulli layer: P(target_i = 1 | input) = sigmoid(W input + b)_i.
struct BeliefLayer {
  Matrix weights;  // out_dim x in_dim
  Vector biases;   // out_dim

  BeliefLayer() = default;
  BeliefLayer(Index out_dim, Index in_dim)
      : weights(Matrix::Zero(out_dim, in_dim)), biases(Vector::Zero(out_dim)) {}

  Index out_dim() const { return weights.rows(); }
  Index in_dim() const { return weights.cols(); }
};

/// Factorized Bernoulli distribution over the top latent layer.
struct FactorizedPrior {
  Vector biases;

  Index dim() const { return biases.size(); }
};

struct LayerGradient {
  Matrix d_weights;
  Vector d_biases;
};

/// Joint assignment h = (h_1, ..., h_L); layers[l - 1] holds h_l.
struct LatentConfig {
  std::vector<Vector> layers;
};

/// K latent configurations stored layer-wise; layers[l - 1] is K x dim(h_l).
struct LatentBatch {
  std::vector<Matrix> layers;

  Index rows() const { return layers.empty() ? 0 : layers.front().rows(); }
  LatentConfig row(Index i) const;
  static LatentBatch from_configs(const std::vector<LatentConfig>& configs);
};

/// Parameters of a bidirectional Helmholtz machine.
///
/// layer_sizes = [visible, h_1, ..., h_L]. With h_0 = x, p_layer(l) models
/// p(h_{l-1} | h_l) and q_layer(l) models q(h_l | h_{l-1}) for l = 1..L; the
/// prior is p(h_L). The constructor yields the all-zero model (every
/// conditional uniform, p = q).
class BihmModel {
 public:
  BihmModel() = default;
  explicit BihmModel(std::vector<Index> layer_sizes);

  const std::vector<Index>& layer_sizes() const { return sizes_; }
  Index visible_dim() const { return sizes_.front(); }
  /// Number of latent layers L.
  int depth() const { return static_cast<int>(sizes_.size()) - 1; }
  Index latent_bits() const;
  Index num_parameters() const;

  FactorizedPrior& prior() { return prior_; }
  const FactorizedPrior& prior() const { return prior_; }
  BeliefLayer& p_layer(int l);
  const BeliefLayer& p_layer(int l) const;
  BeliefLayer& q_layer(int l);
  const BeliefLayer& q_layer(int l) const;

  /// Throws ShapeError if any parameter array is inconsistent with layer_sizes().
  void validate() const;
  bool all_finite() const;

  bool operator==(const BihmModel& other) const;

 private:
  std::vector<Index> sizes_;
  FactorizedPrior prior_;
  std::vector<BeliefLayer> p_layers_;  // p_layers_[l - 1] is p_layer(l)
  std::vector<BeliefLayer> q_layers_;
};

/// Gradient (or any per-parameter array set) shaped like a BihmModel.
struct ModelGradient {
  Vector d_prior;
  std::vector<LayerGradient> p_layers;  // p_layers[l - 1] belongs to p_layer(l)
  std::vector<LayerGradient> q_layers;

  static ModelGradient zeros_like(const BihmModel& model);

  ModelGradient& operator+=(const ModelGradient& other);
  ModelGradient& operator*=(double s);

  /// Concatenation in checkpoint order (see flatten_parameters).
  Vector flatten() const;
};

/// All parameters in checkpoint order: prior biases; p-layers l = L..1
/// (row-major weights, then biases); q-layers l = 1..L (weights, biases).
Vector flatten_parameters(const BihmModel& model);
void assign_parameters(BihmModel& model, const Vector& flat);

// ---------------------------------------------------------------------------
// Per-layer primitives

/// Sum_i log Bernoulli(target_i | sigmoid(W input + b)_i), clamped.
double layer_log_prob(const BeliefLayer& layer, const Vector& input, const Vector& target);
/// One output bit vector, each bit ~ Bernoulli(sigmoid(W input + b)_i).
Vector layer_sample(const BeliefLayer& layer, const Vector& input, Rng& rng);
/// Exact partials of layer_log_prob: d_b = t - mu, d_W = (t - mu) input^T.
LayerGradient layer_grad(const BeliefLayer& layer, const Vector& input, const Vector& target);

double prior_log_prob(const FactorizedPrior& prior, const Vector& h);
Vector prior_sample(const FactorizedPrior& prior, Rng& rng);

// Batched forms; one sample per row.
Matrix layer_logits(const BeliefLayer& layer, const Matrix& inputs);
Vector log_prob_from_logits(const Matrix& logits, const Matrix& targets);
Matrix sample_from_logits(const Matrix& logits, Rng& rng);
Vector layer_log_prob_rows(const BeliefLayer& layer, const Matrix& inputs, const Matrix& targets);
Vector prior_log_prob_rows(const FactorizedPrior& prior, const Matrix& h);
Matrix prior_sample_rows(const FactorizedPrior& prior, Index n, Rng& rng);

// ---------------------------------------------------------------------------
// Model-level densities and ancestral sampling

/// log p(x, h) = log p(h_L) + sum_l log p(h_{l-1} | h_l).
double log_joint_p(const BihmModel& model, const Vector& x, const LatentConfig& h);
/// log q(h | x) = sum_l log q(h_l | h_{l-1}).
double log_q_given_x(const BihmModel& model, const Vector& x, const LatentConfig& h);

LatentConfig sample_q(const BihmModel& model, const Vector& x, Rng& rng);

struct JointSample {
  Vector x;
  LatentConfig h;
};
JointSample sample_p(const BihmModel& model, Rng& rng);

Vector log_joint_p_rows(const BihmModel& model, const Matrix& x, const LatentBatch& h);
Vector log_q_rows(const BihmModel& model, const Matrix& x, const LatentBatch& h);
LatentBatch sample_q_rows(const BihmModel& model, const Matrix& x, Rng& rng);

struct JointBatch {
  Matrix x;
  LatentBatch h;
};
JointBatch sample_p_rows(const BihmModel& model, Index n, Rng& rng);

/// One latent draw per row of `x` from q(h | x), scored under p and q.
/// The conditional logits are kept because gradient code needs sigmoid(logits).
struct ScoredSamples {
  LatentBatch latents;
  Vector log_p;                 // log p(x_r, h_r)
  Vector log_q;                 // log q(h_r | x_r)
  std::vector<Matrix> p_logits;  // p_logits[l - 1]: logits of p(h_{l-1} | h_l)
  std::vector<Matrix> q_logits;  // q_logits[l - 1]: logits of q(h_l | h_{l-1})
};
ScoredSamples draw_from_q_and_score(const BihmModel& model, const Matrix& x, Rng& rng);

/// Throws ArgumentError unless every entry is exactly 0 or 1.
void require_binary(std::span<const double> values, const char* what);
inline void require_binary(const Matrix& m, const char* what) {
  require_binary(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())), what);
}
inline void require_binary(const Vector& v, const char* what) {
  require_binary(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), what);
}

}  // namespace bihm
