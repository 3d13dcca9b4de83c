#include "bihm/model.hpp"

#include <cmath>
#include <string>

#include "bihm/errors.hpp"
#include "bihm/math.hpp"

namespace bihm {
namespace {

std::string dims(Index a, Index b) { return std::to_string(a) + " vs " + std::to_string(b); }

void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) throw ShapeError(std::string(what) + ": size mismatch (" + dims(actual, expected) + ")");
}

bool finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void require_binary(std::span<const double> values, const char* what) {
  for (const double v : values) {
    if (v != 0.0 && v != 1.0) throw ArgumentError(std::string(what) + ": entries must be 0 or 1");
  }
}

LatentConfig LatentBatch::row(Index i) const {
  LatentConfig config;
  config.layers.reserve(layers.size());
  for (const auto& m : layers) config.layers.emplace_back(m.row(i).transpose());
  return config;
}

LatentBatch LatentBatch::from_configs(const std::vector<LatentConfig>& configs) {
  LatentBatch batch;
  if (configs.empty()) return batch;
  const std::size_t depth = configs.front().layers.size();
  const auto n = static_cast<Index>(configs.size());
  for (std::size_t l = 0; l < depth; ++l) {
    const Index dim = configs.front().layers[l].size();
    Matrix m(n, dim);
    for (Index r = 0; r < n; ++r) {
      const auto& cfg = configs[static_cast<std::size_t>(r)];
      if (cfg.layers.size() != depth) throw ShapeError("latent batch: inconsistent depth");
      require_size(cfg.layers[l].size(), dim, "latent batch");
      m.row(r) = cfg.layers[l].transpose();
    }
    batch.layers.push_back(std::move(m));
  }
  return batch;
}

// ---------------------------------------------------------------------------

BihmModel::BihmModel(std::vector<Index> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ArgumentError("model needs a visible layer and at least one latent layer");
  for (const Index s : sizes_) {
    if (s < 1) throw ArgumentError("layer sizes must be positive");
  }
  const int L = depth();
  prior_.biases = Vector::Zero(sizes_.back());
  for (int l = 1; l <= L; ++l) {
    p_layers_.emplace_back(sizes_[l - 1], sizes_[l]);
    q_layers_.emplace_back(sizes_[l], sizes_[l - 1]);
  }
}

Index BihmModel::latent_bits() const {
  Index bits = 0;
  for (std::size_t i = 1; i < sizes_.size(); ++i) bits += sizes_[i];
  return bits;
}

Index BihmModel::num_parameters() const {
  Index n = prior_.dim();
  for (const auto& layer : p_layers_) n += layer.weights.size() + layer.biases.size();
  for (const auto& layer : q_layers_) n += layer.weights.size() + layer.biases.size();
  return n;
}

BeliefLayer& BihmModel::p_layer(int l) {
  if (l < 1 || l > depth()) throw ArgumentError("p_layer index out of range");
  return p_layers_[static_cast<std::size_t>(l - 1)];
}
const BeliefLayer& BihmModel::p_layer(int l) const {
  if (l < 1 || l > depth()) throw ArgumentError("p_layer index out of range");
  return p_layers_[static_cast<std::size_t>(l - 1)];
}
BeliefLayer& BihmModel::q_layer(int l) {
  if (l < 1 || l > depth()) throw ArgumentError("q_layer index out of range");
  return q_layers_[static_cast<std::size_t>(l - 1)];
}
const BeliefLayer& BihmModel::q_layer(int l) const {
  if (l < 1 || l > depth()) throw ArgumentError("q_layer index out of range");
  return q_layers_[static_cast<std::size_t>(l - 1)];
}

void BihmModel::validate() const {
  if (sizes_.size() < 2) throw ShapeError("model has no latent layers");
  require_size(prior_.biases.size(), sizes_.back(), "prior biases");
  if (p_layers_.size() + 1 != sizes_.size() || q_layers_.size() + 1 != sizes_.size()) {
    throw ShapeError("layer count does not match layer_sizes");
  }
  for (int l = 1; l <= depth(); ++l) {
    const auto& p = p_layers_[static_cast<std::size_t>(l - 1)];
    const auto& q = q_layers_[static_cast<std::size_t>(l - 1)];
    require_size(p.weights.rows(), sizes_[l - 1], "p-layer weights rows");
    require_size(p.weights.cols(), sizes_[l], "p-layer weights cols");
    require_size(p.biases.size(), sizes_[l - 1], "p-layer biases");
    require_size(q.weights.rows(), sizes_[l], "q-layer weights rows");
    require_size(q.weights.cols(), sizes_[l - 1], "q-layer weights cols");
    require_size(q.biases.size(), sizes_[l], "q-layer biases");
  }
  if (!all_finite()) throw ArgumentError("model has non-finite parameters");
}

bool BihmModel::all_finite() const {
  if (!prior_.biases.allFinite()) return false;
  for (const auto& layer : p_layers_) {
    if (!finite(layer.weights) || !layer.biases.allFinite()) return false;
  }
  for (const auto& layer : q_layers_) {
    if (!finite(layer.weights) || !layer.biases.allFinite()) return false;
  }
  return true;
}

bool BihmModel::operator==(const BihmModel& other) const {
  if (sizes_ != other.sizes_) return false;
  if (prior_.biases != other.prior_.biases) return false;
  for (std::size_t i = 0; i < p_layers_.size(); ++i) {
    if (p_layers_[i].weights != other.p_layers_[i].weights || p_layers_[i].biases != other.p_layers_[i].biases) {
      return false;
    }
    if (q_layers_[i].weights != other.q_layers_[i].weights || q_layers_[i].biases != other.q_layers_[i].biases) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

ModelGradient ModelGradient::zeros_like(const BihmModel& model) {
  ModelGradient g;
  g.d_prior = Vector::Zero(model.prior().dim());
  for (int l = 1; l <= model.depth(); ++l) {
    const auto& p = model.p_layer(l);
    const auto& q = model.q_layer(l);
    g.p_layers.push_back({Matrix::Zero(p.out_dim(), p.in_dim()), Vector::Zero(p.out_dim())});
    g.q_layers.push_back({Matrix::Zero(q.out_dim(), q.in_dim()), Vector::Zero(q.out_dim())});
  }
  return g;
}

ModelGradient& ModelGradient::operator+=(const ModelGradient& other) {
  d_prior += other.d_prior;
  for (std::size_t i = 0; i < p_layers.size(); ++i) {
    p_layers[i].d_weights += other.p_layers[i].d_weights;
    p_layers[i].d_biases += other.p_layers[i].d_biases;
    q_layers[i].d_weights += other.q_layers[i].d_weights;
    q_layers[i].d_biases += other.q_layers[i].d_biases;
  }
  return *this;
}

ModelGradient& ModelGradient::operator*=(double s) {
  d_prior *= s;
  for (std::size_t i = 0; i < p_layers.size(); ++i) {
    p_layers[i].d_weights *= s;
    p_layers[i].d_biases *= s;
    q_layers[i].d_weights *= s;
    q_layers[i].d_biases *= s;
  }
  return *this;
}

namespace {

// Appends a column-major Eigen matrix to `out` in row-major order.
void append_row_major(const Matrix& m, Vector& out, Index& pos) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out[pos++] = m(r, c);
  }
}

void append(const Vector& v, Vector& out, Index& pos) {
  out.segment(pos, v.size()) = v;
  pos += v.size();
}

void read_row_major(Matrix& m, const Vector& in, Index& pos) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = in[pos++];
  }
}

void read(Vector& v, const Vector& in, Index& pos) {
  v = in.segment(pos, v.size());
  pos += v.size();
}

Index gradient_size(const ModelGradient& g) {
  Index n = g.d_prior.size();
  for (const auto& layer : g.p_layers) n += layer.d_weights.size() + layer.d_biases.size();
  for (const auto& layer : g.q_layers) n += layer.d_weights.size() + layer.d_biases.size();
  return n;
}

}  // namespace

Vector ModelGradient::flatten() const {
  Vector out(gradient_size(*this));
  Index pos = 0;
  append(d_prior, out, pos);
  for (std::size_t i = p_layers.size(); i-- > 0;) {
    append_row_major(p_layers[i].d_weights, out, pos);
    append(p_layers[i].d_biases, out, pos);
  }
  for (const auto& layer : q_layers) {
    append_row_major(layer.d_weights, out, pos);
    append(layer.d_biases, out, pos);
  }
  return out;
}

Vector flatten_parameters(const BihmModel& model) {
  Vector out(model.num_parameters());
  Index pos = 0;
  append(model.prior().biases, out, pos);
  for (int l = model.depth(); l >= 1; --l) {
    append_row_major(model.p_layer(l).weights, out, pos);
    append(model.p_layer(l).biases, out, pos);
  }
  for (int l = 1; l <= model.depth(); ++l) {
    append_row_major(model.q_layer(l).weights, out, pos);
    append(model.q_layer(l).biases, out, pos);
  }
  return out;
}

void assign_parameters(BihmModel& model, const Vector& flat) {
  require_size(flat.size(), model.num_parameters(), "parameter vector");
  Index pos = 0;
  read(model.prior().biases, flat, pos);
  for (int l = model.depth(); l >= 1; --l) {
    read_row_major(model.p_layer(l).weights, flat, pos);
    read(model.p_layer(l).biases, flat, pos);
  }
  for (int l = 1; l <= model.depth(); ++l) {
    read_row_major(model.q_layer(l).weights, flat, pos);
    read(model.q_layer(l).biases, flat, pos);
  }
}

// ---------------------------------------------------------------------------
// Per-layer primitives

double layer_log_prob(const BeliefLayer& layer, const Vector& input, const Vector& target) {
  require_size(input.size(), layer.in_dim(), "layer input");
  require_size(target.size(), layer.out_dim(), "layer target");
  const Vector a = layer.weights * input + layer.biases;
  double total = 0.0;
  for (Index i = 0; i < a.size(); ++i) total += bernoulli_log_prob(a[i], target[i]);
  return total;
}

Vector layer_sample(const BeliefLayer& layer, const Vector& input, Rng& rng) {
  require_size(input.size(), layer.in_dim(), "layer input");
  const Vector a = layer.weights * input + layer.biases;
  Vector out(a.size());
  for (Index i = 0; i < a.size(); ++i) out[i] = rng.bernoulli(sigmoid(a[i])) ? 1.0 : 0.0;
  return out;
}

LayerGradient layer_grad(const BeliefLayer& layer, const Vector& input, const Vector& target) {
  require_size(input.size(), layer.in_dim(), "layer input");
  require_size(target.size(), layer.out_dim(), "layer target");
  const Vector a = layer.weights * input + layer.biases;
  Vector delta(a.size());
  for (Index i = 0; i < a.size(); ++i) delta[i] = target[i] - sigmoid(a[i]);
  return {delta * input.transpose(), delta};
}

double prior_log_prob(const FactorizedPrior& prior, const Vector& h) {
  require_size(h.size(), prior.dim(), "prior input");
  double total = 0.0;
  for (Index i = 0; i < h.size(); ++i) total += bernoulli_log_prob(prior.biases[i], h[i]);
  return total;
}

Vector prior_sample(const FactorizedPrior& prior, Rng& rng) {
  Vector out(prior.dim());
  for (Index i = 0; i < out.size(); ++i) out[i] = rng.bernoulli(sigmoid(prior.biases[i])) ? 1.0 : 0.0;
  return out;
}

Matrix layer_logits(const BeliefLayer& layer, const Matrix& inputs) {
  require_size(inputs.cols(), layer.in_dim(), "layer inputs");
  Matrix a = inputs * layer.weights.transpose();
  a.rowwise() += layer.biases.transpose();
  return a;
}

Vector log_prob_from_logits(const Matrix& logits, const Matrix& targets) {
  require_size(targets.rows(), logits.rows(), "target rows");
  require_size(targets.cols(), logits.cols(), "target cols");
  static const double lo = std::log(kProbEpsilon);
  static const double hi = std::log1p(-kProbEpsilon);
  const auto a = logits.array();
  // softplus(-a) = max(-a, 0) + log(1 + exp(-|a|)); log rather than log1p so
  // Eigen vectorizes it, at an absolute cost below 1e-16.
  const Eigen::ArrayXXd sp = (-a).max(0.0) + (1.0 + (-a.abs()).exp()).log();
  const Eigen::ArrayXXd log_on = (-sp).max(lo).min(hi);
  const Eigen::ArrayXXd log_off = (-sp - a).max(lo).min(hi);
  const Eigen::ArrayXXd t = targets.array();
  return (t * log_on + (1.0 - t) * log_off).rowwise().sum().matrix();
}

Matrix sample_from_logits(const Matrix& logits, Rng& rng) {
  const Eigen::ArrayXXd mu = (1.0 + (-logits.array()).exp()).inverse();
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    for (Index c = 0; c < logits.cols(); ++c) out(r, c) = rng.uniform() < mu(r, c) ? 1.0 : 0.0;
  }
  return out;
}

Vector layer_log_prob_rows(const BeliefLayer& layer, const Matrix& inputs, const Matrix& targets) {
  return log_prob_from_logits(layer_logits(layer, inputs), targets);
}

Vector prior_log_prob_rows(const FactorizedPrior& prior, const Matrix& h) {
  require_size(h.cols(), prior.dim(), "prior inputs");
  Vector lp1(prior.dim());
  Vector lp0(prior.dim());
  for (Index i = 0; i < prior.dim(); ++i) {
    lp1[i] = clamped_log_sigmoid(prior.biases[i]);
    lp0[i] = clamped_log_sigmoid(-prior.biases[i]);
  }
  return h * (lp1 - lp0) + Vector::Constant(h.rows(), lp0.sum());
}

Matrix prior_sample_rows(const FactorizedPrior& prior, Index n, Rng& rng) {
  Matrix out(n, prior.dim());
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < prior.dim(); ++c) out(r, c) = rng.bernoulli(sigmoid(prior.biases[c])) ? 1.0 : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model level

namespace {

void check_config(const BihmModel& model, const Vector& x, const LatentConfig& h) {
  require_size(x.size(), model.visible_dim(), "visible vector");
  if (static_cast<int>(h.layers.size()) != model.depth()) {
    throw ShapeError("latent config has " + std::to_string(h.layers.size()) + " layers, model has " +
                     std::to_string(model.depth()));
  }
  for (int l = 1; l <= model.depth(); ++l) {
    require_size(h.layers[static_cast<std::size_t>(l - 1)].size(), model.layer_sizes()[static_cast<std::size_t>(l)],
                 "latent layer");
  }
}

void check_batch(const BihmModel& model, const Matrix& x, const LatentBatch& h) {
  require_size(x.cols(), model.visible_dim(), "visible rows");
  if (static_cast<int>(h.layers.size()) != model.depth()) throw ShapeError("latent batch depth mismatch");
  for (int l = 1; l <= model.depth(); ++l) {
    const auto& m = h.layers[static_cast<std::size_t>(l - 1)];
    require_size(m.rows(), x.rows(), "latent batch rows");
    require_size(m.cols(), model.layer_sizes()[static_cast<std::size_t>(l)], "latent batch cols");
  }
}

// h_l with h_0 = x.
const Vector& level(const Vector& x, const LatentConfig& h, int l) {
  return l == 0 ? x : h.layers[static_cast<std::size_t>(l - 1)];
}
const Matrix& level(const Matrix& x, const LatentBatch& h, int l) {
  return l == 0 ? x : h.layers[static_cast<std::size_t>(l - 1)];
}

}  // namespace

double log_joint_p(const BihmModel& model, const Vector& x, const LatentConfig& h) {
  check_config(model, x, h);
  const int L = model.depth();
  double total = prior_log_prob(model.prior(), h.layers.back());
  for (int l = L; l >= 1; --l) total += layer_log_prob(model.p_layer(l), level(x, h, l), level(x, h, l - 1));
  return total;
}

double log_q_given_x(const BihmModel& model, const Vector& x, const LatentConfig& h) {
  check_config(model, x, h);
  double total = 0.0;
  for (int l = 1; l <= model.depth(); ++l) total += layer_log_prob(model.q_layer(l), level(x, h, l - 1), level(x, h, l));
  return total;
}

LatentConfig sample_q(const BihmModel& model, const Vector& x, Rng& rng) {
  require_size(x.size(), model.visible_dim(), "visible vector");
  LatentConfig h;
  const Vector* below = &x;
  for (int l = 1; l <= model.depth(); ++l) {
    h.layers.push_back(layer_sample(model.q_layer(l), *below, rng));
    below = &h.layers.back();
  }
  return h;
}

JointSample sample_p(const BihmModel& model, Rng& rng) {
  const int L = model.depth();
  JointSample s;
  s.h.layers.resize(static_cast<std::size_t>(L));
  s.h.layers.back() = prior_sample(model.prior(), rng);
  for (int l = L; l >= 2; --l) {
    s.h.layers[static_cast<std::size_t>(l - 2)] = layer_sample(model.p_layer(l), s.h.layers[static_cast<std::size_t>(l - 1)], rng);
  }
  s.x = layer_sample(model.p_layer(1), s.h.layers.front(), rng);
  return s;
}

Vector log_joint_p_rows(const BihmModel& model, const Matrix& x, const LatentBatch& h) {
  check_batch(model, x, h);
  Vector total = prior_log_prob_rows(model.prior(), h.layers.back());
  for (int l = model.depth(); l >= 1; --l) {
    total += layer_log_prob_rows(model.p_layer(l), level(x, h, l), level(x, h, l - 1));
  }
  return total;
}

Vector log_q_rows(const BihmModel& model, const Matrix& x, const LatentBatch& h) {
  check_batch(model, x, h);
  Vector total = Vector::Zero(x.rows());
  for (int l = 1; l <= model.depth(); ++l) {
    total += layer_log_prob_rows(model.q_layer(l), level(x, h, l - 1), level(x, h, l));
  }
  return total;
}

LatentBatch sample_q_rows(const BihmModel& model, const Matrix& x, Rng& rng) {
  require_size(x.cols(), model.visible_dim(), "visible rows");
  LatentBatch h;
  for (int l = 1; l <= model.depth(); ++l) {
    const Matrix& below = l == 1 ? x : h.layers.back();
    Matrix next = sample_from_logits(layer_logits(model.q_layer(l), below), rng);
    h.layers.push_back(std::move(next));
  }
  return h;
}

JointBatch sample_p_rows(const BihmModel& model, Index n, Rng& rng) {
  const int L = model.depth();
  JointBatch s;
  s.h.layers.resize(static_cast<std::size_t>(L));
  s.h.layers.back() = prior_sample_rows(model.prior(), n, rng);
  for (int l = L; l >= 2; --l) {
    s.h.layers[static_cast<std::size_t>(l - 2)] =
        sample_from_logits(layer_logits(model.p_layer(l), s.h.layers[static_cast<std::size_t>(l - 1)]), rng);
  }
  s.x = sample_from_logits(layer_logits(model.p_layer(1), s.h.layers.front()), rng);
  return s;
}

ScoredSamples draw_from_q_and_score(const BihmModel& model, const Matrix& x, Rng& rng) {
  require_size(x.cols(), model.visible_dim(), "visible rows");
  const int L = model.depth();
  ScoredSamples out;
  out.log_q = Vector::Zero(x.rows());
  for (int l = 1; l <= L; ++l) {
    const Matrix& below = l == 1 ? x : out.latents.layers.back();
    Matrix logits = layer_logits(model.q_layer(l), below);
    Matrix sample = sample_from_logits(logits, rng);
    out.log_q += log_prob_from_logits(logits, sample);
    out.q_logits.push_back(std::move(logits));
    out.latents.layers.push_back(std::move(sample));
  }
  out.log_p = prior_log_prob_rows(model.prior(), out.latents.layers.back());
  out.p_logits.resize(static_cast<std::size_t>(L));
  for (int l = L; l >= 1; --l) {
    const Matrix& target = level(x, out.latents, l - 1);
    Matrix logits = layer_logits(model.p_layer(l), level(x, out.latents, l));
    out.log_p += log_prob_from_logits(logits, target);
    out.p_logits[static_cast<std::size_t>(l - 1)] = std::move(logits);
  }
  return out;
}

}  // namespace bihm
