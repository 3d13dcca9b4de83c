#include "bihm/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "bihm/errors.hpp"
#include "bihm/estimators.hpp"
#include "bihm/math.hpp"

namespace bihm {
namespace {

void glorot_fill(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
  }
}

Matrix sigmoid_of(const Matrix& logits) { return (1.0 + (-logits.array()).exp()).inverse().matrix(); }

template <class Param, class Grad>
void adam_step(Param& param, const Grad& grad, Grad& m, Grad& v, double lr, double l1, const TrainConfig& cfg,
               double bias1, double bias2) {
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
  v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  param.array() += lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.adam_eps);
  if (l1 > 0.0) param.array() -= lr * l1 * param.array().sign();
}

}  // namespace

void TrainConfig::validate() const {
  if (k_train < 1) throw ArgumentError("k_train must be >= 1");
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning_rate must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(l1_lambda >= 0.0)) throw ArgumentError("l1_lambda must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ArgumentError("adam_eps must be > 0");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (finetune_epochs > 0 && finetune_k < 1) throw ArgumentError("finetune_k must be >= 1");
}

AdamState AdamState::zeros_like(const BihmModel& model) {
  return {ModelGradient::zeros_like(model), ModelGradient::zeros_like(model), 0};
}

BihmModel init_model(const std::vector<Index>& layer_sizes, std::uint64_t seed) {
  BihmModel model(layer_sizes);
  Rng rng(seed);
  const int L = model.depth();
  model.prior().biases.setConstant(-1.0);
  for (int l = L; l >= 1; --l) {
    glorot_fill(model.p_layer(l).weights, rng);
    model.p_layer(l).biases.setConstant(-1.0);
  }
  for (int l = 1; l <= L; ++l) {
    glorot_fill(model.q_layer(l).weights, rng);
    model.q_layer(l).biases.setConstant(-1.0);
  }
  return model;
}

ModelGradient minibatch_gradient(const BihmModel& model, const Matrix& batch, std::size_t k, Rng& rng) {
  if (k < 1) throw ArgumentError("minibatch_gradient: K must be >= 1");
  if (batch.rows() == 0) throw ArgumentError("minibatch_gradient: empty batch");
  if (batch.cols() != model.visible_dim()) throw ShapeError("minibatch_gradient: visible size mismatch");
  const Index b = batch.rows();
  const auto kk = static_cast<Index>(k);
  const int L = model.depth();

  // Row i * K + j carries sample j of datapoint i.
  const Matrix xs = batch.replicate(1, kk).reshaped<Eigen::RowMajor>(b * kk, batch.cols());
  const ScoredSamples s = draw_from_q_and_score(model, xs, rng);

  // Self-normalized weights per datapoint, divided by the batch size.
  Vector w(b * kk);
  for (Index i = 0; i < b; ++i) {
    const Vector lw = 0.5 * (s.log_p.segment(i * kk, kk) - s.log_q.segment(i * kk, kk));
    const double norm = log_sum_exp({lw.data(), static_cast<std::size_t>(kk)});
    w.segment(i * kk, kk) = (lw.array() - norm).exp() / static_cast<double>(b);
  }

  ModelGradient g = ModelGradient::zeros_like(model);
  const Matrix& top = s.latents.layers.back();
  Vector mu_prior(model.prior().dim());
  for (Index i = 0; i < mu_prior.size(); ++i) mu_prior[i] = sigmoid(model.prior().biases[i]);
  g.d_prior = top.transpose() * w - mu_prior * w.sum();

  auto level = [&](int l) -> const Matrix& { return l == 0 ? xs : s.latents.layers[static_cast<std::size_t>(l - 1)]; };
  for (int l = 1; l <= L; ++l) {
    const auto idx = static_cast<std::size_t>(l - 1);
    Matrix delta_p = (level(l - 1) - sigmoid_of(s.p_logits[idx])).array().colwise() * w.array();
    g.p_layers[idx].d_weights = delta_p.transpose() * level(l);
    g.p_layers[idx].d_biases = delta_p.colwise().sum().transpose();

    Matrix delta_q = (level(l) - sigmoid_of(s.q_logits[idx])).array().colwise() * w.array();
    g.q_layers[idx].d_weights = delta_q.transpose() * level(l - 1);
    g.q_layers[idx].d_biases = delta_q.colwise().sum().transpose();
  }
  return g;
}

void adam_update(BihmModel& model, AdamState& state, const ModelGradient& gradient, const TrainConfig& config) {
  adam_update(model, state, gradient, config, config.learning_rate);
}

void adam_update(BihmModel& model, AdamState& state, const ModelGradient& gradient, const TrainConfig& config,
                 double learning_rate) {
  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bias2 = 1.0 - std::pow(config.adam_beta2, t);
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  const double lam = config.l1_lambda;

  adam_step(model.prior().biases, gradient.d_prior, m.d_prior, v.d_prior, learning_rate, 0.0, config, bias1, bias2);
  for (int l = 1; l <= model.depth(); ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    adam_step(model.p_layer(l).weights, gradient.p_layers[i].d_weights, m.p_layers[i].d_weights,
              v.p_layers[i].d_weights, learning_rate, lam, config, bias1, bias2);
    adam_step(model.p_layer(l).biases, gradient.p_layers[i].d_biases, m.p_layers[i].d_biases,
              v.p_layers[i].d_biases, learning_rate, 0.0, config, bias1, bias2);
    adam_step(model.q_layer(l).weights, gradient.q_layers[i].d_weights, m.q_layers[i].d_weights,
              v.q_layers[i].d_weights, learning_rate, lam, config, bias1, bias2);
    adam_step(model.q_layer(l).biases, gradient.q_layers[i].d_biases, m.q_layers[i].d_biases,
              v.q_layers[i].d_biases, learning_rate, 0.0, config, bias1, bias2);
  }
}

TrainResult train(BihmModel model, const Matrix& data, const Matrix& valid, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  if (data.rows() == 0) throw ArgumentError("train: empty dataset");
  if (data.cols() != model.visible_dim()) throw ShapeError("train: dataset width does not match the model");
  if (valid.rows() > 0 && valid.cols() != model.visible_dim()) {
    throw ShapeError("train: validation width does not match the model");
  }

  Rng rng(config.seed);
  // Every epoch evaluates with the same random numbers, so metric changes
  // between epochs come from the parameters alone.
  const Rng metrics_stream = rng.split();
  AdamState adam = AdamState::zeros_like(model);
  TrainResult result;

  const Index n = data.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  const Index metric_rows =
      config.train_metric_rows == 0 ? n : std::min<Index>(n, static_cast<Index>(config.train_metric_rows));
  const Matrix train_subset = data.topRows(metric_rows);

  struct Phase {
    std::size_t epochs;
    std::size_t k;
    double lr;
  };
  const Phase phases[] = {{config.epochs, config.k_train, config.learning_rate},
                          {config.finetune_epochs, config.finetune_k, config.finetune_learning_rate}};

  std::size_t epoch = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const Phase& phase : phases) {
    for (std::size_t e = 0; e < phase.epochs; ++e) {
      ++epoch;
      for (Index i = n - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
      }
      const auto bs = static_cast<Index>(config.batch_size);
      for (Index first = 0; first < n; first += bs) {
        const Index rows = std::min(bs, n - first);
        Matrix batch(rows, data.cols());
        for (Index r = 0; r < rows; ++r) batch.row(r) = data.row(order[static_cast<std::size_t>(first + r)]);
        const ModelGradient g = minibatch_gradient(model, batch, phase.k, rng);
        adam_update(model, adam, g, config, phase.lr);
        if (!model.all_finite()) {
          throw TrainingDivergedError("non-finite parameters after update " + std::to_string(adam.step_count) +
                                      " (epoch " + std::to_string(epoch) + ")");
        }
      }

      Rng metrics_rng = metrics_stream;
      EpochMetrics m;
      m.epoch = epoch;
      m.updates = adam.step_count;
      const std::size_t eval_k = config.eval_k == 0 ? phase.k : config.eval_k;
      const DatasetEvaluation train_eval = evaluate_dataset(model, train_subset, eval_k, metrics_rng);
      m.train_log_ptilde = train_eval.mean_log_ptilde.value;
      m.ess_percent = train_eval.mean_ess_percent;
      if (valid.rows() > 0) {
        const DatasetEvaluation valid_eval = evaluate_dataset(model, valid, eval_k, metrics_rng);
        m.valid_log_ptilde = valid_eval.mean_log_ptilde.value;
        m.ess_percent = valid_eval.mean_ess_percent;
      }
      if (config.z_every > 0 && epoch % config.z_every == 0) {
        m.two_log_z = est_log_z2(model, {config.z_k_outer, 1}, metrics_rng).value;
      }
      m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.history.push_back(m);
      if (on_epoch) on_epoch(m, model);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace bihm
