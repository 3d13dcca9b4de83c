#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bihm/errors.hpp"
#include "bihm/estimators.hpp"
#include "bihm/oracle.hpp"
#include "bihm/training.hpp"
#include "random_model.hpp"

namespace bihm {
namespace {

using testing::random_bits;
using testing::random_model;

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

TEST(InitModel, BiasesAreMinusOne) {
  const BihmModel m = init_model({4, 3, 2}, 7);
  EXPECT_TRUE((m.prior().biases.array() == -1.0).all());
  for (int l = 1; l <= 2; ++l) {
    EXPECT_TRUE((m.p_layer(l).biases.array() == -1.0).all());
    EXPECT_TRUE((m.q_layer(l).biases.array() == -1.0).all());
  }
}

TEST(InitModel, Deterministic) {
  EXPECT_TRUE(init_model({10, 6, 3}, 42) == init_model({10, 6, 3}, 42));
  EXPECT_FALSE(init_model({10, 6, 3}, 42) == init_model({10, 6, 3}, 43));
}

TEST(InitModel, GlorotBound) {
  const BihmModel m = init_model({300, 200}, 1);
  const double bound = std::sqrt(6.0 / 500.0);
  EXPECT_NEAR(bound, 0.1095, 1e-4);
  for (const Matrix* w : {&m.p_layer(1).weights, &m.q_layer(1).weights}) {
    EXPECT_LE(w->maxCoeff(), bound);
    EXPECT_GE(w->minCoeff(), -bound);
    // the draws fill the range rather than collapsing near zero
    EXPECT_GT(w->maxCoeff(), 0.95 * bound);
    EXPECT_LT(w->minCoeff(), -0.95 * bound);
  }
}

TEST(InitModel, RejectsBadSizes) { EXPECT_THROW(init_model({3, 0}, 1), ArgumentError); }

TEST(MinibatchGradient, ZeroModelSingleSampleByHand) {
  const BihmModel m({1, 1});
  Matrix x(1, 1);
  x(0, 0) = 1.0;
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelGradient g = minibatch_gradient(m, x, 1, rng);
    // h ~ q is the only sample; every sigmoid is 1/2.
    const double h_minus_half = g.q_layers[0].d_biases[0];
    EXPECT_TRUE(h_minus_half == 0.5 || h_minus_half == -0.5);
    EXPECT_NEAR(g.d_prior[0], h_minus_half, 1e-12);
    EXPECT_NEAR(g.p_layers[0].d_biases[0], 0.5, 1e-12);
    EXPECT_NEAR(g.p_layers[0].d_weights(0, 0), 0.5 * (h_minus_half + 0.5), 1e-12);
    EXPECT_NEAR(g.q_layers[0].d_weights(0, 0), h_minus_half, 1e-12);
  }
}

TEST(MinibatchGradient, SingleSampleIsUnweighted) {
  Rng rng(4);
  const BihmModel m = random_model({4, 3, 2}, rng);
  const Vector x = random_bits(4, rng);
  Rng a(77);
  Rng b(77);
  const ModelGradient g = minibatch_gradient(m, x.transpose(), 1, a);
  const LatentConfig h = sample_q(m, x, b);
  const LayerGradient p1 = layer_grad(m.p_layer(1), h.layers[0], x);
  const LayerGradient q2 = layer_grad(m.q_layer(2), h.layers[0], h.layers[1]);
  EXPECT_NEAR((g.p_layers[0].d_weights - p1.d_weights).norm(), 0.0, 1e-12);
  EXPECT_NEAR((g.q_layers[1].d_biases - q2.d_biases).norm(), 0.0, 1e-12);
}

TEST(MinibatchGradient, LayersComputedInIsolationMatchBatchedPath) {
  Rng rng(5);
  const BihmModel m = random_model({5, 4, 3}, rng);
  const Vector x = random_bits(5, rng);
  const std::size_t k = 16;
  Rng a(123);
  Rng b(123);
  const ModelGradient g = minibatch_gradient(m, x.transpose(), k, a);
  const WeightedSampleSet set = draw_weighted_samples(m, x, k, b);

  ModelGradient expected = ModelGradient::zeros_like(m);
  for (Index s = 0; s < set.size(); ++s) {
    const double w = std::exp(set.log_w_normalized[s]);
    const LatentConfig h = set.samples.row(s);
    auto level = [&](int l) -> const Vector& { return l == 0 ? x : h.layers[static_cast<std::size_t>(l - 1)]; };
    Vector mu(3);
    for (Index i = 0; i < 3; ++i) mu[i] = 1.0 / (1.0 + std::exp(-m.prior().biases[i]));
    expected.d_prior += w * (h.layers[1] - mu);
    for (int l = 1; l <= 2; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      const LayerGradient gp = layer_grad(m.p_layer(l), level(l), level(l - 1));
      const LayerGradient gq = layer_grad(m.q_layer(l), level(l - 1), level(l));
      expected.p_layers[i].d_weights += w * gp.d_weights;
      expected.p_layers[i].d_biases += w * gp.d_biases;
      expected.q_layers[i].d_weights += w * gq.d_weights;
      expected.q_layers[i].d_biases += w * gq.d_biases;
    }
  }
  EXPECT_NEAR((g.flatten() - expected.flatten()).lpNorm<Eigen::Infinity>(), 0.0, 1e-12);
}

TEST(MinibatchGradient, AveragesOverTheBatch) {
  Rng rng(6);
  const BihmModel m = random_model({3, 2}, rng);
  Matrix batch(2, 3);
  batch.row(0) << 1, 0, 1;
  batch.row(1) << 0, 0, 1;
  // K = 1 draws one row of samples per datapoint in order, so two single-row
  // calls on a copied stream reproduce the batch.
  Rng a(9);
  const ModelGradient both = minibatch_gradient(m, batch, 1, a);
  Rng b(9);
  const ScoredSamples s = draw_from_q_and_score(m, batch, b);
  Vector d_prior = Vector::Zero(2);
  for (Index r = 0; r < 2; ++r) {
    for (Index i = 0; i < 2; ++i) {
      d_prior[i] += 0.5 * (s.latents.layers[0](r, i) - 1.0 / (1.0 + std::exp(-m.prior().biases[i])));
    }
  }
  EXPECT_NEAR((both.d_prior - d_prior).norm(), 0.0, 1e-12);
}

TEST(MinibatchGradient, ApproachesExactGradient) {
  Rng rng(7);
  const BihmModel m = random_model({4, 3, 2}, rng);
  const Vector x = random_bits(4, rng);
  const Vector exact = exact_grad_log_ptilde(m, x).flatten();
  const Vector est = minibatch_gradient(m, x.transpose(), 100000, rng).flatten();
  EXPECT_GE(cosine(exact, est), 0.99);
  EXPECT_LE((exact - est).norm() / exact.norm(), 0.05);
}

TEST(MinibatchGradient, Errors) {
  const BihmModel m({3, 2});
  Rng rng(1);
  EXPECT_THROW(minibatch_gradient(m, Matrix::Zero(0, 3), 1, rng), ArgumentError);
  EXPECT_THROW(minibatch_gradient(m, Matrix::Zero(2, 3), 0, rng), ArgumentError);
  EXPECT_THROW(minibatch_gradient(m, Matrix::Zero(2, 4), 1, rng), ShapeError);
}

TEST(AdamUpdate, FirstStepIsLearningRateTimesSign) {
  Rng rng(8);
  BihmModel m = random_model({4, 3}, rng);
  const BihmModel before = m;
  ModelGradient g = ModelGradient::zeros_like(m);
  Vector flat_g(m.num_parameters());
  for (Index i = 0; i < flat_g.size(); ++i) flat_g[i] = rng.uniform() - 0.5;
  // route the random values through a model so the layout matches
  BihmModel carrier({4, 3});
  assign_parameters(carrier, flat_g);
  g.d_prior = carrier.prior().biases;
  g.p_layers[0] = {carrier.p_layer(1).weights, carrier.p_layer(1).biases};
  g.q_layers[0] = {carrier.q_layer(1).weights, carrier.q_layer(1).biases};

  TrainConfig cfg;
  cfg.l1_lambda = 0.0;
  cfg.learning_rate = 1e-3;
  AdamState state = AdamState::zeros_like(m);
  adam_update(m, state, g, cfg);
  EXPECT_EQ(state.step_count, 1u);
  const Vector delta = flatten_parameters(m) - flatten_parameters(before);
  const Vector gf = g.flatten();
  for (Index i = 0; i < delta.size(); ++i) {
    const double sign = gf[i] > 0 ? 1.0 : -1.0;
    EXPECT_NEAR(delta[i], 1e-3 * sign, 1e-3 * 1e-8 / std::abs(gf[i]) + 1e-15);
  }
  EXPECT_TRUE((state.second_moment.flatten().array() >= 0.0).all());
}

TEST(AdamUpdate, ZeroGradientOnlyShrinksWeights) {
  Rng rng(9);
  BihmModel m = random_model({4, 3, 2}, rng);
  const BihmModel before = m;
  TrainConfig cfg;
  cfg.l1_lambda = 1e-3;
  cfg.learning_rate = 0.01;
  AdamState state = AdamState::zeros_like(m);
  adam_update(m, state, ModelGradient::zeros_like(m), cfg);
  EXPECT_TRUE(m.prior().biases == before.prior().biases);
  for (int l = 1; l <= 2; ++l) {
    EXPECT_TRUE(m.p_layer(l).biases == before.p_layer(l).biases);
    EXPECT_TRUE(m.q_layer(l).biases == before.q_layer(l).biases);
    const Matrix expected_p =
        before.p_layer(l).weights.array() - 0.01 * 1e-3 * before.p_layer(l).weights.array().sign();
    EXPECT_NEAR((m.p_layer(l).weights - expected_p).norm(), 0.0, 1e-15);
    const Matrix expected_q =
        before.q_layer(l).weights.array() - 0.01 * 1e-3 * before.q_layer(l).weights.array().sign();
    EXPECT_NEAR((m.q_layer(l).weights - expected_q).norm(), 0.0, 1e-15);
  }
}

TEST(AdamUpdate, Deterministic) {
  Rng data_rng(1);
  const Matrix data = testing::bars_dataset(50, data_rng);
  auto run = [&]() {
    BihmModel m = init_model({16, 6, 3}, 2);
    AdamState state = AdamState::zeros_like(m);
    TrainConfig cfg;
    Rng rng(5);
    for (int step = 0; step < 20; ++step) adam_update(m, state, minibatch_gradient(m, data, 5, rng), cfg);
    return m;
  };
  EXPECT_TRUE(run() == run());
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k_train = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.adam_beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.l1_lambda = -1.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Train, ZeroRateLeavesModelAndMetricsUnchanged) {
  Rng rng(10);
  const Matrix data = testing::bars_dataset(60, rng);
  const Matrix valid = testing::bars_dataset(20, rng);
  const BihmModel m0 = init_model({16, 5, 3}, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.l1_lambda = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 25;
  const TrainResult r = train(m0, data, valid, cfg);
  EXPECT_TRUE(r.model == m0);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.history[2].updates, 9u);
  for (const EpochMetrics& e : r.history) {
    EXPECT_EQ(e.train_log_ptilde, r.history[0].train_log_ptilde);
    EXPECT_EQ(*e.valid_log_ptilde, *r.history[0].valid_log_ptilde);
  }
}

TEST(Train, DivergenceIsReported) {
  Rng rng(11);
  const Matrix data = testing::bars_dataset(20, rng);
  TrainConfig cfg;
  cfg.learning_rate = std::numeric_limits<double>::infinity();
  cfg.epochs = 1;
  EXPECT_THROW(train(init_model({16, 4}, 1), data, Matrix(), cfg), TrainingDivergedError);
}

TEST(Train, RejectsMismatchedData) {
  TrainConfig cfg;
  EXPECT_THROW(train(init_model({16, 4}, 1), Matrix::Zero(5, 15), Matrix(), cfg), ShapeError);
}

TEST(Train, Reproducible) {
  Rng rng(12);
  const Matrix data = testing::bars_dataset(100, rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 20;
  cfg.seed = 99;
  cfg.z_every = 1;
  cfg.z_k_outer = 500;
  const TrainResult a = train(init_model({16, 6, 3}, 1), data, data.topRows(20), cfg);
  const TrainResult b = train(init_model({16, 6, 3}, 1), data, data.topRows(20), cfg);
  EXPECT_TRUE(a.model == b.model);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_log_ptilde, b.history[i].train_log_ptilde);
    EXPECT_EQ(*a.history[i].two_log_z, *b.history[i].two_log_z);
  }
}

TEST(Train, FinetunePhaseAddsEpochs) {
  Rng rng(13);
  const Matrix data = testing::bars_dataset(40, rng);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.finetune_epochs = 2;
  cfg.finetune_k = 20;
  cfg.batch_size = 20;
  std::vector<std::size_t> seen;
  const TrainResult r =
      train(init_model({16, 4}, 1), data, Matrix(), cfg, [&](const EpochMetrics& e, const BihmModel&) {
        seen.push_back(e.epoch);
      });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(r.history.back().updates, 8u);
  EXPECT_FALSE(r.history.back().valid_log_ptilde.has_value());
}

class ToyTraining : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(2024);
    train_data_ = new Matrix(testing::bars_dataset(500, rng));
    valid_data_ = new Matrix(testing::bars_dataset(100, rng));
    TrainConfig cfg;
    cfg.k_train = 10;
    cfg.epochs = 200;
    cfg.batch_size = 100;
    cfg.learning_rate = 1e-2;
    cfg.seed = 5;
    result_ = new TrainResult(train(init_model({16, 8, 4}, 5), *train_data_, *valid_data_, cfg));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete train_data_;
    delete valid_data_;
  }
  static Matrix* train_data_;
  static Matrix* valid_data_;
  static TrainResult* result_;
};

Matrix* ToyTraining::train_data_ = nullptr;
Matrix* ToyTraining::valid_data_ = nullptr;
TrainResult* ToyTraining::result_ = nullptr;

TEST_F(ToyTraining, ValidationImprovesByFiveNats) {
  const auto& h = result_->history;
  ASSERT_EQ(h.size(), 200u);
  EXPECT_GE(*h.back().valid_log_ptilde - *h.front().valid_log_ptilde, 5.0);
}

TEST_F(ToyTraining, EstimatesGrowWithK) {
  Rng rng(6);
  const Vector x = valid_data_->row(0).transpose();
  double small = 0.0;
  double large = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    small += est_log_ptilde(result_->model, x, 10, rng).value;
    large += est_log_ptilde(result_->model, x, 1000, rng).value;
  }
  EXPECT_LE(small / 100.0, large / 100.0);
}

}  // namespace
}  // namespace bihm
