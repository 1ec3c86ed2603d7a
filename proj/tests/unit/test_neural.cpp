#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/neural.hpp"
#include "oracles.hpp"

using namespace deeppharm;

namespace {

Batch random_batch(std::mt19937_64& rng, Eigen::Index n, Eigen::Index in, Eigen::Index out,
                   bool binary, double keep = 0.7) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch b;
  b.inputs = Matrix::NullaryExpr(n, in, [&] { return 2.0 * u(rng) - 1.0; });
  b.targets = Matrix::NullaryExpr(n, out, [&] { return binary ? (u(rng) < 0.3 ? 1.0 : 0.0) : u(rng); });
  b.mask = Matrix::NullaryExpr(n, out, [&] { return u(rng) < keep ? 1.0 : 0.0; });
  return b;
}

double max_rel_error(NetworkModel model, const Batch& b, const LossSpec& loss) {
  const Gradients g = backward(model, b, loss);
  const double h = 1e-5;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = objective(model, b, loss);
    param = keep - h;
    const double down = objective(model, b, loss);
    param = keep;
    const double numeric = (up - down) / (2 * h);
    const double diff = std::abs(analytic - numeric);
    if (diff <= 1e-9) return;
    worst = std::max(worst, diff / std::max(std::abs(analytic), std::abs(numeric)));
  };
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < model.weights[l].size(); ++i) check(model.weights[l].data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) check(model.biases[l].data()[i], g.biases[l].data()[i]);
  }
  return worst;
}

}  // namespace

TEST(Network, InitIsDeterministicAndGlorotBounded) {
  const LayerSpec spec = LayerSpec::dense({20, 8, 3});
  const NetworkModel a = init_network(spec, 5), b = init_network(spec, 5), c = init_network(spec, 6);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(a.weights[l], b.weights[l]);
    EXPECT_TRUE(a.biases[l].isZero());
    const double limit = std::sqrt(6.0 / static_cast<double>(spec.sizes[l] + spec.sizes[l + 1]));
    EXPECT_LE(a.weights[l].cwiseAbs().maxCoeff(), limit);
  }
  EXPECT_NE(a.weights[0], c.weights[0]);
  EXPECT_EQ(a.adam.step, 0u);
  EXPECT_EQ(a.spec.activations.back(), Activation::kSigmoid);
  EXPECT_EQ(a.spec.activations.front(), Activation::kTanh);
}

TEST(Network, PretrainingShape) {
  std::vector<std::size_t> sizes{1024};
  for (auto w : feature_stack()) sizes.push_back(w);
  sizes.push_back(1000);
  sizes.push_back(157);
  const NetworkModel m = init_network(LayerSpec::dense(sizes), 1);
  // Ten feature layers and one task layer are the eleven hidden dense
  // layers; the sigmoid output layer adds the twelfth weight matrix.
  EXPECT_EQ(feature_stack().size(), 10u);
  EXPECT_EQ(feature_stack().front(), 1000u);
  EXPECT_EQ(feature_stack().back(), 100u);
  EXPECT_EQ(m.layer_count(), 12u);
  EXPECT_EQ(m.weights[10].rows(), 1000);
  EXPECT_EQ(m.weights[11].rows(), 157);
}

TEST(Network, BadSpecs) {
  for (const auto& sizes : std::vector<std::vector<std::size_t>>{{4}, {4, 0, 2}, {}}) {
    try {
      init_network(LayerSpec::dense(sizes), 0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadSpec);
    }
  }
}

TEST(Network, ForwardExamples) {
  NetworkModel m = init_network(LayerSpec::dense({5, 4, 3}), 1);
  for (auto& w : m.weights) w.setZero();
  const Matrix out = forward(m, Matrix::Random(7, 5));
  EXPECT_TRUE((out.array() == 0.5).all());

  NetworkModel tiny = init_network(LayerSpec::dense({1, 1, 1}), 0);
  tiny.weights[0](0, 0) = 1.0;
  tiny.weights[1](0, 0) = 1.0;
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const Matrix y = forward(tiny, x);
  EXPECT_EQ(y(0, 0), 0.5);
  EXPECT_NEAR(y(1, 0), 1.0 / (1.0 + std::exp(-std::tanh(1.0))), 1e-15);

  std::mt19937_64 rng(8);
  const NetworkModel r = init_network(LayerSpec::dense({6, 5, 4}), 3);
  const Matrix p = forward(r, Matrix::Random(200, 6) * 3.0);
  EXPECT_GT(p.minCoeff(), 0.0);
  EXPECT_LT(p.maxCoeff(), 1.0);
  try {
    forward(r, Matrix::Zero(2, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Loss, MultitaskExamples) {
  const double d = std::sqrt(0.02);  // (d^2)/2 = 0.01
  Matrix pred = Matrix::Constant(3, 4, 0.5);
  Matrix label = Matrix::Constant(3, 4, 0.5 + d);
  Matrix mask = Matrix::Ones(3, 4);
  const std::vector<double> w{3, 1, 9, 1};
  EXPECT_NEAR(multitask_cost(pred, label, mask, w), 0.14, 1e-15);
  mask.setZero();
  EXPECT_EQ(multitask_cost(pred, label, mask, w), 0.0);
  mask.col(0).setOnes();
  EXPECT_NEAR(multitask_cost(pred, label, mask, w), 0.03, 1e-15);
}

TEST(Loss, WeightedBinaryExamples) {
  const std::vector<double> p1{0.5}, l1{1.0}, p0{0.0}, l0{0.0}, pbad{1.0};
  EXPECT_DOUBLE_EQ(weighted_binary_cost(p1, l1, 100, 1), 12.5);
  EXPECT_DOUBLE_EQ(weighted_binary_cost(p0, l0, 100, 1), 0.0);
  EXPECT_DOUBLE_EQ(weighted_binary_cost(pbad, l0, 100, 1), 0.5);
  const std::vector<double> half{0.5};
  try {
    weighted_binary_cost(p1, half);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonBinaryLabel);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    AdamConfig adam;
    adam.lambda = 0.01;
    const NetworkModel m = init_network(LayerSpec::dense({6, 4, 4}), rng(), adam);
    const Batch mt = random_batch(rng, 9, 6, 4, false);
    EXPECT_LE(max_rel_error(m, mt, MultitaskLoss{}), 1e-6);
    const Batch bin = random_batch(rng, 9, 6, 4, true);
    EXPECT_LE(max_rel_error(m, bin, WeightedBinaryLoss{}), 1e-6);
  }
}

TEST(Gradient, FullyMaskedBatchWithoutL2IsZero) {
  std::mt19937_64 rng(1);
  AdamConfig adam;
  adam.lambda = 0.0;
  const NetworkModel m = init_network(LayerSpec::dense({5, 4, 3}), 2, adam);
  Batch b = random_batch(rng, 6, 5, 3, false);
  b.mask.setZero();
  const Gradients g = backward(m, b, MultitaskLoss{{1, 1, 1}});
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    EXPECT_TRUE(g.weights[l].isZero());
    EXPECT_TRUE(g.biases[l].isZero());
  }
}

TEST(Gradient, DuplicatedBatchGivesTheSameGradient) {
  std::mt19937_64 rng(3);
  const NetworkModel m = init_network(LayerSpec::dense({5, 4, 4}), 2);
  const Batch b = random_batch(rng, 6, 5, 4, false, 1.0);
  Batch twice;
  twice.inputs.resize(12, 5);
  twice.inputs << b.inputs, b.inputs;
  twice.targets.resize(12, 4);
  twice.targets << b.targets, b.targets;
  twice.mask.resize(12, 4);
  twice.mask << b.mask, b.mask;
  const Gradients g1 = backward(m, b, MultitaskLoss{}), g2 = backward(m, twice, MultitaskLoss{});
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    EXPECT_LE((g1.weights[l] - g2.weights[l]).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((g1.biases[l] - g2.biases[l]).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Gradient, MaskedTargetsHaveNoInfluence) {
  std::mt19937_64 rng(4);
  const NetworkModel m = init_network(LayerSpec::dense({5, 4, 4}), 2);
  Batch b = random_batch(rng, 8, 5, 4, false, 0.5);
  const Gradients before = backward(m, b, MultitaskLoss{});
  const double loss_before = objective(m, b, MultitaskLoss{});
  for (Eigen::Index i = 0; i < b.targets.size(); ++i) {
    if (b.mask.data()[i] == 0.0) b.targets.data()[i] += 0.37;
  }
  const Gradients after = backward(m, b, MultitaskLoss{});
  EXPECT_EQ(objective(m, b, MultitaskLoss{}), loss_before);
  for (std::size_t l = 0; l < m.layer_count(); ++l) EXPECT_EQ(before.weights[l], after.weights[l]);
}

TEST(Gradient, ScalingTaskWeightsScalesCostAndGradient) {
  std::mt19937_64 rng(6);
  AdamConfig adam;
  adam.lambda = 0.0;
  const NetworkModel m = init_network(LayerSpec::dense({5, 4, 4}), 2, adam);
  const Batch b = random_batch(rng, 8, 5, 4, false);
  const MultitaskLoss base{{3, 1, 9, 1}}, scaled{{6, 2, 18, 2}};
  EXPECT_NEAR(objective(m, b, scaled), 2.0 * objective(m, b, base), 1e-14);
  const Gradients g1 = backward(m, b, base), g2 = backward(m, b, scaled);
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    EXPECT_LE((g2.weights[l] - 2.0 * g1.weights[l]).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Adam, FirstStepFromZeroState) {
  AdamConfig cfg{0.1, 0.5, 0.999, 0.0, 1e-8};
  NetworkModel m = init_network(LayerSpec::dense({1, 1}), 0, cfg);
  m.weights[0](0, 0) = 0.0;
  Gradients g{{Matrix::Constant(1, 1, 1.0)}, {Vector::Constant(1, 1.0)}};
  adam_step(m, g);
  // m = 0.5, v = 0.001, both bias corrections give 1.
  EXPECT_NEAR(m.weights[0](0, 0), -0.1 / (1.0 + 1e-8), 1e-12);
  EXPECT_NEAR(m.adam.m_weights[0](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(m.adam.v_weights[0](0, 0), 0.001, 1e-15);
  EXPECT_EQ(m.adam.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersAlone) {
  AdamConfig cfg;
  cfg.lambda = 0.0;
  NetworkModel m = init_network(LayerSpec::dense({3, 2, 2}), 9, cfg);
  const NetworkModel before = m;
  Gradients g{{Matrix::Zero(2, 3), Matrix::Zero(2, 2)}, {Vector::Zero(2), Vector::Zero(2)}};
  adam_step(m, g);
  adam_step(m, g);
  EXPECT_EQ(m.weights[0], before.weights[0]);
  EXPECT_EQ(m.weights[1], before.weights[1]);
}

TEST(Adam, MatchesScalarRecurrenceOverManySteps) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n01;
  AdamConfig cfg{0.03, 0.5, 0.999, 0.0, 1e-8};
  NetworkModel m = init_network(LayerSpec::dense({2, 2}), 1, cfg);
  std::vector<oracle::ScalarAdam> ref(4, oracle::ScalarAdam{0.03, 0.5, 0.999, 1e-8});
  std::vector<double> theta(m.weights[0].data(), m.weights[0].data() + 4);
  for (int step = 0; step < 50; ++step) {
    Gradients g{{Matrix::NullaryExpr(2, 2, [&] { return n01(rng); })}, {Vector::Zero(2)}};
    for (int i = 0; i < 4; ++i) theta[i] = ref[i].step(theta[i], g.weights[0].data()[i]);
    adam_step(m, g);
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(m.weights[0].data()[i], theta[i], 1e-12);
}

TEST(Training, ZeroEpochsAndDeterminism) {
  std::mt19937_64 rng(12);
  DenseBatchSource src(random_batch(rng, 50, 6, 4, false));
  NetworkModel m = init_network(LayerSpec::dense({6, 5, 4}), 3);
  const NetworkModel before = m;
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(train(m, src, cfg).empty());
  EXPECT_EQ(m.weights[0], before.weights[0]);

  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.seed = 77;
  NetworkModel a = before, b = before;
  const auto ha = train(a, src, cfg), hb = train(b, src, cfg);
  ASSERT_EQ(ha.size(), 4u);
  for (std::size_t e = 0; e < ha.size(); ++e) EXPECT_EQ(ha[e].train_loss, hb[e].train_loss);
  for (std::size_t l = 0; l < a.layer_count(); ++l) EXPECT_EQ(a.weights[l], b.weights[l]);
  EXPECT_EQ(a.epoch_count, 4u);
}

TEST(Training, FrozenLayersStayFixed) {
  std::mt19937_64 rng(13);
  DenseBatchSource src(random_batch(rng, 40, 6, 2, false));
  NetworkModel m = init_network(LayerSpec::dense({6, 5, 5, 2}), 3);
  const NetworkModel before = m;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.loss = MultitaskLoss{{1, 1}};
  cfg.freeze_layers = 2;
  train(m, src, cfg);
  EXPECT_EQ(m.weights[0], before.weights[0]);
  EXPECT_EQ(m.weights[1], before.weights[1]);
  EXPECT_NE(m.weights[2], before.weights[2]);
}

TEST(Training, LearnsAnXorStyleTwoTaskProblem) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch data;
  data.inputs.resize(200, 2);
  data.targets.resize(200, 2);
  data.mask = Matrix::Ones(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
    data.inputs(i, 0) = a + 0.05 * (u(rng) - 0.5);
    data.inputs(i, 1) = b + 0.05 * (u(rng) - 0.5);
    data.targets(i, 0) = (a ^ b) ? 0.8 : 0.2;
    data.targets(i, 1) = (a & b) ? 0.7 : 0.3;
  }
  DenseBatchSource src(data);
  TrainConfig cfg;
  cfg.adam = AdamConfig{0.01, 0.9, 0.999, 0.0, 1e-8};
  cfg.epochs = 500;
  cfg.batch_size = 32;
  cfg.loss = MultitaskLoss{{1, 1}};
  NetworkModel m = init_network(LayerSpec::dense({2, 16, 16, 2}), 15, cfg.adam);
  train(m, src, cfg);
  const Matrix pred = forward(m, data.inputs);
  const double err = (pred - data.targets).cwiseAbs().mean();
  EXPECT_LT(err, 0.05);
}

TEST(Training, EmptyDataRejected) {
  DenseBatchSource src(Batch{Matrix(0, 3), Matrix(0, 1), Matrix(0, 1)});
  NetworkModel m = init_network(LayerSpec::dense({3, 1}), 0);
  try {
    train(m, src, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyTrainingSet);
  }
}
