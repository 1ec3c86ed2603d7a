#include <gtest/gtest.h>

#include <random>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/metrics.hpp"
#include "oracles.hpp"

using namespace deeppharm;

TEST(Metrics, WorkedExamples) {
  const std::vector<double> p{0.1, 0.5, 0.9, 0.3}, l{0.15, 0.7, 0.9, 0.0};
  EXPECT_DOUBLE_EQ(accuracy_at(p, l, 0.1), 50.0);
  EXPECT_DOUBLE_EQ(accuracy_at(p, l, 0.2), 75.0);
  EXPECT_DOUBLE_EQ(accuracy_at(p, l, 0.3), 100.0);
  EXPECT_NEAR(mae(p, l), (0.05 + 0.2 + 0.0 + 0.3) / 4, 1e-15);
  const std::vector<double> rp{0.9, 0.2, 0.6, 0.1}, rl{1, 1, 1, 0};
  EXPECT_NEAR(recall(rp, rl), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, MatchOraclesOnRandomVectors) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> p(n), l(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      l[i] = u(rng);
      b[i] = u(rng) < 0.4 ? 1.0 : 0.0;
    }
    b[0] = 1.0;
    for (double t : kAccuracyThresholds) EXPECT_NEAR(accuracy_at(p, l, t), oracle::accuracy(p, l, t), 1e-12);
    EXPECT_NEAR(mae(p, l), oracle::mae(p, l), 1e-12);
    EXPECT_NEAR(recall(p, b), oracle::recall(p, b, 0.5), 1e-12);
  }
}

TEST(Metrics, AccuracyIsMonotoneInTheThreshold) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(300), l(300);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(rng);
    l[i] = u(rng);
  }
  double last = -1.0;
  for (double t = 0.01; t <= 1.0; t += 0.01) {
    const double a = accuracy_at(p, l, t);
    EXPECT_GE(a, last);
    last = a;
  }
  EXPECT_EQ(accuracy_at(p, l, 1.0), 100.0);
}

TEST(Metrics, RecallIgnoresMonotoneTransforms) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(100), l(100), q(100);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(rng);
    l[i] = u(rng) < 0.5 ? 1.0 : 0.0;
    // Strictly increasing and fixes 0.5, so no prediction crosses the cutoff.
    q[i] = 0.5 + (p[i] - 0.5) * (1.0 + std::abs(p[i] - 0.5)) / 1.5;
  }
  EXPECT_EQ(recall(p, l), recall(q, l));
}

TEST(Metrics, ConstantHalfOnUniformLabelsScoresAboutTwentyPercent) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(100000, 0.5), l(100000);
  for (auto& v : l) v = u(rng);
  EXPECT_NEAR(accuracy_at(p, l, 0.1), 20.0, 1.0);
}

TEST(Metrics, RawScaleAccuracyEqualsNormalizedScaleAtScaledThreshold) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double divisor = 168.0;
  std::vector<double> p(500), l(500), pr(500), lr(500);
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Quantized so no pair sits on the threshold after scaling.
    p[i] = std::round(u(rng) * 1000) / 1000 + 0.0003;
    l[i] = std::round(u(rng) * 1000) / 1000;
    pr[i] = p[i] * divisor;
    lr[i] = l[i] * divisor;
  }
  EXPECT_EQ(accuracy_at(p, l, 0.1), accuracy_at(pr, lr, 0.1 * divisor));
  EXPECT_NEAR(mae(pr, lr), divisor * mae(p, l), 1e-9);
}

TEST(Metrics, Errors) {
  const std::vector<double> a{0.1, 0.2}, b{0.1};
  const std::vector<double> none{0.0, 0.0};
  EXPECT_THROW(accuracy_at(a, b, 0.1), Error);
  try {
    recall(a, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoPositives);
  }
  try {
    recall(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonBinaryLabel);
  }
}

TEST(Knn, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng() % 40, d = 1 + rng() % 6;
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid values make distance ties common.
      for (auto& v : x[i]) v = std::floor(u(rng) * 3);
      y[i] = u(rng);
    }
    std::vector<double> q(d);
    for (auto& v : q) v = std::floor(u(rng) * 3);
    const std::size_t k = 1 + rng() % n;
    EXPECT_NEAR(knn_predict(x, y, q, k), oracle::knn(x, y, q, k), 1e-12);
  }
  std::vector<std::vector<double>> x{{0.0}};
  std::vector<double> y{1.0}, q{0.0};
  try {
    knn_predict(x, y, q, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKTooLarge);
  }
}

TEST(Evaluate, PerfectPredictorAndMaskedLabels) {
  Dataset ds;
  for (int i = 0; i < 6; ++i) {
    MoleculeRecord r;
    r.id = std::to_string(i);
    r.mask = {true, i % 2 == 0, true, true};
    r.labels = {0.1 * i, 0.2, 0.3, 0.05 * i};
    ds.records.push_back(r);
  }
  ds.normalization = NormalizationSpec{};
  Matrix pred(6, 4);
  for (int i = 0; i < 6; ++i) {
    for (int t = 0; t < 4; ++t) pred(i, t) = ds.records[i].labels[t];
  }
  // Garbage in masked cells must not change anything.
  pred(1, 1) = pred(3, 1) = pred(5, 1) = 0.99;
  const EvalReport rep = evaluate(pred, ds);
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    ASSERT_TRUE(rep.tasks[t]);
    EXPECT_EQ(rep.tasks[t]->accuracy[0], 100.0);
    EXPECT_EQ(rep.tasks[t]->mae, 0.0);
  }
  EXPECT_EQ(rep.tasks[1]->count, 3u);
  for (auto& r : ds.records) r.mask[2] = false;
  try {
    evaluate(pred, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyTask);
  }
  EXPECT_FALSE(evaluate(pred, ds, {0, 1}).tasks[2]);
}
