#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "core/error.hpp"

namespace deeppharm {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) {
    fail(ErrorCode::kShapeMismatch, "prediction and label lengths differ");
  }
  if (pred.empty()) fail(ErrorCode::kEmptyInput, "no predictions to score");
}

}  // namespace

double accuracy_at(std::span<const double> pred, std::span<const double> label,
                   double threshold) {
  check_pair(pred, label);
  if (!(threshold > 0.0)) fail(ErrorCode::kInvalidArgument, "threshold must be positive");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(pred[i] - label[i]) <= threshold) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> label) {
  check_pair(pred, label);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - label[i]);
  return sum / static_cast<double>(pred.size());
}

double recall(std::span<const double> pred, std::span<const double> label, double cutoff) {
  if (pred.size() != label.size()) {
    fail(ErrorCode::kShapeMismatch, "prediction and label lengths differ");
  }
  if (!(cutoff > 0.0 && cutoff < 1.0)) fail(ErrorCode::kInvalidArgument, "cutoff must be in (0,1)");
  std::size_t tp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (label[i] == 1.0) {
      (pred[i] >= cutoff ? tp : fn) += 1;
    } else if (label[i] != 0.0) {
      fail(ErrorCode::kNonBinaryLabel, "recall labels must be 0 or 1");
    }
  }
  if (tp + fn == 0) fail(ErrorCode::kNoPositives, "no positive labels");
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double knn_predict(std::span<const std::vector<double>> train_features,
                   std::span<const double> train_labels, std::span<const double> query,
                   std::size_t k) {
  const std::size_t n = train_features.size();
  if (train_labels.size() != n) fail(ErrorCode::kShapeMismatch, "feature/label counts differ");
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (k > n) fail(ErrorCode::kKTooLarge, "k exceeds the training set size");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (train_features[i].size() != query.size()) {
      fail(ErrorCode::kShapeMismatch, "feature widths differ");
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double d = train_features[i][j] - query[j];
      sq += d * d;
    }
    dist[i] = {sq, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += train_labels[dist[i].second];
  return sum / static_cast<double>(k);
}

}  // namespace deeppharm
