#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deeppharm {

inline constexpr double kDefaultRecallCutoff = 0.5;

// Percentage of pairs with |pred - label| <= threshold.
double accuracy_at(std::span<const double> pred, std::span<const double> label,
                   double threshold);

double mae(std::span<const double> pred, std::span<const double> label);

// TP / (TP + FN), a prediction counting as positive when >= cutoff.
double recall(std::span<const double> pred, std::span<const double> label,
              double cutoff = kDefaultRecallCutoff);

// Mean label of the k nearest training rows by Euclidean distance; ties
// resolved toward the lower row index.
double knn_predict(std::span<const std::vector<double>> train_features,
                   std::span<const double> train_labels, std::span<const double> query,
                   std::size_t k);

}  // namespace deeppharm
