#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "core/data_model.hpp"

namespace deeppharm {

enum class Subset : int { kTrain = 0, kValidation = 1, kTest = 2 };
enum class SplitMethod { kMdFisWd, kRandom };

std::string_view subset_name(Subset s);  // "train", "val", "test"

struct SplitQuotas {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// 60:20:20 quotas: validation and test get floor(0.2 n), train the rest.
SplitQuotas split_quotas(std::size_t n);

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitMethod method = SplitMethod::kMdFisWd;

  // Subset of every record index, length n.
  std::vector<Subset> labels(std::size_t n) const;
  const std::vector<std::size_t>& indices(Subset s) const;
};

struct DistanceWeights {
  double descriptor = 0.7;
  double parameter = 0.3;
};

// Descriptors z-scored per column over the whole dataset, paired with the
// normalized labels. Produced by standardize_features.
struct SplitFeatures {
  std::vector<std::array<double, kNumDescriptors>> descriptors;
  std::vector<std::array<double, kNumTasks>> labels;
  std::vector<std::array<bool, kNumTasks>> mask;
  bool standardized = false;

  std::size_t size() const { return descriptors.size(); }
};

SplitFeatures standardize_features(const Dataset& ds);

// w1 * d + w2 * p. d: RMS difference of standardized descriptors. p: RMS
// difference over jointly present normalized labels, 0 when none shared.
double weighted_distance(const SplitFeatures& f, std::size_t a, std::size_t b,
                         const DistanceWeights& w);

SplitAssignment mdfiswd_split(const Dataset& ds, const DistanceWeights& w = {},
                              std::uint64_t seed = 0);
SplitAssignment random_split(const Dataset& ds, std::uint64_t seed);
SplitAssignment random_split(std::size_t n, std::uint64_t seed);

// Subset error of one task, in percentage points.
double subset_error(const Dataset& ds, const SplitAssignment& split, std::size_t task,
                    int ngroups = 10);

// Label-only variant: three samples of values sharing the binning range
// [lo, hi].
double subset_error(const std::array<std::vector<double>, 3>& subsets, double lo, double hi,
                    int ngroups);

struct WeightSearchResult {
  DistanceWeights best;
  double best_mean_se = 0.0;
  std::vector<std::pair<double, double>> grid;  // (w1, mean SE over tasks)
};

// Scans w1 over {0, step, 2*step, ..., 1} with w2 = 1 - w1 and keeps the
// weights with the lowest mean SE over tasks that have labels.
WeightSearchResult search_distance_weights(const Dataset& ds, double step = 0.1,
                                           int ngroups = 10);

}  // namespace deeppharm
