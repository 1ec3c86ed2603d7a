#include "core/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "core/error.hpp"

namespace deeppharm {

namespace {

constexpr std::size_t kMinRecords = 5;

void check_weights(const DistanceWeights& w) {
  if (!(w.descriptor >= 0.0) || !(w.parameter >= 0.0) ||
      std::abs(w.descriptor + w.parameter - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "distance weights must be non-negative and sum to 1");
  }
}

void sort_subsets(SplitAssignment& s) {
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
}

}  // namespace

std::string_view subset_name(Subset s) {
  switch (s) {
    case Subset::kTrain: return "train";
    case Subset::kValidation: return "val";
    case Subset::kTest: return "test";
  }
  return "?";
}

SplitQuotas split_quotas(std::size_t n) {
  SplitQuotas q;
  q.validation = n / 5;
  q.test = n / 5;
  q.train = n - q.validation - q.test;
  return q;
}

std::vector<Subset> SplitAssignment::labels(std::size_t n) const {
  std::vector<Subset> out(n, Subset::kTrain);
  for (std::size_t i : validation) out.at(i) = Subset::kValidation;
  for (std::size_t i : test) out.at(i) = Subset::kTest;
  return out;
}

const std::vector<std::size_t>& SplitAssignment::indices(Subset s) const {
  switch (s) {
    case Subset::kValidation: return validation;
    case Subset::kTest: return test;
    default: return train;
  }
}

SplitFeatures standardize_features(const Dataset& ds) {
  const std::size_t n = ds.size();
  SplitFeatures f;
  f.descriptors.resize(n);
  f.labels.resize(n);
  f.mask.resize(n);
  for (std::size_t d = 0; d < kNumDescriptors; ++d) {
    double mean = 0.0;
    for (const auto& r : ds.records) mean += r.descriptors[d];
    mean /= static_cast<double>(std::max<std::size_t>(n, 1));
    double var = 0.0;
    for (const auto& r : ds.records) var += (r.descriptors[d] - mean) * (r.descriptors[d] - mean);
    var /= static_cast<double>(std::max<std::size_t>(n, 1));
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) {
      // A constant column carries no information.
      f.descriptors[i][d] = sd > 0.0 ? (ds.records[i].descriptors[d] - mean) / sd : 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    f.labels[i] = ds.records[i].labels;
    f.mask[i] = ds.records[i].mask;
  }
  f.standardized = true;
  return f;
}

double weighted_distance(const SplitFeatures& f, std::size_t a, std::size_t b,
                         const DistanceWeights& w) {
  if (!f.standardized) fail(ErrorCode::kNotStandardized, "descriptors are not standardized");
  double dsq = 0.0;
  for (std::size_t k = 0; k < kNumDescriptors; ++k) {
    const double diff = f.descriptors[a][k] - f.descriptors[b][k];
    dsq += diff * diff;
  }
  const double d = std::sqrt(dsq / static_cast<double>(kNumDescriptors));
  double psq = 0.0;
  int shared = 0;
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    if (f.mask[a][t] && f.mask[b][t]) {
      const double diff = f.labels[a][t] - f.labels[b][t];
      psq += diff * diff;
      ++shared;
    }
  }
  const double p = shared > 0 ? std::sqrt(psq / shared) : 0.0;
  return w.descriptor * d + w.parameter * p;
}

SplitAssignment mdfiswd_split(const Dataset& ds, const DistanceWeights& w, std::uint64_t seed) {
  check_weights(w);
  const std::size_t n = ds.size();
  if (n < kMinRecords) fail(ErrorCode::kTooFewRecords, "need at least 5 records to split");
  if (!ds.normalized()) fail(ErrorCode::kNotNormalized, "labels must be normalized before splitting");
  const SplitFeatures f = standardize_features(ds);

  // Representative start: the medoid.
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = weighted_distance(f, i, j, w);
      total[i] += dist;
      total[j] += dist;
    }
  }
  const std::size_t medoid =
      static_cast<std::size_t>(std::min_element(total.begin(), total.end()) - total.begin());

  const SplitQuotas quota = split_quotas(n);
  SplitAssignment out;
  out.seed = seed;
  out.method = SplitMethod::kMdFisWd;
  std::vector<bool> assigned(n, false);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  auto absorb = [&](std::size_t picked) {
    assigned[picked] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!assigned[i]) min_dist[i] = std::min(min_dist[i], weighted_distance(f, picked, i, w));
    }
  };
  out.train.push_back(medoid);
  absorb(medoid);

  // MaxMin growth; picks rotate val, test, train, train, train.
  constexpr std::array<Subset, 5> kCycle{Subset::kValidation, Subset::kTest, Subset::kTrain,
                                         Subset::kTrain, Subset::kTrain};
  auto remaining = [&](Subset s) {
    switch (s) {
      case Subset::kValidation: return quota.validation - out.validation.size();
      case Subset::kTest: return quota.test - out.test.size();
      default: return quota.train - out.train.size();
    }
  };
  std::size_t cursor = 0;
  while (remaining(Subset::kValidation) > 0 || remaining(Subset::kTest) > 0) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!assigned[i] && (best == n || min_dist[i] > min_dist[best])) best = i;
    }
    std::size_t slot = cursor;
    while (remaining(kCycle[slot % kCycle.size()]) == 0) ++slot;
    const Subset target = kCycle[slot % kCycle.size()];
    cursor = (slot + 1) % kCycle.size();
    switch (target) {
      case Subset::kValidation: out.validation.push_back(best); break;
      case Subset::kTest: out.test.push_back(best); break;
      default: out.train.push_back(best); break;
    }
    absorb(best);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!assigned[i]) out.train.push_back(i);
  }
  sort_subsets(out);
  return out;
}

SplitAssignment random_split(std::size_t n, std::uint64_t seed) {
  if (n < kMinRecords) fail(ErrorCode::kTooFewRecords, "need at least 5 records to split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates on the raw engine output so the permutation does not
  // depend on the standard library's distribution implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const SplitQuotas q = split_quotas(n);
  SplitAssignment out;
  out.seed = seed;
  out.method = SplitMethod::kRandom;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q.train));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(q.train),
                        order.begin() + static_cast<std::ptrdiff_t>(q.train + q.validation));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(q.train + q.validation), order.end());
  sort_subsets(out);
  return out;
}

SplitAssignment random_split(const Dataset& ds, std::uint64_t seed) {
  return random_split(ds.size(), seed);
}

double subset_error(const std::array<std::vector<double>, 3>& subsets, double lo, double hi,
                    int ngroups) {
  if (ngroups < 2) fail(ErrorCode::kBadGroupCount, "ngroups must be at least 2");
  const auto groups = static_cast<std::size_t>(ngroups);
  std::array<std::vector<double>, 3> freq;
  for (std::size_t s = 0; s < 3; ++s) {
    if (subsets[s].empty()) fail(ErrorCode::kEmptySubsetForTask, "subset has no labels");
    std::vector<std::size_t> counts(groups, 0);
    for (double v : subsets[s]) {
      std::size_t bin = 0;
      if (hi > lo) {
        const double pos = (v - lo) / (hi - lo) * static_cast<double>(groups);
        bin = pos <= 0.0 ? 0 : std::min(groups - 1, static_cast<std::size_t>(pos));
      }
      ++counts[bin];
    }
    freq[s].resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      freq[s][g] = 100.0 * static_cast<double>(counts[g]) / static_cast<double>(subsets[s].size());
    }
  }
  double sum = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double mx = std::max({freq[0][g], freq[1][g], freq[2][g]});
    const double mn = std::min({freq[0][g], freq[1][g], freq[2][g]});
    sum += mx - mn;
  }
  return sum / static_cast<double>(groups);
}

double subset_error(const Dataset& ds, const SplitAssignment& split, std::size_t task,
                    int ngroups) {
  if (ngroups < 2) fail(ErrorCode::kBadGroupCount, "ngroups must be at least 2");
  if (task >= kNumTasks) fail(ErrorCode::kInvalidArgument, "task index out of range");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : ds.records) {
    if (r.mask[task]) {
      lo = std::min(lo, r.labels[task]);
      hi = std::max(hi, r.labels[task]);
    }
  }
  std::array<std::vector<double>, 3> values;
  const std::array<Subset, 3> order{Subset::kTrain, Subset::kValidation, Subset::kTest};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t i : split.indices(order[s])) {
      const auto& r = ds.records.at(i);
      if (r.mask[task]) values[s].push_back(r.labels[task]);
    }
    if (values[s].empty()) {
      fail(ErrorCode::kEmptySubsetForTask, std::string(subset_name(order[s])) + " subset has no " +
                                               std::string(task_name(task)) + " labels");
    }
  }
  return subset_error(values, lo, hi, ngroups);
}

WeightSearchResult search_distance_weights(const Dataset& ds, double step, int ngroups) {
  if (!(step > 0.0 && step <= 1.0)) fail(ErrorCode::kInvalidArgument, "step must be in (0, 1]");
  WeightSearchResult result;
  result.best_mean_se = std::numeric_limits<double>::infinity();
  const int points = static_cast<int>(std::floor(1.0 / step + 1e-9));
  for (int k = 0; k <= points; ++k) {
    const double w1 = std::min(1.0, k * step);
    const DistanceWeights w{w1, 1.0 - w1};
    const SplitAssignment split = mdfiswd_split(ds, w);
    double sum = 0.0;
    int tasks = 0;
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      try {
        sum += subset_error(ds, split, t, ngroups);
        ++tasks;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptySubsetForTask) throw;
      }
    }
    const double mean = tasks > 0 ? sum / tasks : 0.0;
    result.grid.emplace_back(w1, mean);
    if (mean < result.best_mean_se) {
      result.best_mean_se = mean;
      result.best = w;
    }
  }
  return result;
}

}  // namespace deeppharm
