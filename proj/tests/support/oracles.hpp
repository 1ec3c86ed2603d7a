#pragma once

// Reference implementations used to check the library. They are written
// from the definitions, as plainly as possible, and share no code with the
// core.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline double accuracy(const std::vector<double>& pred, const std::vector<double>& label, double t) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::fabs(pred[i] - label[i]) <= t) hits++;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double mae(const std::vector<double>& pred, const std::vector<double>& label) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - label[i]);
  return s / static_cast<double>(pred.size());
}

inline double recall(const std::vector<double>& pred, const std::vector<double>& label, double cutoff) {
  double tp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (label[i] != 1.0) continue;
    if (pred[i] >= cutoff) {
      tp += 1;
    } else {
      fn += 1;
    }
  }
  return tp / (tp + fn);
}

// Exhaustive neighbour search: sort every training row by (distance, index).
inline double knn(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                  const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) d += (x[i][j] - q[j]) * (x[i][j] - q[j]);
    all.emplace_back(std::sqrt(d), i);
  }
  std::sort(all.begin(), all.end());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += y[all[i].second];
  return s / static_cast<double>(k);
}

// Scalar Adam from the textbook recurrences, one parameter at a time.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;

  double step(double theta, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

// MaxMin trace over an explicit distance matrix: start from the medoid in
// train, then hand the farthest remaining point to val, test, train, train,
// train in turn, skipping full subsets. Returns subset per point (0 train,
// 1 val, 2 test) and the pick order.
struct MaxMinTrace {
  std::vector<int> subset;
  std::vector<std::size_t> order;
};

inline MaxMinTrace maxmin(const std::vector<std::vector<double>>& dist) {
  const std::size_t n = dist.size();
  const std::size_t q_val = n / 5, q_test = n / 5, q_train = n - q_val - q_test;
  MaxMinTrace tr;
  tr.subset.assign(n, -1);
  std::size_t medoid = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += dist[i][j];
    if (s < best) {
      best = s;
      medoid = i;
    }
  }
  tr.subset[medoid] = 0;
  tr.order.push_back(medoid);
  std::array<std::size_t, 3> filled{1, 0, 0};
  const std::array<std::size_t, 3> quota{q_train, q_val, q_test};
  const int cycle[5] = {1, 2, 0, 0, 0};
  std::size_t slot = 0;
  while (filled[1] < quota[1] || filled[2] < quota[2]) {
    std::size_t pick = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (tr.subset[i] >= 0) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j : tr.order) nearest = std::min(nearest, dist[i][j]);
      if (nearest > far) {
        far = nearest;
        pick = i;
      }
    }
    int s = -1;
    for (int tries = 0; tries < 5 && s < 0; ++tries) {
      const int c = cycle[slot % 5];
      ++slot;
      if (filled[static_cast<std::size_t>(c)] < quota[static_cast<std::size_t>(c)]) s = c;
    }
    tr.subset[pick] = s;
    tr.order.push_back(pick);
    filled[static_cast<std::size_t>(s)]++;
  }
  for (auto& s : tr.subset) {
    if (s < 0) s = 0;
  }
  return tr;
}

// Subset error straight from the definition.
inline double subset_error(const std::array<std::vector<double>, 3>& subsets, int groups) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : subsets) {
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double width = (hi - lo) / groups;
  double total = 0.0;
  for (int g = 0; g < groups; ++g) {
    double mx = -1.0, mn = 1e300;
    for (const auto& s : subsets) {
      std::size_t c = 0;
      for (double v : s) {
        int bin = width > 0 ? static_cast<int>((v - lo) / width) : 0;
        if (bin >= groups) bin = groups - 1;
        if (bin == g) ++c;
      }
      const double f = 100.0 * static_cast<double>(c) / static_cast<double>(s.size());
      mx = std::max(mx, f);
      mn = std::min(mn, f);
    }
    total += mx - mn;
  }
  return total / groups;
}

}  // namespace oracle
