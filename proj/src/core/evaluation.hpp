#pragma once

#include <array>
#include <span>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/data_model.hpp"
#include "core/neural.hpp"

namespace deeppharm {

inline constexpr std::array<double, 3> kAccuracyThresholds{0.1, 0.2, 0.3};

struct TaskMetrics {
  std::array<double, kAccuracyThresholds.size()> accuracy{};  // percent
  double mae = 0.0;
  std::size_t count = 0;
  std::optional<double> recall;  // binary tasks only
};

// Metrics for one model on one data slice. Absent entries are tasks that
// were not requested.
struct EvalReport {
  std::array<std::optional<TaskMetrics>, kNumTasks> tasks;
};

TaskMetrics task_metrics(std::span<const double> pred, std::span<const double> label);

// `predictions` is n x kNumTasks, row i for record i of `slice`. Only present
// labels are scored. Throws kEmptyTask when a requested task has none.
EvalReport evaluate(const Matrix& predictions, const Dataset& slice,
                    const std::vector<std::size_t>& tasks = {0, 1, 2, 3});

// Train / validation / test reports of one model, printed as one block of
// rows: one per model and subset, one column group per task.
struct ModelReport {
  std::string model;
  std::array<std::optional<EvalReport>, 3> subsets;  // train, val, test
};

nlohmann::json report_to_json(const std::vector<ModelReport>& reports,
                              const NormalizationSpec& normalization);
std::string report_to_text(const std::vector<ModelReport>& reports,
                           const NormalizationSpec& normalization);

}  // namespace deeppharm
