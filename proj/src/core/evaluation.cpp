#include "core/evaluation.hpp"

#include <cctype>
#include <cstdio>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/splitter.hpp"
#include "core/text.hpp"

namespace deeppharm {

namespace {

constexpr std::array<Subset, 3> kSubsets{Subset::kTrain, Subset::kValidation, Subset::kTest};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

TaskMetrics task_metrics(std::span<const double> pred, std::span<const double> label) {
  TaskMetrics m;
  for (std::size_t k = 0; k < kAccuracyThresholds.size(); ++k) {
    m.accuracy[k] = accuracy_at(pred, label, kAccuracyThresholds[k]);
  }
  m.mae = mae(pred, label);
  m.count = pred.size();
  return m;
}

EvalReport evaluate(const Matrix& predictions, const Dataset& slice,
                    const std::vector<std::size_t>& tasks) {
  if (static_cast<std::size_t>(predictions.rows()) != slice.size() ||
      predictions.cols() != static_cast<Eigen::Index>(kNumTasks)) {
    fail(ErrorCode::kShapeMismatch, "prediction matrix does not match the slice");
  }
  EvalReport report;
  for (std::size_t t : tasks) {
    if (t >= kNumTasks) fail(ErrorCode::kInvalidArgument, "task index out of range");
    std::vector<double> p, l;
    for (std::size_t r = 0; r < slice.size(); ++r) {
      if (!slice.records[r].mask[t]) continue;
      p.push_back(predictions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)));
      l.push_back(slice.records[r].labels[t]);
    }
    if (p.empty()) {
      fail(ErrorCode::kEmptyTask, "no " + std::string(task_name(t)) + " labels in the slice");
    }
    report.tasks[t] = task_metrics(p, l);
  }
  return report;
}

nlohmann::json report_to_json(const std::vector<ModelReport>& reports,
                              const NormalizationSpec& normalization) {
  nlohmann::json j;
  j["scale"] = "normalized";
  j["divisors"] = nlohmann::json::object();
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    j["divisors"][std::string(task_name(t))] = normalization.divisors[t];
  }
  j["thresholds"] = kAccuracyThresholds;
  j["models"] = nlohmann::json::array();
  for (const auto& rep : reports) {
    nlohmann::json m;
    m["model"] = rep.model;
    for (std::size_t s = 0; s < kSubsets.size(); ++s) {
      if (!rep.subsets[s]) continue;
      nlohmann::json sub = nlohmann::json::object();
      for (std::size_t t = 0; t < kNumTasks; ++t) {
        const auto& tm = rep.subsets[s]->tasks[t];
        if (!tm) continue;
        nlohmann::json acc = nlohmann::json::object();
        for (std::size_t k = 0; k < kAccuracyThresholds.size(); ++k) {
          acc[text::format_double(kAccuracyThresholds[k])] = tm->accuracy[k];
        }
        sub[std::string(task_name(t))] = {{"n", tm->count},
                                          {"accuracy", acc},
                                          {"mae", tm->mae},
                                          {"mae_raw", tm->mae * normalization.divisors[t]}};
      }
      m["subsets"][std::string(subset_name(kSubsets[s]))] = std::move(sub);
    }
    j["models"].push_back(std::move(m));
  }
  return j;
}

std::string report_to_text(const std::vector<ModelReport>& reports,
                           const NormalizationSpec& normalization) {
  std::string out;
  out += "Accuracy (% with |AE| <= 0.1) and MAE on the normalized scale; divisors";
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    out += " " + std::string(task_name(t)) + "=" + text::format_double(normalization.divisors[t]);
  }
  out += "\n\n";
  out += pad("Task", 6) + pad("Model", 22);
  for (const char* h : {"Train Acc", "MAE", "Val Acc", "MAE", "Test Acc", "MAE"}) {
    out += pad_left(h, 10);
  }
  out += "\n";
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    for (const auto& rep : reports) {
      bool any = false;
      for (const auto& s : rep.subsets) any = any || (s && s->tasks[t]);
      if (!any) continue;
      std::string upper(task_name(t));
      for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      out += pad(upper, 6) + pad(rep.model, 22);
      for (const auto& s : rep.subsets) {
        if (s && s->tasks[t]) {
          out += pad_left(fixed(s->tasks[t]->accuracy[0], 2), 10);
          out += pad_left(fixed(s->tasks[t]->mae, 4), 10);
        } else {
          out += pad_left("-", 10) + pad_left("-", 10);
        }
      }
      out += "\n";
    }
  }

  out += "\nTest-set accuracy ladder\n";
  out += pad("Task", 6) + pad("Model", 22);
  for (double th : kAccuracyThresholds) {
    out += pad_left("<= " + fixed(th * 100.0, 0) + "%", 10);
  }
  out += "\n";
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    for (const auto& rep : reports) {
      const auto& test = rep.subsets[2];
      if (!test || !test->tasks[t]) continue;
      std::string upper(task_name(t));
      for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      out += pad(upper, 6) + pad(rep.model, 22);
      for (double a : test->tasks[t]->accuracy) out += pad_left(fixed(a, 2), 10);
      out += "\n";
    }
  }
  return out;
}

}  // namespace deeppharm
