#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deeppharm {

inline constexpr std::size_t kNumDescriptors = 8;
inline constexpr std::size_t kNumTasks = 4;

// Pharmacokinetic tasks in canonical column order.
enum class Task : int { kBA = 0, kPPBR = 1, kVDss = 2, kHL = 3 };

std::string_view task_name(std::size_t task);   // "ba", "ppbr", "vdss", "hl"
std::optional<std::size_t> task_from_name(std::string_view name);

struct MoleculeRecord {
  std::string id;
  std::string smiles;
  std::array<double, kNumDescriptors> descriptors{};
  std::array<double, kNumTasks> labels{};  // meaningful only where mask is set
  std::array<bool, kNumTasks> mask{};
  std::string ecfp;  // optional precomputed 0/1 string, empty when absent

  bool has_label(std::size_t task) const { return mask[task]; }
};

struct NormalizationSpec {
  std::array<double, kNumTasks> divisors{100.0, 100.0, 2000.0, 168.0};

  double normalize(std::size_t task, double raw) const { return raw / divisors[task]; }
  double denormalize(std::size_t task, double value) const { return value * divisors[task]; }
};

struct Dataset {
  std::vector<MoleculeRecord> records;
  std::optional<NormalizationSpec> normalization;

  std::size_t size() const { return records.size(); }
  bool normalized() const { return normalization.has_value(); }

  // Number of records with a present label for `task`.
  std::size_t present_count(std::size_t task) const;

  // Records at the given indices, sharing this dataset's normalization.
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

// Column names used when reading a dataset file.
struct ColumnMap {
  std::string id = "id";
  std::string smiles = "smiles";
  std::array<std::string, kNumDescriptors> descriptors{
      "mw", "tpsa", "rotb", "hbd", "hba", "heavy", "complexity", "cbu"};
  std::array<std::string, kNumTasks> labels{"ba", "ppbr", "vdss", "hl"};
  std::string ecfp = "ecfp";  // optional column
};

// Checks the raw-unit bounds of one label value.
bool raw_label_in_range(std::size_t task, double value);

Dataset parse_pk_dataset(std::string_view csv, const ColumnMap& columns = {});
Dataset load_pk_dataset(const std::string& path, const ColumnMap& columns = {});

// Canonical CSV: canonical column order, shortest round-trip numbers, empty
// cell for missing labels. The ecfp column is written only when any record
// carries one.
std::string format_pk_dataset(const Dataset& ds);
void save_pk_dataset(const Dataset& ds, const std::string& path);

Dataset normalize_targets(const Dataset& ds, const NormalizationSpec& spec = {});
Dataset denormalize_targets(const Dataset& ds);

}  // namespace deeppharm
