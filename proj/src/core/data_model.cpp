#include "core/data_model.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "core/error.hpp"
#include "core/text.hpp"

namespace deeppharm {

namespace {

constexpr std::array<std::string_view, kNumTasks> kTaskNames{"ba", "ppbr", "vdss", "hl"};

std::size_t require_column(const std::unordered_map<std::string, std::size_t>& header,
                           const std::string& name) {
  auto it = header.find(name);
  if (it == header.end()) fail(ErrorCode::kMissingColumn, "missing column '" + name + "'");
  return it->second;
}

std::string cell_ref(std::size_t line, const std::string& column) {
  return "line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

std::string_view task_name(std::size_t task) { return kTaskNames.at(task); }

std::optional<std::size_t> task_from_name(std::string_view name) {
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    if (kTaskNames[t] == name) return t;
  }
  return std::nullopt;
}

bool raw_label_in_range(std::size_t task, double value) {
  switch (task) {
    case 0:
    case 1: return value >= 0.0 && value <= 100.0;
    case 2: return value > 0.0 && value <= 2000.0;
    case 3: return value > 0.0 && value <= 168.0;
    default: return false;
  }
}

std::size_t Dataset::present_count(std::size_t task) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.mask[task] ? 1 : 0;
  return n;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.normalization = normalization;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

Dataset parse_pk_dataset(std::string_view csv, const ColumnMap& columns) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, std::size_t> header;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split_csv_line(line);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      header.emplace(std::string(text::trim(fields[i])), i);
    }
    have_header = true;
  }
  if (!have_header) fail(ErrorCode::kMissingColumn, "dataset has no header row");

  const std::size_t id_col = require_column(header, columns.id);
  const std::size_t smiles_col = require_column(header, columns.smiles);
  std::array<std::size_t, kNumDescriptors> desc_cols{};
  for (std::size_t d = 0; d < kNumDescriptors; ++d) {
    desc_cols[d] = require_column(header, columns.descriptors[d]);
  }
  std::array<std::size_t, kNumTasks> label_cols{};
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    label_cols[t] = require_column(header, columns.labels[t]);
  }
  std::optional<std::size_t> ecfp_col;
  if (auto it = header.find(columns.ecfp); it != header.end()) ecfp_col = it->second;

  Dataset ds;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split_csv_line(line);
    auto field = [&](std::size_t col) -> std::string_view {
      return col < fields.size() ? text::trim(fields[col]) : std::string_view{};
    };

    MoleculeRecord rec;
    rec.id = std::string(field(id_col));
    rec.smiles = std::string(field(smiles_col));
    for (std::size_t d = 0; d < kNumDescriptors; ++d) {
      auto v = text::parse_double(field(desc_cols[d]));
      if (!v || !std::isfinite(*v)) {
        fail(ErrorCode::kNonNumericCell,
             "non-numeric descriptor at " + cell_ref(line_no, columns.descriptors[d]));
      }
      rec.descriptors[d] = *v;
    }
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      std::string_view cell = field(label_cols[t]);
      if (cell.empty()) continue;
      auto v = text::parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorCode::kNonNumericCell,
             "non-numeric label at " + cell_ref(line_no, columns.labels[t]));
      }
      if (!raw_label_in_range(t, *v)) {
        fail(ErrorCode::kRangeViolation, std::string(task_name(t)) + " value " +
                                             text::format_double(*v) + " out of range at " +
                                             cell_ref(line_no, columns.labels[t]));
      }
      rec.labels[t] = *v;
      rec.mask[t] = true;
    }
    if (rec.mask == std::array<bool, kNumTasks>{}) {
      fail(ErrorCode::kNoLabels, "record '" + rec.id + "' on line " +
                                     std::to_string(line_no) + " has no labels");
    }
    if (ecfp_col) rec.ecfp = std::string(field(*ecfp_col));
    if (!seen.insert(rec.id).second) {
      fail(ErrorCode::kDuplicateId,
           "duplicate id '" + rec.id + "' on line " + std::to_string(line_no));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

Dataset load_pk_dataset(const std::string& path, const ColumnMap& columns) {
  return parse_pk_dataset(text::read_file(path), columns);
}

std::string format_pk_dataset(const Dataset& ds) {
  const ColumnMap canonical;
  bool with_ecfp = false;
  for (const auto& r : ds.records) with_ecfp = with_ecfp || !r.ecfp.empty();

  std::string out = canonical.id + "," + canonical.smiles;
  for (const auto& name : canonical.descriptors) out += "," + name;
  for (const auto& name : canonical.labels) out += "," + name;
  if (with_ecfp) out += "," + canonical.ecfp;
  out += "\n";

  for (const auto& r : ds.records) {
    out += text::csv_field(r.id) + "," + text::csv_field(r.smiles);
    for (double d : r.descriptors) out += "," + text::format_double(d);
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      out += ",";
      if (r.mask[t]) out += text::format_double(r.labels[t]);
    }
    if (with_ecfp) out += "," + r.ecfp;
    out += "\n";
  }
  return out;
}

void save_pk_dataset(const Dataset& ds, const std::string& path) {
  text::write_file(path, format_pk_dataset(ds));
}

Dataset normalize_targets(const Dataset& ds, const NormalizationSpec& spec) {
  if (ds.normalized()) fail(ErrorCode::kAlreadyNormalized, "dataset is already normalized");
  for (double d : spec.divisors) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      fail(ErrorCode::kInvalidArgument, "normalization divisors must be positive");
    }
  }
  Dataset out = ds;
  for (auto& r : out.records) {
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      if (!r.mask[t]) continue;
      r.labels[t] = spec.normalize(t, r.labels[t]);
      if (!(r.labels[t] >= 0.0 && r.labels[t] <= 1.0)) {
        fail(ErrorCode::kResultOutOfRange, "normalized " + std::string(task_name(t)) +
                                               " of '" + r.id + "' is " +
                                               text::format_double(r.labels[t]));
      }
    }
  }
  out.normalization = spec;
  return out;
}

Dataset denormalize_targets(const Dataset& ds) {
  if (!ds.normalized()) return ds;
  Dataset out = ds;
  for (auto& r : out.records) {
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      if (r.mask[t]) r.labels[t] = ds.normalization->denormalize(t, r.labels[t]);
    }
  }
  out.normalization.reset();
  return out;
}

}  // namespace deeppharm
