#include "core/bioactivity.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "core/error.hpp"
#include "core/fingerprint.hpp"
#include "core/text.hpp"

namespace deeppharm {

BioactivityTable load_bioactivity(const std::string& path, int radius, std::size_t nbits) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::size_t smiles_col = 0, target_col = 0, active_col = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto header = text::split_csv_line(line);
    auto find = [&](const char* name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (text::trim(header[i]) == name) return i;
      }
      fail(ErrorCode::kMissingColumn, std::string("bioactivity file lacks column '") + name + "'");
    };
    smiles_col = find("smiles");
    target_col = find("target_id");
    active_col = find("active");
    have_header = true;
  }
  if (!have_header) fail(ErrorCode::kMissingColumn, "bioactivity file has no header row");

  BioactivityTable table;
  table.nbits = nbits;
  const std::size_t words = table.words_per_molecule();
  std::unordered_map<std::string, std::size_t> molecule_index;
  std::unordered_map<std::string, std::size_t> target_index;  // first-seen order
  std::vector<std::string> first_seen_targets;
  // Packed (molecule << 21 | first-seen target << 1 | active) entries.
  std::vector<std::uint64_t> cells;
  constexpr std::size_t kMaxTargets = std::size_t{1} << 20;

  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv_line(line);
    const std::size_t need = std::max({smiles_col, target_col, active_col});
    if (fields.size() <= need) {
      fail(ErrorCode::kNonNumericCell, "short row on line " + std::to_string(line_no));
    }
    const std::string smiles(text::trim(fields[smiles_col]));
    const std::string target(text::trim(fields[target_col]));
    const auto active = text::parse_double(fields[active_col]);
    if (!active || (*active != 0.0 && *active != 1.0)) {
      fail(ErrorCode::kNonBinaryLabel, "activity on line " + std::to_string(line_no) + " is not 0/1");
    }

    auto [mit, new_molecule] = molecule_index.emplace(smiles, molecule_index.size());
    if (new_molecule) {
      const Fingerprint fp = ecfp_from_smiles(smiles, radius, nbits);
      const std::size_t base = table.fingerprint_words.size();
      table.fingerprint_words.resize(base + words, 0);
      for (std::size_t b = 0; b < nbits; ++b) {
        if (fp.test(b)) table.fingerprint_words[base + b / 64] |= std::uint64_t{1} << (b % 64);
      }
    }
    auto [tit, new_target] = target_index.emplace(target, first_seen_targets.size());
    if (new_target) {
      if (first_seen_targets.size() >= kMaxTargets) fail(ErrorCode::kInvalidArgument, "too many targets");
      first_seen_targets.push_back(target);
    }
    cells.push_back((std::uint64_t{mit->second} << 21) | (std::uint64_t{tit->second} << 1) |
                    (*active == 1.0 ? 1u : 0u));
    ++table.rows_read;
  }

  table.targets = first_seen_targets;
  std::sort(table.targets.begin(), table.targets.end());
  std::vector<std::size_t> remap(first_seen_targets.size());
  for (std::size_t i = 0; i < first_seen_targets.size(); ++i) {
    remap[i] = static_cast<std::size_t>(
        std::lower_bound(table.targets.begin(), table.targets.end(), first_seen_targets[i]) -
        table.targets.begin());
  }
  table.labels.assign(molecule_index.size() * table.targets.size(), -1);
  for (std::uint64_t cell : cells) {
    const std::size_t mol = cell >> 21;
    const std::size_t target = remap[(cell >> 1) & (kMaxTargets - 1)];
    std::int8_t& slot = table.labels[mol * table.targets.size() + target];
    if (cell & 1u) {
      slot = 1;
    } else if (slot < 0) {
      slot = 0;
    }
  }
  for (std::int8_t l : table.labels) table.positives += l == 1 ? 1 : 0;
  if (table.molecule_count() == 0) fail(ErrorCode::kEmptyTrainingSet, "bioactivity file has no rows");
  return table;
}

BioactivityBatchSource::BioactivityBatchSource(const BioactivityTable& table,
                                               std::vector<std::size_t> molecules)
    : table_(table), molecules_(std::move(molecules)) {}

void BioactivityBatchSource::fill(std::span<const std::size_t> rows, Batch& out) const {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto targets = static_cast<Eigen::Index>(table_.targets.size());
  out.inputs.setZero(n, static_cast<Eigen::Index>(table_.nbits));
  out.targets.setZero(n, targets);
  out.mask.setZero(n, targets);
  const std::size_t words = table_.words_per_molecule();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t mol = molecules_[rows[static_cast<std::size_t>(i)]];
    for (std::size_t b = 0; b < table_.nbits; ++b) {
      if ((table_.fingerprint_words[mol * words + b / 64] >> (b % 64)) & 1u) {
        out.inputs(i, static_cast<Eigen::Index>(b)) = 1.0;
      }
    }
    for (Eigen::Index t = 0; t < targets; ++t) {
      const std::int8_t l = table_.label(mol, static_cast<std::size_t>(t));
      if (l < 0) continue;
      out.targets(i, t) = l;
      out.mask(i, t) = 1.0;
    }
  }
}

}  // namespace deeppharm
