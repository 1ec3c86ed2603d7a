#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/neural.hpp"

namespace deeppharm {

// Molecule x target activity table built from a streamed (smiles,
// target_id, active) CSV. Fingerprints are bit-packed; labels are -1 when
// the pair was not measured.
struct BioactivityTable {
  std::size_t nbits = 0;
  std::vector<std::string> targets;  // sorted target ids, one per output
  std::vector<std::uint64_t> fingerprint_words;  // molecules x words_per_molecule
  std::vector<std::int8_t> labels;               // molecules x targets
  std::size_t rows_read = 0;
  std::size_t positives = 0;

  std::size_t words_per_molecule() const { return (nbits + 63) / 64; }
  std::size_t molecule_count() const {
    return words_per_molecule() == 0 ? 0 : fingerprint_words.size() / words_per_molecule();
  }
  std::int8_t label(std::size_t molecule, std::size_t target) const {
    return labels[molecule * targets.size() + target];
  }
};

// Reads the file one line at a time; each distinct SMILES is fingerprinted
// once. Conflicting duplicate (smiles, target) rows resolve to active.
BioactivityTable load_bioactivity(const std::string& path, int radius, std::size_t nbits);

// Serves rows of a subset of molecules as dense batches.
class BioactivityBatchSource final : public BatchSource {
 public:
  BioactivityBatchSource(const BioactivityTable& table, std::vector<std::size_t> molecules);
  std::size_t size() const override { return molecules_.size(); }
  void fill(std::span<const std::size_t> rows, Batch& out) const override;

 private:
  const BioactivityTable& table_;
  std::vector<std::size_t> molecules_;
};

}  // namespace deeppharm
