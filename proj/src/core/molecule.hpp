#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deeppharm {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

struct Atom {
  int element = 6;
  int charge = 0;
  std::optional<int> explicit_h;  // set for bracket atoms only
  bool aromatic = false;
  bool bracket = false;
  int hydrogens = 0;  // explicit count, or implicit count derived from valence

  bool operator==(const Atom&) const = default;
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::kSingle;

  bool operator==(const Bond&) const = default;
};

// Heavy-atom graph of one SMILES string (possibly several disconnected
// components). Ring flags mark atoms and bonds lying on any cycle.
struct MolecularGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<bool> atom_in_ring;
  std::vector<bool> bond_in_ring;

  std::size_t atom_count() const { return atoms.size(); }

  // (neighbor atom, bond index) pairs per atom, in bond order.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency() const;
};

int element_number(std::string_view symbol);  // 0 when unknown
std::string_view element_symbol(int number);

// Parses the supported SMILES subset. Throws Error with one of
// kEmptyInput, kUnbalancedBranch, kUnmatchedRingClosure, kUnknownElement,
// kValenceViolation or kSmilesSyntax.
MolecularGraph parse_smiles(std::string_view smiles);

// Writes a SMILES string for the graph. With a seed, the traversal start
// and branch order are randomized, producing a different atom ordering of
// the same molecule. `atom_order`, when given, receives the original atom
// index of every atom in written order.
std::string write_smiles(const MolecularGraph& graph,
                         std::optional<std::uint64_t> seed = std::nullopt,
                         std::vector<std::size_t>* atom_order = nullptr);

// Marks ring atoms/bonds: a bond is a ring bond iff it is not a bridge.
void perceive_rings(MolecularGraph& graph);

}  // namespace deeppharm
