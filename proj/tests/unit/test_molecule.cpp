#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "core/error.hpp"
#include "core/molecule.hpp"
#include "molecules.hpp"

using namespace deeppharm;

namespace {

ErrorCode parse_error(std::string_view s) {
  try {
    parse_smiles(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "'" << s << "' parsed";
  return ErrorCode::kInvalidArgument;
}

using BondKey = std::tuple<std::size_t, std::size_t, int>;

std::set<BondKey> bond_set(const MolecularGraph& g, const std::vector<std::size_t>& relabel) {
  std::set<BondKey> out;
  for (const auto& b : g.bonds) {
    std::size_t x = relabel[b.begin], y = relabel[b.end];
    if (x > y) std::swap(x, y);
    out.emplace(x, y, static_cast<int>(b.order));
  }
  return out;
}

}  // namespace

TEST(Smiles, Ethanol) {
  const auto g = parse_smiles("CCO");
  ASSERT_EQ(g.atoms.size(), 3u);
  ASSERT_EQ(g.bonds.size(), 2u);
  EXPECT_EQ(g.bonds[0].begin, 0u);
  EXPECT_EQ(g.bonds[0].end, 1u);
  EXPECT_EQ(g.bonds[1].order, BondOrder::kSingle);
  EXPECT_EQ(g.atoms[0].hydrogens, 3);
  EXPECT_EQ(g.atoms[1].hydrogens, 2);
  EXPECT_EQ(g.atoms[2].hydrogens, 1);
  EXPECT_EQ(g.atoms[2].element, 8);
}

TEST(Smiles, Benzene) {
  const auto g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.atoms.size(), 6u);
  ASSERT_EQ(g.bonds.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(g.atoms[i].aromatic);
    EXPECT_EQ(g.atoms[i].hydrogens, 1);
    EXPECT_TRUE(g.atom_in_ring[i]);
    EXPECT_EQ(g.bonds[i].order, BondOrder::kAromatic);
    EXPECT_TRUE(g.bond_in_ring[i]);
  }
}

TEST(Smiles, MalformedInput) {
  EXPECT_EQ(parse_error("C("), ErrorCode::kUnbalancedBranch);
  EXPECT_EQ(parse_error("C)C"), ErrorCode::kUnbalancedBranch);
  EXPECT_EQ(parse_error("C1CC"), ErrorCode::kUnmatchedRingClosure);
  EXPECT_EQ(parse_error("CXC"), ErrorCode::kUnknownElement);
  EXPECT_EQ(parse_error("C(C)(C)(C)(C)C"), ErrorCode::kValenceViolation);
  EXPECT_EQ(parse_error(""), ErrorCode::kEmptyInput);
}

TEST(Smiles, BracketAtomsAndStereo) {
  const auto g = parse_smiles("[NH4+].[O-]C(=O)[C@@H](N)C/C=C/[13CH3]");
  EXPECT_EQ(g.atoms[0].charge, 1);
  EXPECT_EQ(g.atoms[0].hydrogens, 4);
  EXPECT_EQ(g.atoms[1].charge, -1);
  EXPECT_EQ(g.atoms[1].hydrogens, 0);
  EXPECT_EQ(g.atoms.back().hydrogens, 3);
  // The dot leaves the ammonium disconnected.
  for (const auto& b : g.bonds) EXPECT_NE(b.begin, 0u);
}

TEST(Smiles, RingClosureDigitsAndPercent) {
  const auto a = parse_smiles("C1CCCCC1");
  const auto b = parse_smiles("C%12CCCCC%12");
  EXPECT_EQ(a.bonds.size(), 6u);
  EXPECT_EQ(bond_set(a, {0, 1, 2, 3, 4, 5}), bond_set(b, {0, 1, 2, 3, 4, 5}));
  const auto g = parse_smiles("CC1=CC=CC=C1");
  EXPECT_EQ(std::count(g.bond_in_ring.begin(), g.bond_in_ring.end(), true), 6);
  EXPECT_FALSE(g.atom_in_ring[0]);
}

TEST(Smiles, RingFlagsFromBridges) {
  // Biphenyl: the linking bond is a bridge, every other bond lies on a ring.
  const auto g = parse_smiles("c1ccccc1-c1ccccc1");
  std::size_t ring_bonds = 0;
  for (std::size_t i = 0; i < g.bonds.size(); ++i) {
    if (g.bond_in_ring[i]) ++ring_bonds;
  }
  EXPECT_EQ(ring_bonds, 12u);
  EXPECT_EQ(g.bonds.size(), 13u);
}

TEST(Smiles, HeteroaromaticHydrogens) {
  const auto pyrrole = parse_smiles("c1cc[nH]c1");
  EXPECT_EQ(pyrrole.atoms[3].hydrogens, 1);
  const auto pyridine = parse_smiles("c1ccncc1");
  EXPECT_EQ(pyridine.atoms[3].hydrogens, 0);
  const auto caffeine = parse_smiles(fixtures::kDrugs[1]);
  for (const auto& a : caffeine.atoms) {
    if (a.aromatic && a.element == 6) EXPECT_LE(a.hydrogens, 1);
  }
}

TEST(Smiles, WriteThenParseGivesTheSameLabeledGraph) {
  for (auto smi : fixtures::kDrugs) {
    const auto g = parse_smiles(smi);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      std::vector<std::size_t> order;
      const std::string written = write_smiles(g, seed, &order);
      const auto h = parse_smiles(written);
      ASSERT_EQ(h.atoms.size(), g.atoms.size()) << written;
      ASSERT_EQ(order.size(), g.atoms.size());
      // h atom k is g atom order[k].
      std::vector<std::size_t> g_to_h(g.atoms.size());
      for (std::size_t k = 0; k < order.size(); ++k) g_to_h[order[k]] = k;
      for (std::size_t k = 0; k < order.size(); ++k) {
        const Atom& x = g.atoms[order[k]];
        const Atom& y = h.atoms[k];
        EXPECT_EQ(x.element, y.element) << written;
        EXPECT_EQ(x.charge, y.charge) << written;
        EXPECT_EQ(x.aromatic, y.aromatic) << written;
        EXPECT_EQ(x.hydrogens, y.hydrogens) << written;
        EXPECT_EQ(g.atom_in_ring[order[k]], h.atom_in_ring[k]) << written;
      }
      std::vector<std::size_t> identity(h.atoms.size());
      for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
      EXPECT_EQ(bond_set(g, g_to_h), bond_set(h, identity)) << smi << " -> " << written;
    }
  }
}

TEST(Smiles, ElementTable) {
  EXPECT_EQ(element_number("C"), 6);
  EXPECT_EQ(element_number("Cl"), 17);
  EXPECT_EQ(element_number("Og"), 118);
  EXPECT_EQ(element_number("Xx"), 0);
  EXPECT_EQ(element_symbol(35), "Br");
}
