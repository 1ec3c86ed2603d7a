#include "core/fingerprint.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "core/error.hpp"

namespace deeppharm {

void Fingerprint::set(std::size_t i) {
  if (bits_[i] == 0) {
    bits_[i] = 1;
    ++set_count_;
  }
}

bool Fingerprint::subset_of(const Fingerprint& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

std::string Fingerprint::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

Fingerprint Fingerprint::from_string(std::string_view bits) {
  if (bits.empty()) fail(ErrorCode::kBadWidth, "empty fingerprint string");
  Fingerprint fp(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      fp.set(i);
    } else if (bits[i] != '0') {
      fail(ErrorCode::kInvalidArgument, "fingerprint string must contain only 0/1");
    }
  }
  return fp;
}

std::uint32_t fnv1a_words(std::span<const std::uint32_t> words) {
  std::uint32_t hash = 2166136261u;
  for (std::uint32_t w : words) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      hash ^= (w >> shift) & 0xffu;
      hash *= 16777619u;
    }
  }
  return hash;
}

namespace {

using AtomSet = std::vector<std::uint64_t>;

void set_bit(AtomSet& s, std::size_t i) { s[i / 64] |= std::uint64_t{1} << (i % 64); }

std::uint32_t word(int v) { return static_cast<std::uint32_t>(v); }

}  // namespace

std::vector<EcfpEnvironment> ecfp_environments(const MolecularGraph& graph, int radius) {
  if (radius < 0) fail(ErrorCode::kBadRadius, "radius must be non-negative");
  const std::size_t n = graph.atom_count();
  const auto adj = graph.adjacency();
  std::vector<bool> atom_in_ring = graph.atom_in_ring;
  if (atom_in_ring.size() != n) {
    MolecularGraph copy = graph;
    perceive_rings(copy);
    atom_in_ring = copy.atom_in_ring;
  }

  std::vector<std::uint32_t> ids(n);
  for (std::size_t a = 0; a < n; ++a) {
    const Atom& atom = graph.atoms[a];
    int heavy_degree = 0;
    int total_h = atom.hydrogens;
    for (auto [nbr, bond] : adj[a]) {
      if (graph.atoms[nbr].element == 1) {
        ++total_h;
      } else {
        ++heavy_degree;
      }
    }
    const std::uint32_t invariant[] = {word(atom.element), word(heavy_degree), word(total_h),
                                       word(atom.charge),  word(atom_in_ring[a] ? 1 : 0),
                                       word(atom.aromatic ? 1 : 0)};
    ids[a] = fnv1a_words(invariant);
  }

  const std::size_t nwords = (n + 63) / 64;
  std::vector<AtomSet> cover(n, AtomSet(nwords, 0));
  for (std::size_t a = 0; a < n; ++a) set_bit(cover[a], a);

  std::vector<EcfpEnvironment> out;
  std::set<AtomSet> seen;
  auto collect = [&](int r) {
    // Same atom set at the same radius from several centres: keep the
    // smallest identifier so the choice does not depend on atom order.
    std::vector<std::tuple<AtomSet, std::uint32_t, std::size_t>> candidates;
    candidates.reserve(n);
    for (std::size_t a = 0; a < n; ++a) candidates.emplace_back(cover[a], ids[a], a);
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [set, id, center] : candidates) {
      if (seen.insert(set).second) out.push_back({center, r, id});
    }
  };
  collect(0);

  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint32_t> next(n);
    std::vector<AtomSet> next_cover = cover;
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> nbrs;
      for (auto [nbr, bond] : adj[a]) {
        nbrs.emplace_back(static_cast<std::uint32_t>(graph.bonds[bond].order), ids[nbr]);
        for (std::size_t w = 0; w < nwords; ++w) next_cover[a][w] |= cover[nbr][w];
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::vector<std::uint32_t> words{word(r), ids[a]};
      for (auto [code, id] : nbrs) {
        words.push_back(code);
        words.push_back(id);
      }
      next[a] = fnv1a_words(words);
    }
    ids = std::move(next);
    cover = std::move(next_cover);
    collect(r);
  }
  return out;
}

Fingerprint compute_ecfp(const MolecularGraph& graph, int radius, std::size_t nbits) {
  if (radius < 0) fail(ErrorCode::kBadRadius, "radius must be non-negative");
  if (nbits < 64 || (nbits & (nbits - 1)) != 0) {
    fail(ErrorCode::kBadWidth, "fingerprint width must be a power of two >= 64");
  }
  Fingerprint fp(nbits);
  for (const auto& env : ecfp_environments(graph, radius)) fp.set(env.id % nbits);
  return fp;
}

Fingerprint ecfp_from_smiles(std::string_view smiles, int radius, std::size_t nbits) {
  return compute_ecfp(parse_smiles(smiles), radius, nbits);
}

}  // namespace deeppharm
