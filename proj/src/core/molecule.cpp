#include "core/molecule.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "core/error.hpp"

namespace deeppharm {

namespace {

constexpr std::array<std::string_view, 119> kElements{
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// Standard valences for the organic subset and for valence checks of
// bracket atoms. Empty means "no check".
std::vector<int> standard_valences(int element) {
  switch (element) {
    case 5: return {3};
    case 6: return {4};
    case 7: return {3, 5};
    case 8: return {2};
    case 15: return {3, 5};
    case 16: return {2, 4, 6};
    case 9:
    case 17:
    case 35:
    case 53: return {1};
    default: return {};
  }
}

bool in_organic_subset(int element) {
  switch (element) {
    case 5: case 6: case 7: case 8: case 9: case 15: case 16: case 17: case 35: case 53:
      return true;
    default:
      return false;
  }
}

bool aromatic_capable(int element) {
  switch (element) {
    case 5: case 6: case 7: case 8: case 15: case 16: case 33: case 34:
      return true;
    default:
      return false;
  }
}

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::kDouble: return 2;
    case BondOrder::kTriple: return 3;
    default: return 1;
  }
}

std::string position(std::size_t pos) { return " at position " + std::to_string(pos); }

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view s) : s_(s) {}

  MolecularGraph parse() {
    if (s_.empty()) fail(ErrorCode::kEmptyInput, "empty SMILES");
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (!prev_ || pending_) fail(ErrorCode::kSmilesSyntax, "misplaced '('" + position(pos_));
        branches_.push_back(*prev_);
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) fail(ErrorCode::kUnbalancedBranch, "unmatched ')'" + position(pos_));
        if (pending_) fail(ErrorCode::kSmilesSyntax, "dangling bond" + position(pos_));
        prev_ = branches_.back();
        branches_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
        if (pending_ || !prev_) fail(ErrorCode::kSmilesSyntax, "misplaced bond" + position(pos_));
        pending_ = c == '=' ? BondOrder::kDouble
                 : c == '#' ? BondOrder::kTriple
                 : c == ':' ? BondOrder::kAromatic
                            : BondOrder::kSingle;
        ++pos_;
      } else if (c == '.') {
        if (pending_ || !prev_) fail(ErrorCode::kSmilesSyntax, "misplaced '.'" + position(pos_));
        prev_.reset();
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        bracket_atom();
      } else {
        organic_atom();
      }
    }
    if (!branches_.empty()) fail(ErrorCode::kUnbalancedBranch, "unclosed '('");
    if (!rings_.empty()) {
      fail(ErrorCode::kUnmatchedRingClosure,
           "ring closure " + std::to_string(rings_.begin()->first) + " never closed");
    }
    if (pending_) fail(ErrorCode::kSmilesSyntax, "dangling bond at end of input");
    if (graph_.atoms.empty()) fail(ErrorCode::kEmptyInput, "SMILES contains no atoms");
    finish();
    return std::move(graph_);
  }

 private:
  struct OpenRing {
    std::size_t atom;
    std::optional<BondOrder> order;
  };

  void add_atom(Atom atom) {
    graph_.atoms.push_back(atom);
    const std::size_t idx = graph_.atoms.size() - 1;
    if (prev_) add_bond(*prev_, idx, pending_);
    pending_.reset();
    prev_ = idx;
  }

  void add_bond(std::size_t a, std::size_t b, std::optional<BondOrder> order) {
    if (a == b) fail(ErrorCode::kSmilesSyntax, "atom bonded to itself" + position(pos_));
    for (const auto& bond : graph_.bonds) {
      if ((bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a)) {
        fail(ErrorCode::kSmilesSyntax, "duplicate bond" + position(pos_));
      }
    }
    const bool both_aromatic = graph_.atoms[a].aromatic && graph_.atoms[b].aromatic;
    if (order == BondOrder::kAromatic && !both_aromatic) {
      fail(ErrorCode::kSmilesSyntax, "aromatic bond between non-aromatic atoms" + position(pos_));
    }
    if (!order) {
      implicit_.push_back(graph_.bonds.size());
      order = both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
    }
    graph_.bonds.push_back(Bond{a, b, *order});
  }

  void ring_closure() {
    if (!prev_) fail(ErrorCode::kSmilesSyntax, "ring closure without atom" + position(pos_));
    int number = 0;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
        fail(ErrorCode::kSmilesSyntax, "malformed %nn ring closure" + position(pos_));
      }
      number = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      number = s_[pos_] - '0';
      ++pos_;
    }
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing{*prev_, pending_});
    } else {
      std::optional<BondOrder> order = it->second.order;
      if (pending_) {
        if (order && *order != *pending_) {
          fail(ErrorCode::kSmilesSyntax, "conflicting ring closure bond" + position(pos_));
        }
        order = pending_;
      }
      add_bond(it->second.atom, *prev_, order);
      rings_.erase(it);
    }
    pending_.reset();
  }

  void organic_atom() {
    const std::size_t start = pos_;
    Atom atom;
    auto two = s_.substr(pos_, 2);
    if (two == "Cl" || two == "Br") {
      atom.element = two == "Cl" ? 17 : 35;
      pos_ += 2;
    } else {
      const char c = s_[pos_];
      switch (c) {
        case 'B': atom.element = 5; break;
        case 'C': atom.element = 6; break;
        case 'N': atom.element = 7; break;
        case 'O': atom.element = 8; break;
        case 'P': atom.element = 15; break;
        case 'S': atom.element = 16; break;
        case 'F': atom.element = 9; break;
        case 'I': atom.element = 53; break;
        case 'b': atom.element = 5; atom.aromatic = true; break;
        case 'c': atom.element = 6; atom.aromatic = true; break;
        case 'n': atom.element = 7; atom.aromatic = true; break;
        case 'o': atom.element = 8; atom.aromatic = true; break;
        case 'p': atom.element = 15; atom.aromatic = true; break;
        case 's': atom.element = 16; atom.aromatic = true; break;
        default:
          if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
            fail(ErrorCode::kUnknownElement,
                 "unsupported atom '" + std::string(1, c) + "'" + position(start));
          }
          fail(ErrorCode::kSmilesSyntax,
               "unexpected character '" + std::string(1, c) + "'" + position(start));
      }
      ++pos_;
    }
    add_atom(atom);
  }

  bool at(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  bool at_digit() const {
    return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
  }
  int read_number() {
    int v = 0;
    while (at_digit()) v = v * 10 + (s_[pos_++] - '0');
    return v;
  }

  void bracket_atom() {
    const std::size_t start = pos_++;
    Atom atom;
    atom.bracket = true;
    read_number();  // isotope, ignored
    if (pos_ >= s_.size()) fail(ErrorCode::kSmilesSyntax, "unterminated bracket atom" + position(start));
    const char c = s_[pos_];
    if (std::isupper(static_cast<unsigned char>(c))) {
      int element = 0;
      if (pos_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_ + 1]))) {
        element = element_number(s_.substr(pos_, 2));
        if (element != 0) pos_ += 2;
      }
      if (element == 0) {
        element = element_number(s_.substr(pos_, 1));
        if (element == 0) {
          fail(ErrorCode::kUnknownElement, "unknown element in bracket atom" + position(start));
        }
        ++pos_;
      }
      atom.element = element;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      auto two = s_.substr(pos_, 2);
      if (two == "se" || two == "as") {
        atom.element = two == "se" ? 34 : 33;
        pos_ += 2;
      } else {
        std::string upper(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        atom.element = element_number(upper);
        if (atom.element == 0 || !aromatic_capable(atom.element)) {
          fail(ErrorCode::kUnknownElement, "unknown aromatic element" + position(start));
        }
        ++pos_;
      }
      atom.aromatic = true;
    } else {
      fail(ErrorCode::kUnknownElement, "missing element in bracket atom" + position(start));
    }
    // Chirality, discarded.
    while (at('@')) ++pos_;
    if (pos_ + 1 < s_.size() && std::isupper(static_cast<unsigned char>(s_[pos_])) &&
        std::isupper(static_cast<unsigned char>(s_[pos_ + 1])) && s_[pos_] != 'H') {
      pos_ += 2;
      read_number();
    }
    if (at('H')) {
      ++pos_;
      atom.explicit_h = at_digit() ? read_number() : 1;
    } else {
      atom.explicit_h = 0;
    }
    if (at('+') || at('-')) {
      const int sign = s_[pos_] == '+' ? 1 : -1;
      const char sym = s_[pos_++];
      int magnitude = 1;
      if (at_digit()) {
        magnitude = read_number();
      } else {
        while (at(sym)) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.charge = sign * magnitude;
    }
    if (at(':')) {
      ++pos_;
      read_number();
    }
    if (!at(']')) fail(ErrorCode::kSmilesSyntax, "unterminated bracket atom" + position(start));
    ++pos_;
    add_atom(atom);
  }

  void finish() {
    perceive_rings(graph_);
    for (std::size_t b : implicit_) {
      if (graph_.bonds[b].order == BondOrder::kAromatic && !graph_.bond_in_ring[b]) {
        graph_.bonds[b].order = BondOrder::kSingle;
      }
    }
    std::vector<int> valence(graph_.atoms.size(), 0);
    for (const auto& bond : graph_.bonds) {
      valence[bond.begin] += bond_valence(bond.order);
      valence[bond.end] += bond_valence(bond.order);
    }
    for (std::size_t i = 0; i < graph_.atoms.size(); ++i) {
      assign_hydrogens(i, valence[i]);
    }
  }

  void valence_error(std::size_t i, int used) {
    fail(ErrorCode::kValenceViolation,
         "atom " + std::to_string(i) + " (" + std::string(element_symbol(graph_.atoms[i].element)) +
             ") has valence " + std::to_string(used));
  }

  void assign_hydrogens(std::size_t i, int used) {
    Atom& atom = graph_.atoms[i];
    const auto valences = standard_valences(atom.element);
    if (atom.bracket) {
      atom.hydrogens = atom.explicit_h.value_or(0);
      if (valences.empty()) return;
      const int group_adjust = (atom.element == 5 || atom.element == 6) ? -std::abs(atom.charge)
                                                                        : atom.charge;
      const int allowed = valences.back() + group_adjust;
      if (used + atom.hydrogens > allowed) valence_error(i, used + atom.hydrogens);
      return;
    }
    if (atom.aromatic) {
      switch (atom.element) {
        case 5:
        case 6: {
          // One valence unit goes to the delocalized pi bond.
          const int need = used + 1;
          if (need > valences.back()) {
            if (used > valences.back()) valence_error(i, used);
            atom.hydrogens = 0;
          } else {
            atom.hydrogens = valences.back() - need;
          }
          return;
        }
        default:
          // n, o, s, p: pyridine-type or two-electron donors; a pyrrole-type
          // N-H must be written as [nH].
          if (used > valences.back()) valence_error(i, used);
          atom.hydrogens = 0;
          return;
      }
    }
    for (int v : valences) {
      if (v >= used) {
        atom.hydrogens = v - used;
        return;
      }
    }
    valence_error(i, used);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolecularGraph graph_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_;
  std::vector<std::size_t> branches_;
  std::map<int, OpenRing> rings_;
  std::vector<std::size_t> implicit_;
};

}  // namespace

int element_number(std::string_view symbol) {
  for (std::size_t z = 1; z < kElements.size(); ++z) {
    if (kElements[z] == symbol) return static_cast<int>(z);
  }
  return 0;
}

std::string_view element_symbol(int number) {
  if (number <= 0 || number >= static_cast<int>(kElements.size())) return "?";
  return kElements[static_cast<std::size_t>(number)];
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> MolecularGraph::adjacency() const {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(atoms.size());
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    adj[bonds[b].begin].emplace_back(bonds[b].end, b);
    adj[bonds[b].end].emplace_back(bonds[b].begin, b);
  }
  return adj;
}

void perceive_rings(MolecularGraph& graph) {
  const std::size_t n = graph.atoms.size();
  const auto adj = graph.adjacency();
  graph.atom_in_ring.assign(n, false);
  graph.bond_in_ring.assign(graph.bonds.size(), true);

  // Iterative Tarjan bridge search.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> disc(n, kUnset), low(n, 0);
  std::size_t timer = 0;
  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != kUnset) continue;
    std::vector<Frame> stack{{root, kUnset, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.atom].size()) {
        auto [nbr, bond] = adj[f.atom][f.next++];
        if (bond == f.parent_bond) continue;
        if (disc[nbr] == kUnset) {
          disc[nbr] = low[nbr] = timer++;
          stack.push_back({nbr, bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nbr]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const std::size_t parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          if (low[done.atom] > disc[parent]) graph.bond_in_ring[done.parent_bond] = false;
        }
      }
    }
  }
  for (std::size_t b = 0; b < graph.bonds.size(); ++b) {
    if (graph.bond_in_ring[b]) {
      graph.atom_in_ring[graph.bonds[b].begin] = true;
      graph.atom_in_ring[graph.bonds[b].end] = true;
    }
  }
}

MolecularGraph parse_smiles(std::string_view smiles) { return SmilesParser(smiles).parse(); }

namespace {

std::string atom_token(const Atom& atom) {
  const bool organic = !atom.bracket && atom.charge == 0 && in_organic_subset(atom.element);
  std::string symbol(element_symbol(atom.element));
  if (atom.aromatic) {
    for (auto& ch : symbol) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (organic) return symbol;
  std::string token = "[" + symbol;
  if (atom.hydrogens > 0) {
    token += "H";
    if (atom.hydrogens > 1) token += std::to_string(atom.hydrogens);
  }
  if (atom.charge != 0) {
    token += atom.charge > 0 ? "+" : "-";
    if (std::abs(atom.charge) > 1) token += std::to_string(std::abs(atom.charge));
  }
  return token + "]";
}

std::string bond_token(const MolecularGraph& g, const Bond& bond) {
  switch (bond.order) {
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return "";
    case BondOrder::kSingle:
      return g.atoms[bond.begin].aromatic && g.atoms[bond.end].aromatic ? "-" : "";
  }
  return "";
}

std::string ring_label(int number) {
  return number < 10 ? std::to_string(number) : "%" + std::to_string(number);
}

}  // namespace

std::string write_smiles(const MolecularGraph& graph, std::optional<std::uint64_t> seed,
                         std::vector<std::size_t>* atom_order) {
  const std::size_t n = graph.atoms.size();
  auto adj = graph.adjacency();
  std::vector<std::size_t> starts(n);
  std::iota(starts.begin(), starts.end(), 0);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::shuffle(starts.begin(), starts.end(), rng);
    for (auto& list : adj) std::shuffle(list.begin(), list.end(), rng);
  }

  // Pass 1: DFS spanning forest. Non-tree bonds become ring closures that
  // open at the earlier-visited atom.
  std::vector<bool> visited(n, false), bond_used(graph.bonds.size(), false);
  std::vector<std::vector<std::size_t>> children_bonds(n);
  std::vector<std::vector<std::size_t>> ring_bonds(n);  // in emission order per atom
  std::vector<std::size_t> roots;
  std::function<void(std::size_t)> visit = [&](std::size_t a) {
    visited[a] = true;
    for (auto [nbr, bond] : adj[a]) {
      if (bond_used[bond]) continue;
      bond_used[bond] = true;
      if (visited[nbr]) {
        ring_bonds[nbr].push_back(bond);
        ring_bonds[a].push_back(bond);
      } else {
        children_bonds[a].push_back(bond);
        visit(nbr);
      }
    }
  };
  for (std::size_t s : starts) {
    if (!visited[s]) {
      roots.push_back(s);
      visit(s);
    }
  }

  // Pass 2: emit.
  std::string out;
  std::map<std::size_t, int> open_digit;  // bond -> ring label
  std::set<int> free_digits;
  for (int d = 1; d <= 99; ++d) free_digits.insert(d);
  if (atom_order) atom_order->clear();

  std::function<void(std::size_t)> emit = [&](std::size_t a) {
    if (atom_order) atom_order->push_back(a);
    out += atom_token(graph.atoms[a]);
    for (std::size_t bond : ring_bonds[a]) {
      auto it = open_digit.find(bond);
      if (it != open_digit.end()) {
        out += ring_label(it->second);
        free_digits.insert(it->second);
        open_digit.erase(it);
      } else {
        const int d = *free_digits.begin();
        free_digits.erase(free_digits.begin());
        open_digit.emplace(bond, d);
        out += bond_token(graph, graph.bonds[bond]) + ring_label(d);
      }
    }
    const auto& kids = children_bonds[a];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const Bond& bond = graph.bonds[kids[k]];
      const std::size_t child = bond.begin == a ? bond.end : bond.begin;
      const bool last = k + 1 == kids.size();
      if (!last) out += "(";
      out += bond_token(graph, bond);
      emit(child);
      if (!last) out += ")";
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += ".";
    emit(roots[r]);
  }
  return out;
}

}  // namespace deeppharm
