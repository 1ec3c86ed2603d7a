#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/molecule.hpp"

namespace deeppharm {

inline constexpr int kDefaultEcfpRadius = 2;
inline constexpr std::size_t kDefaultEcfpBits = 1024;

// Fixed-length binary fingerprint.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(std::size_t nbits) : bits_(nbits, 0) {}

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i);
  std::size_t set_count() const { return set_count_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  // True when every set bit of *this is also set in `other`.
  bool subset_of(const Fingerprint& other) const;

  std::string to_string() const;  // '0'/'1' characters
  static Fingerprint from_string(std::string_view bits);

  bool operator==(const Fingerprint&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t set_count_ = 0;
};

// One surviving circular environment: the atom it is centred on, its
// radius and its 32-bit identifier.
struct EcfpEnvironment {
  std::size_t center = 0;
  int radius = 0;
  std::uint32_t id = 0;
};

// 32-bit FNV-1a over a sequence of big-endian 32-bit words.
std::uint32_t fnv1a_words(std::span<const std::uint32_t> words);

std::vector<EcfpEnvironment> ecfp_environments(const MolecularGraph& graph, int radius);

Fingerprint compute_ecfp(const MolecularGraph& graph, int radius = kDefaultEcfpRadius,
                         std::size_t nbits = kDefaultEcfpBits);

Fingerprint ecfp_from_smiles(std::string_view smiles, int radius = kDefaultEcfpRadius,
                             std::size_t nbits = kDefaultEcfpBits);

}  // namespace deeppharm
