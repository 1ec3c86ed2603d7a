#pragma once

#include <array>
#include <string_view>

namespace fixtures {

// Drug-like molecules covering rings, fused rings, heteroaromatics, charges
// and halogens.
inline constexpr std::array<std::string_view, 10> kDrugs{
    "CC(=O)Oc1ccccc1C(=O)O",                  // aspirin
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C",             // caffeine
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",             // ibuprofen
    "CC(=O)Nc1ccc(O)cc1",                     // paracetamol
    "CN1CCCC1c1cccnc1",                       // nicotine
    "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc12",    // diazepam
    "Cc1cc(NS(=O)(=O)c2ccc(N)cc2)no1",        // sulfamethoxazole
    "CC(C)NCC(O)COc1cccc2ccccc12",            // propranolol
    "CN(C)CCCN1c2ccccc2Sc2ccc(Cl)cc21",       // chlorpromazine
    "[NH3+]CC(=O)[O-]",                       // glycine zwitterion
};

}  // namespace fixtures
