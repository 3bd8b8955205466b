#pragma once

// SMILES used across the chem tests: a fixed list of marketed drugs (several as
// salts) and a seeded grammar-level generator of random valid SMILES strings.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "qspr/random.hpp"

namespace qspr::testing {

inline const std::vector<std::string>& drug_smiles() {
  static const std::vector<std::string> kDrugs{
      "CC(=O)Oc1ccccc1C(=O)O",                                   // aspirin
      "Cn1cnc2c1c(=O)n(C)c(=O)n2C",                              // caffeine
      "CC(C)Cc1ccc(cc1)[C@@H](C)C(=O)O",                         // ibuprofen
      "CC(C)NCC(O)COc1cccc2ccccc12.Cl",                          // propranolol HCl
      "O=C([O-])Cc1ccccc1Nc1c(Cl)cccc1Cl.[Na+]",                 // diclofenac sodium
      "CN1CCC[C@H]1c1cccnc1",                                    // nicotine
      "CC(=O)Nc1ccc(O)cc1",                                      // paracetamol
      "COc1ccc2[nH]cc(CCNC(C)=O)c2c1",                           // melatonin
      "CN(C)CCCN1c2ccccc2CCc2ccccc21",                           // imipramine
      "Clc1ccc(cc1)C(c1ccccc1)N1CCN(CC1)CCOCC(=O)O",             // cetirizine
      "CCN(CC)CC(=O)Nc1c(C)cccc1C",                              // lidocaine
      "C[C@]12CC[C@H]3[C@@H](CCC4=CC(=O)CC[C@@]34C)[C@@H]1CC[C@@H]2O",  // testosterone
      "OC(=O)CCC(=O)O.CN1CCC(CC1)=C1c2ccccc2C=Cc2ccccc12",       // cyproheptadine succinate-like
      "CCOC(=O)C1=C(COCCN)NC(C)=C(C1c1ccccc1Cl)C(=O)OC",         // amlodipine
      "CS(=O)(=O)O.COc1cc2c(cc1OC)C(=O)C(CC1CCN(Cc3ccccc3)CC1)C2",  // donepezil mesylate
      "O=C(O)c1cn(C2CC2)c2cc(N3CCNCC3)c(F)cc2c1=O",              // ciprofloxacin
      "CCn1cc(C(=O)O)c(=O)c2cc(F)c(N3CCNCC3)cc21",               // norfloxacin
      "CCn1cc(C(=O)O)c(=O)c2cc(F)c(N3CCNCC3)nc21",               // enoxacin
      "C[N+](C)(C)CC(=O)[O-]",                                   // betaine
      "[O-][N+](=O)c1ccc(cc1)O",                                 // 4-nitrophenol
      "NC(=O)c1cccnc1",                                          // nicotinamide
      "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",                  // glucose
      "C/C=C/C(=O)O",                                            // crotonic acid
      "c1ccc2c(c1)ccc1ccccc12",                                  // phenanthrene
      "C1CC2CCC1C2",                                             // norbornane
      "[NH3+]CCc1ccc(O)c(O)c1.[Cl-]",                            // dopamine HCl
      "O=C1NC(=O)C(N1)(c1ccccc1)c1ccccc1",                       // phenytoin
      "CC12CCC3C(CCC4=CC(=O)C=CC34C)C1CCC2(O)C(=O)CO",           // prednisone-like
      "Oc1ccc(cc1)C1(c2ccccc2)CCCC1",                            // ring on ring
      "c1ccc(cc1)-c1ccccc1",                                     // biphenyl
  };
  return kDrugs;
}

/// Random SMILES from a small grammar of chain units, ring fragments, stereo
/// markers and optional counter-ions. Every string is valid by construction.
class SmilesGenerator {
 public:
  explicit SmilesGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    std::string s = terminal() + chain(0) + terminal();
    const double r = rng_.uniform();
    if (r < 0.25) {
      s += ".";
      s += pick(kCounterIons);
    } else if (r < 0.30) {
      s = pick(kCounterIons) + "." + s;
    }
    return s;
  }

 private:
  static constexpr std::array<std::string_view, 16> kInternal{
      "C", "CC", "N", "O", "C(=O)", "C(C)", "c1ccc(cc1)", "C1CCC(CC1)", "N1CCN(CC1)",
      "C(F)(F)", "S(=O)(=O)", "C(=O)N", "c1ccc(nc1)", "[C@@H](C)", "[C@H](O)", "C/C=C/"};
  static constexpr std::array<std::string_view, 14> kTerminal{
      "C", "F", "Cl", "O", "N", "c1ccccc1", "C(=O)O", "C(=O)[O-]", "[NH3+]", "C#N", "OC", "Br",
      "c1ccncc1", "C1CC1"};
  static constexpr std::array<std::string_view, 8> kCounterIons{
      "[Na+]", "Cl", "[Cl-]", "O", "CS(=O)(=O)O", "O=C(O)C=CC(=O)O", "[K+]", "Br"};

  template <std::size_t N>
  std::string pick(const std::array<std::string_view, N>& a) {
    return std::string(a[static_cast<std::size_t>(rng_.index(N))]);
  }

  std::string terminal() { return pick(kTerminal); }

  std::string chain(int depth) {
    std::string s;
    const int len = 1 + static_cast<int>(rng_.index(depth == 0 ? 6 : 3));
    for (int i = 0; i < len; ++i) {
      if (depth < 2 && rng_.uniform() < 0.2) {
        s += "C(" + chain(depth + 1) + terminal() + ")";
      } else {
        s += pick(kInternal);
      }
    }
    return s;
  }

  Rng rng_;
};

}  // namespace qspr::testing
