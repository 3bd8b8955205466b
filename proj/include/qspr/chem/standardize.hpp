#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "qspr/chem/molecule.hpp"

namespace qspr::chem {

/// Counter-ion / solvent fragments stripped during desalting.
///
/// Entries are stored in this tool's canonical form of the neutral fragment.
/// Single-atom entries ("Na", "Cl", "O", ...) match any single-atom component of
/// that element regardless of charge or hydrogen count.
class SaltList {
 public:
  /// One SMILES per line; blank lines and lines starting with '#' are skipped.
  /// Bare element symbols outside the organic subset ("Na", "Zn") are accepted.
  static SaltList from_lines(const std::vector<std::string>& lines);
  static SaltList load(const std::filesystem::path& path);
  /// The bundled counter-ion list.
  static SaltList builtin();

  bool matches(const Molecule& component) const;
  std::size_t size() const noexcept { return source_.size(); }
  const std::vector<std::string>& source_smiles() const noexcept { return source_; }
  const std::set<std::string>& canonical_entries() const noexcept { return canonical_; }

 private:
  std::vector<std::string> source_;
  std::set<std::string> canonical_;
  std::set<int> single_atoms_;
};

/// Salt SMILES exactly as published, in publication order.
const std::vector<std::string>& builtin_salt_smiles();

/// Valence/aromaticity sanitation: folds explicit [H] atoms into their
/// neighbour, disconnects alkali/alkaline-earth/zinc metals from heteroatoms,
/// charge-separates pentavalent nitro/N-oxide nitrogens, and clears aromatic
/// flags from acyclic atoms.
Molecule cleanup(const Molecule& m);

Molecule remove_stereo(const Molecule& m);

/// Removes H+ from positive atoms carrying hydrogens and protonates negative
/// O/N/S, leaving as many anions as there are quaternary (hydrogen-free)
/// cations so zwitterionic salts stay balanced.
Molecule uncharge(const Molecule& m);

/// Most heavy atoms, then larger molecular weight, then smallest canonical SMILES.
std::size_t most_significant_fragment(const std::vector<Molecule>& fragments);

/// Cleanup, salt stripping, fragment choice, stereo removal, neutralization, cleanup.
///
/// When every component matches the salt list nothing is stripped and the most
/// significant fragment is kept, so the operation is idempotent. Throws
/// EmptyAfterDesalt only for an input without atoms.
Molecule desalt(const Molecule& m, const SaltList& salts);

/// Neutral, stereo-free canonical key used for salt matching.
std::string salt_key(const Molecule& component);

}  // namespace qspr::chem
