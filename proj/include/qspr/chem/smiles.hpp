#pragma once

#include <string>
#include <string_view>

#include "qspr/chem/molecule.hpp"

namespace qspr::chem {

/// Parses the organic subset, bracket atoms, aromatic lowercase, ring closures
/// (including %nn), branches, dot-disconnected components and stereo markers.
/// Reaction SMILES and wildcard atoms are rejected. Errors carry the character
/// offset of the failure.
Molecule parse_smiles(std::string_view text);

/// Canonical, stereo-free serialization. Graphs that are isomorphic (up to
/// atom order) produce identical strings; components are sorted.
std::string write_smiles(const Molecule& m);

}  // namespace qspr::chem
