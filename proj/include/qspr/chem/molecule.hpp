#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qspr::chem {

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

// Directional single-bond markers ('/' and '\') and tetrahedral tags ('@', '@@').
enum class BondStereo : std::uint8_t { None, Up, Down };
enum class Chirality : std::uint8_t { None, CounterClockwise, Clockwise };

struct Atom {
  int atomic_number = 6;
  int formal_charge = 0;
  std::optional<int> isotope;
  bool aromatic = false;
  // Bracket atoms carry an explicit hydrogen count; organic-subset atoms get implicit H.
  bool bracket = false;
  int explicit_h = 0;
  Chirality chirality = Chirality::None;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  BondStereo stereo = BondStereo::None;

  int other(int atom) const noexcept { return atom == begin ? end : begin; }
};

/// Molecular graph. Immutable in spirit: transformations return new values.
class Molecule {
 public:
  Molecule() = default;
  Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds);

  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::span<const Bond> bonds() const noexcept { return bonds_; }
  std::size_t atom_count() const noexcept { return atoms_.size(); }
  std::size_t bond_count() const noexcept { return bonds_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  const Atom& atom(int i) const { return atoms_.at(static_cast<std::size_t>(i)); }
  const Bond& bond(int i) const { return bonds_.at(static_cast<std::size_t>(i)); }

  /// Bond indices incident to atom i.
  std::span<const int> incident(int i) const { return adjacency_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(incident(i).size()); }
  std::optional<int> bond_between(int a, int b) const;

  /// Implicit hydrogens for organic-subset atoms, zero for bracket atoms.
  int implicit_h(int i) const;
  int total_h(int i) const;

  /// Connected components as sorted atom index lists, ordered by smallest member.
  std::vector<std::vector<int>> components() const;
  /// Induced subgraph over `atoms` (kept in the given order).
  Molecule subgraph(std::span<const int> atoms) const;
  /// Relabel: new atom k is old atom order[k].
  Molecule permuted(std::span<const int> order) const;

  /// Per-bond flag: bond lies on at least one cycle.
  std::vector<bool> ring_bonds() const;
  std::vector<bool> ring_atoms() const;

  int heavy_atom_count() const;
  double molecular_weight() const;
  int net_charge() const;

  // Mutable access for the transformation passes in this module.
  std::vector<Atom>& mutable_atoms() noexcept { return atoms_; }

 private:
  void rebuild_adjacency();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> adjacency_;
};

/// Element table lookups. Symbols are case-sensitive ("Cl", "Na").
std::optional<int> element_from_symbol(std::string_view symbol);
std::string_view element_symbol(int atomic_number);
double atomic_weight(int atomic_number);

/// Sum of bond orders as seen by the valence model (aromatic counts 1).
int explicit_valence(const Molecule& m, int atom);

/// Hydrogens an organic-subset atom would receive in this bonding context,
/// whether or not the atom is currently a bracket atom. Zero outside the subset.
int default_implicit_h(const Molecule& m, int atom);

/// True for B, C, N, O, P, S and the halogens F, Cl, Br, I.
bool in_organic_subset(int atomic_number);

}  // namespace qspr::chem
