#pragma once

// Backtracking graph isomorphism, independent of the canonical writer. Atoms
// must agree on element, charge, aromaticity and total hydrogens; bonds on order.

#include <vector>

#include "qspr/chem/molecule.hpp"

namespace qspr::testing {

inline bool isomorphic(const chem::Molecule& a, const chem::Molecule& b) {
  const int n = static_cast<int>(a.atom_count());
  if (b.atom_count() != a.atom_count() || b.bond_count() != a.bond_count()) return false;
  auto same_atom = [&](int i, int j) {
    const auto& x = a.atom(i);
    const auto& y = b.atom(j);
    return x.atomic_number == y.atomic_number && x.formal_charge == y.formal_charge &&
           x.aromatic == y.aromatic && a.total_h(i) == b.total_h(j) && a.degree(i) == b.degree(j);
  };
  std::vector<int> map(n, -1), used(n, 0);
  auto consistent = [&](int i, int j) {
    for (int bi : a.incident(i)) {
      const int nb = a.bond(bi).other(i);
      if (map[nb] < 0) continue;
      const auto bj = b.bond_between(j, map[nb]);
      if (!bj || b.bond(*bj).order != a.bond(bi).order) return false;
    }
    return true;
  };
  auto rec = [&](auto&& self, int i) -> bool {
    if (i == n) return true;
    for (int j = 0; j < n; ++j) {
      if (used[j] || !same_atom(i, j) || !consistent(i, j)) continue;
      map[i] = j;
      used[j] = 1;
      if (self(self, i + 1)) return true;
      map[i] = -1;
      used[j] = 0;
    }
    return false;
  };
  return rec(rec, 0);
}

}  // namespace qspr::testing
