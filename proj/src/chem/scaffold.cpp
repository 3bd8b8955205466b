#include "qspr/chem/scaffold.hpp"

#include <algorithm>

#include "qspr/error.hpp"

namespace qspr::chem {

namespace {

Molecule genericize(const Molecule& m) {
  std::vector<Atom> atoms(m.atom_count());
  std::vector<Bond> bonds;
  bonds.reserve(m.bond_count());
  for (const Bond& b : m.bonds()) bonds.push_back({b.begin, b.end, BondOrder::Single, BondStereo::None});
  return Molecule(std::move(atoms), std::move(bonds));
}

void require_ring(const Molecule& m, const std::vector<bool>& ring) {
  if (std::none_of(ring.begin(), ring.end(), [](bool r) { return r; })) {
    throw Error(ErrorKind::Acyclic, "molecule has no ring");
  }
  (void)m;
}

}  // namespace

Molecule generic_murcko_scaffold(const Molecule& m) {
  const auto ring = m.ring_atoms();
  require_ring(m, ring);
  const int n = static_cast<int>(m.atom_count());
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<int> degree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) degree[static_cast<std::size_t>(i)] = m.degree(i);

  // Peel terminal non-ring atoms until only rings and ring-to-ring linkers remain.
  std::vector<int> queue;
  for (int i = 0; i < n; ++i) {
    if (!ring[static_cast<std::size_t>(i)] && degree[static_cast<std::size_t>(i)] <= 1) queue.push_back(i);
  }
  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    if (!alive[static_cast<std::size_t>(v)]) continue;
    alive[static_cast<std::size_t>(v)] = false;
    for (int k : m.incident(v)) {
      const int w = m.bond(k).other(v);
      if (!alive[static_cast<std::size_t>(w)]) continue;
      if (--degree[static_cast<std::size_t>(w)] <= 1 && !ring[static_cast<std::size_t>(w)]) queue.push_back(w);
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (alive[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  return genericize(m.subgraph(keep));
}

Molecule generic_graph(const Molecule& m) {
  require_ring(m, m.ring_atoms());
  std::vector<int> heavy;
  for (int i = 0; i < static_cast<int>(m.atom_count()); ++i) {
    if (m.atom(i).atomic_number > 1) heavy.push_back(i);
  }
  return genericize(m.subgraph(heavy));
}

}  // namespace qspr::chem
