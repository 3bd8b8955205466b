#pragma once

#include "qspr/chem/molecule.hpp"

namespace qspr::chem {

/// Ring systems plus the linkers between them (side chains pruned), then every
/// atom mapped to carbon, every bond to single order, charges to zero.
/// Throws Acyclic for molecules without a ring.
Molecule generic_murcko_scaffold(const Molecule& m);

/// Genericizes the whole graph without pruning side chains. Throws Acyclic
/// for molecules without a ring.
Molecule generic_graph(const Molecule& m);

}  // namespace qspr::chem
