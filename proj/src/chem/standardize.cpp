#include "qspr/chem/standardize.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "qspr/chem/smiles.hpp"
#include "qspr/error.hpp"

namespace qspr::chem {

namespace {

std::vector<Atom> copy_atoms(const Molecule& m) { return {m.atoms().begin(), m.atoms().end()}; }
std::vector<Bond> copy_bonds(const Molecule& m) { return {m.bonds().begin(), m.bonds().end()}; }

// Freeze the hydrogen count so later bond edits do not change it implicitly.
void pin_hydrogens(const Molecule& m, std::vector<Atom>& atoms, int i) {
  Atom& a = atoms[static_cast<std::size_t>(i)];
  if (!a.bracket) {
    a.explicit_h = m.total_h(i);
    a.bracket = true;
  }
}

bool is_disconnectable_metal(int z) {
  switch (z) {
    case 3: case 4: case 11: case 12: case 13: case 19: case 20: case 30: case 37: case 38: case 55: case 56:
      return true;
    default:
      return false;
  }
}

bool is_metal_partner(int z) {
  switch (z) {
    case 7: case 8: case 9: case 15: case 16: case 17: case 34: case 35: case 53:
      return true;
    default:
      return false;
  }
}

Molecule fold_explicit_hydrogens(const Molecule& m) {
  const int n = static_cast<int>(m.atom_count());
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  std::vector<int> extra_h(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    if (a.atomic_number != 1 || a.isotope || a.formal_charge != 0 || m.degree(i) != 1) continue;
    const Bond& b = m.bond(m.incident(i)[0]);
    const int nb = b.other(i);
    if (m.atom(nb).atomic_number == 1 || b.order != BondOrder::Single) continue;
    drop[static_cast<std::size_t>(i)] = true;
    ++extra_h[static_cast<std::size_t>(nb)];
  }
  if (std::none_of(drop.begin(), drop.end(), [](bool d) { return d; })) return m;
  std::vector<Atom> atoms = copy_atoms(m);
  for (int i = 0; i < n; ++i) {
    if (extra_h[static_cast<std::size_t>(i)] == 0) continue;
    pin_hydrogens(m, atoms, i);
    // The neighbour's own implicit count was computed with the H atom bonded.
    atoms[static_cast<std::size_t>(i)].explicit_h += extra_h[static_cast<std::size_t>(i)];
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  }
  Molecule tmp(std::move(atoms), copy_bonds(m));
  return tmp.subgraph(keep);
}

Molecule disconnect_metals(const Molecule& m) {
  std::vector<Atom> atoms = copy_atoms(m);
  std::vector<Bond> bonds;
  bool changed = false;
  for (const Bond& b : m.bonds()) {
    int metal = -1, partner = -1;
    if (is_disconnectable_metal(m.atom(b.begin).atomic_number) && is_metal_partner(m.atom(b.end).atomic_number)) {
      metal = b.begin;
      partner = b.end;
    } else if (is_disconnectable_metal(m.atom(b.end).atomic_number) &&
               is_metal_partner(m.atom(b.begin).atomic_number)) {
      metal = b.end;
      partner = b.begin;
    }
    if (metal < 0 || b.order == BondOrder::Aromatic) {
      bonds.push_back(b);
      continue;
    }
    changed = true;
    const int k = static_cast<int>(b.order);
    pin_hydrogens(m, atoms, metal);
    pin_hydrogens(m, atoms, partner);
    atoms[static_cast<std::size_t>(metal)].formal_charge += k;
    atoms[static_cast<std::size_t>(partner)].formal_charge -= k;
  }
  if (!changed) return m;
  return Molecule(std::move(atoms), std::move(bonds));
}

Molecule charge_separate_nitrogen(const Molecule& m) {
  std::vector<Atom> atoms = copy_atoms(m);
  std::vector<Bond> bonds = copy_bonds(m);
  bool changed = false;
  for (int i = 0; i < static_cast<int>(m.atom_count()); ++i) {
    const Atom& a = m.atom(i);
    if (a.atomic_number != 7 || a.formal_charge != 0 || a.aromatic) continue;
    if (explicit_valence(m, i) + m.total_h(i) != 5) continue;
    for (int k : m.incident(i)) {
      const Bond& b = m.bond(k);
      const int o = b.other(i);
      const Atom& oa = m.atom(o);
      if (b.order == BondOrder::Double && oa.atomic_number == 8 && oa.formal_charge == 0 && m.degree(o) == 1) {
        pin_hydrogens(m, atoms, i);
        pin_hydrogens(m, atoms, o);
        atoms[static_cast<std::size_t>(i)].formal_charge = 1;
        atoms[static_cast<std::size_t>(o)].formal_charge = -1;
        bonds[static_cast<std::size_t>(k)].order = BondOrder::Single;
        changed = true;
        break;
      }
    }
  }
  if (!changed) return m;
  return Molecule(std::move(atoms), std::move(bonds));
}

Molecule clear_acyclic_aromatic(const Molecule& m) {
  const auto ring = m.ring_atoms();
  std::vector<Atom> atoms = copy_atoms(m);
  std::vector<Bond> bonds = copy_bonds(m);
  bool changed = false;
  for (int i = 0; i < static_cast<int>(m.atom_count()); ++i) {
    if (!m.atom(i).aromatic || ring[static_cast<std::size_t>(i)]) continue;
    pin_hydrogens(m, atoms, i);
    atoms[static_cast<std::size_t>(i)].aromatic = false;
    changed = true;
    for (int k : m.incident(i)) {
      if (bonds[static_cast<std::size_t>(k)].order == BondOrder::Aromatic) {
        bonds[static_cast<std::size_t>(k)].order = BondOrder::Single;
      }
    }
  }
  if (!changed) return m;
  return Molecule(std::move(atoms), std::move(bonds));
}

bool is_bare_element(const std::string& s) {
  if (s.empty() || s.size() > 2 || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
  if (s.size() == 2 && !std::islower(static_cast<unsigned char>(s[1]))) return false;
  return element_from_symbol(s).has_value();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& builtin_salt_smiles() {
  static const std::vector<std::string> kSalts{
      "Na", "Ca", "Cl", "Br", "O", "Zn", "K", "I", "F", "N", "Li", "Mg",
      "O=S(=O)(O)O", "O=C(O)C(=O)O", "CS(=O)(=O)O", "O=P(=O)OO", "O=P(O)(O)O",
      "O=C(O)C=CC(=O)O", "O=C(O)CC(O)(CC(=O)O)C(=O)O",
      "O=C(O)C(O)C(O)C(=O)O", "CC(C)(C)N", "NC(N)=NCCCC(N)C(=O)O", "CCO",
      "O=S(=O)(O)CCO", "NC(CO)(CO)CO", "O=S(=O)(O)c1ccccc1", "CC(=O)O",
      "Cc1ccc(S(=O)(=O)O)cc1", "O=C(O)O", "O=C(O)CCC(=O)O", "O=C(O)c1ccccc1",
      "O=CO", "O=C(O)CC(O)C(=O)O", "CCN(CC)CC", "CCNCC", "CC(C)C(=O)O",
      "NC1CCCCC1", "CCC(=O)O",
  };
  return kSalts;
}

Molecule cleanup(const Molecule& m) {
  Molecule out = fold_explicit_hydrogens(m);
  out = disconnect_metals(out);
  out = charge_separate_nitrogen(out);
  out = clear_acyclic_aromatic(out);
  return out;
}

Molecule remove_stereo(const Molecule& m) {
  std::vector<Atom> atoms = copy_atoms(m);
  std::vector<Bond> bonds = copy_bonds(m);
  for (auto& a : atoms) a.chirality = Chirality::None;
  for (auto& b : bonds) b.stereo = BondStereo::None;
  return Molecule(std::move(atoms), std::move(bonds));
}

Molecule uncharge(const Molecule& m) {
  const int n = static_cast<int>(m.atom_count());
  std::vector<Atom> atoms = copy_atoms(m);
  bool changed = false;

  for (int i = 0; i < n; ++i) {
    Atom& a = atoms[static_cast<std::size_t>(i)];
    int h = m.total_h(i);
    if (a.formal_charge <= 0 || h == 0) continue;
    pin_hydrogens(m, atoms, i);
    while (a.formal_charge > 0 && h > 0) {
      --a.formal_charge;
      --h;
    }
    a.explicit_h = h;
    changed = true;
  }

  int fixed_positive = 0;
  for (const Atom& a : atoms) fixed_positive += std::max(a.formal_charge, 0);

  struct Candidate {
    bool next_to_cation;
    int index;
  };
  std::vector<Candidate> anions;
  int negative_units = 0;
  for (int i = 0; i < n; ++i) {
    const Atom& a = atoms[static_cast<std::size_t>(i)];
    if (a.formal_charge >= 0) continue;
    if (a.atomic_number != 7 && a.atomic_number != 8 && a.atomic_number != 16) continue;
    bool near = false;
    for (int k : m.incident(i)) {
      if (atoms[static_cast<std::size_t>(m.bond(k).other(i))].formal_charge > 0) near = true;
    }
    anions.push_back({near, i});
    negative_units += -a.formal_charge;
  }
  std::sort(anions.begin(), anions.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.next_to_cation, x.index) < std::tie(y.next_to_cation, y.index);
  });
  int budget = negative_units - fixed_positive;
  for (const Candidate& c : anions) {
    if (budget <= 0) break;
    Atom& a = atoms[static_cast<std::size_t>(c.index)];
    const int h = m.total_h(c.index);
    a.bracket = true;
    a.explicit_h = h;
    while (a.formal_charge < 0 && budget > 0) {
      ++a.formal_charge;
      ++a.explicit_h;
      --budget;
    }
    changed = true;
  }
  if (!changed) return m;
  return Molecule(std::move(atoms), copy_bonds(m));
}

std::string salt_key(const Molecule& component) {
  return write_smiles(uncharge(remove_stereo(cleanup(component))));
}

SaltList SaltList::from_lines(const std::vector<std::string>& lines) {
  SaltList list;
  for (const auto& raw : lines) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    // Published entries may be unquoted or quoted.
    if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = line.substr(1, line.size() - 2);
    list.source_.push_back(line);
    const std::string smiles = is_bare_element(line) && !in_organic_subset(*element_from_symbol(line))
                                   ? "[" + line + "]"
                                   : line;
    const Molecule mol = parse_smiles(smiles);
    if (mol.atom_count() == 1) {
      list.single_atoms_.insert(mol.atom(0).atomic_number);
    }
    list.canonical_.insert(salt_key(mol));
  }
  if (list.source_.empty()) throw Error(ErrorKind::InvalidArgument, "salt list is empty");
  return list;
}

SaltList SaltList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open salt list " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return from_lines(lines);
}

SaltList SaltList::builtin() { return from_lines(builtin_salt_smiles()); }

bool SaltList::matches(const Molecule& component) const {
  if (component.atom_count() == 1) return single_atoms_.count(component.atom(0).atomic_number) > 0;
  return canonical_.count(salt_key(component)) > 0;
}

std::size_t most_significant_fragment(const std::vector<Molecule>& fragments) {
  if (fragments.empty()) throw Error(ErrorKind::EmptyInput, "no fragments");
  std::size_t best = 0;
  std::string best_smiles = write_smiles(fragments[0]);
  for (std::size_t k = 1; k < fragments.size(); ++k) {
    const Molecule& f = fragments[k];
    const Molecule& b = fragments[best];
    const int ha = f.heavy_atom_count(), hb = b.heavy_atom_count();
    if (ha != hb) {
      if (ha > hb) {
        best = k;
        best_smiles = write_smiles(f);
      }
      continue;
    }
    const double wa = f.molecular_weight(), wb = b.molecular_weight();
    if (wa != wb) {
      if (wa > wb) {
        best = k;
        best_smiles = write_smiles(f);
      }
      continue;
    }
    std::string s = write_smiles(f);
    if (s < best_smiles) {
      best = k;
      best_smiles = std::move(s);
    }
  }
  return best;
}

Molecule desalt(const Molecule& m, const SaltList& salts) {
  if (m.empty()) throw Error(ErrorKind::EmptyAfterDesalt, "molecule has no atoms");
  const Molecule clean = cleanup(m);
  std::vector<Molecule> fragments;
  for (const auto& comp : clean.components()) fragments.push_back(clean.subgraph(comp));

  std::vector<Molecule> kept;
  for (const auto& f : fragments) {
    if (!salts.matches(f)) kept.push_back(f);
  }
  if (kept.empty()) kept = std::move(fragments);
  if (kept.empty()) throw Error(ErrorKind::EmptyAfterDesalt, "all components were stripped");

  Molecule parent = kept.size() > 1 ? kept[most_significant_fragment(kept)] : kept.front();
  parent = remove_stereo(parent);
  parent = uncharge(parent);
  return cleanup(parent);
}

}  // namespace qspr::chem
