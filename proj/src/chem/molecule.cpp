#include "qspr/chem/molecule.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>

#include "qspr/error.hpp"

namespace qspr::chem {

namespace {

struct ElementInfo {
  std::string_view symbol;
  double weight;
};

// Standard atomic weights (conventional values); radioactive elements use the
// mass number of the longest-lived isotope.
constexpr std::array<ElementInfo, 119> kElements{{
    {"*", 0.0},       {"H", 1.008},     {"He", 4.0026},   {"Li", 6.94},     {"Be", 9.0122},
    {"B", 10.81},     {"C", 12.011},    {"N", 14.007},    {"O", 15.999},    {"F", 18.998},
    {"Ne", 20.180},   {"Na", 22.990},   {"Mg", 24.305},   {"Al", 26.982},   {"Si", 28.085},
    {"P", 30.974},    {"S", 32.06},     {"Cl", 35.45},    {"Ar", 39.948},   {"K", 39.098},
    {"Ca", 40.078},   {"Sc", 44.956},   {"Ti", 47.867},   {"V", 50.942},    {"Cr", 51.996},
    {"Mn", 54.938},   {"Fe", 55.845},   {"Co", 58.933},   {"Ni", 58.693},   {"Cu", 63.546},
    {"Zn", 65.38},    {"Ga", 69.723},   {"Ge", 72.630},   {"As", 74.922},   {"Se", 78.971},
    {"Br", 79.904},   {"Kr", 83.798},   {"Rb", 85.468},   {"Sr", 87.62},    {"Y", 88.906},
    {"Zr", 91.224},   {"Nb", 92.906},   {"Mo", 95.95},    {"Tc", 98.0},     {"Ru", 101.07},
    {"Rh", 102.91},   {"Pd", 106.42},   {"Ag", 107.87},   {"Cd", 112.41},   {"In", 114.82},
    {"Sn", 118.71},   {"Sb", 121.76},   {"Te", 127.60},   {"I", 126.90},    {"Xe", 131.29},
    {"Cs", 132.91},   {"Ba", 137.33},   {"La", 138.91},   {"Ce", 140.12},   {"Pr", 140.91},
    {"Nd", 144.24},   {"Pm", 145.0},    {"Sm", 150.36},   {"Eu", 151.96},   {"Gd", 157.25},
    {"Tb", 158.93},   {"Dy", 162.50},   {"Ho", 164.93},   {"Er", 167.26},   {"Tm", 168.93},
    {"Yb", 173.05},   {"Lu", 174.97},   {"Hf", 178.49},   {"Ta", 180.95},   {"W", 183.84},
    {"Re", 186.21},   {"Os", 190.23},   {"Ir", 192.22},   {"Pt", 195.08},   {"Au", 196.97},
    {"Hg", 200.59},   {"Tl", 204.38},   {"Pb", 207.2},    {"Bi", 208.98},   {"Po", 209.0},
    {"At", 210.0},    {"Rn", 222.0},    {"Fr", 223.0},    {"Ra", 226.0},    {"Ac", 227.0},
    {"Th", 232.04},   {"Pa", 231.04},   {"U", 238.03},    {"Np", 237.0},    {"Pu", 244.0},
    {"Am", 243.0},    {"Cm", 247.0},    {"Bk", 247.0},    {"Cf", 251.0},    {"Es", 252.0},
    {"Fm", 257.0},    {"Md", 258.0},    {"No", 259.0},    {"Lr", 266.0},    {"Rf", 267.0},
    {"Db", 268.0},    {"Sg", 269.0},    {"Bh", 270.0},    {"Hs", 277.0},    {"Mt", 278.0},
    {"Ds", 281.0},    {"Rg", 282.0},    {"Cn", 285.0},    {"Nh", 286.0},    {"Fl", 289.0},
    {"Mc", 290.0},    {"Lv", 293.0},    {"Ts", 294.0},    {"Og", 294.0},
}};

// Allowed valences for implicit-hydrogen assignment (organic subset only).
std::span<const int> default_valences(int z) {
  static constexpr std::array<int, 1> b{3}, c{4}, o{2}, halogen{1};
  static constexpr std::array<int, 2> n{3, 5}, p{3, 5};
  static constexpr std::array<int, 3> s{2, 4, 6};
  switch (z) {
    case 5: return b;
    case 6: return c;
    case 7: return n;
    case 8: return o;
    case 15: return p;
    case 16: return s;
    case 9: case 17: case 35: case 53: return halogen;
    default: return {};
  }
}

}  // namespace

std::optional<int> element_from_symbol(std::string_view symbol) {
  for (std::size_t z = 1; z < kElements.size(); ++z) {
    if (kElements[z].symbol == symbol) return static_cast<int>(z);
  }
  return std::nullopt;
}

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 1 || atomic_number >= static_cast<int>(kElements.size())) {
    throw Error(ErrorKind::InvalidArgument, "atomic number out of range");
  }
  return kElements[static_cast<std::size_t>(atomic_number)].symbol;
}

double atomic_weight(int atomic_number) {
  if (atomic_number < 1 || atomic_number >= static_cast<int>(kElements.size())) {
    throw Error(ErrorKind::InvalidArgument, "atomic number out of range");
  }
  return kElements[static_cast<std::size_t>(atomic_number)].weight;
}

Molecule::Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = static_cast<int>(atoms_.size());
  for (const Bond& b : bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n) {
      throw Error(ErrorKind::InvalidArgument, "bond endpoint out of range");
    }
    if (b.begin == b.end) throw Error(ErrorKind::InvalidArgument, "self-loop bond");
    if (b.order == BondOrder::Aromatic &&
        !(atoms_[static_cast<std::size_t>(b.begin)].aromatic &&
          atoms_[static_cast<std::size_t>(b.end)].aromatic)) {
      throw Error(ErrorKind::InvalidArgument, "aromatic bond between non-aromatic atoms");
    }
  }
  rebuild_adjacency();
  for (int i = 0; i < n; ++i) {
    const auto inc = incident(i);
    for (std::size_t a = 0; a < inc.size(); ++a) {
      for (std::size_t b = a + 1; b < inc.size(); ++b) {
        if (bonds_[static_cast<std::size_t>(inc[a])].other(i) ==
            bonds_[static_cast<std::size_t>(inc[b])].other(i)) {
          throw Error(ErrorKind::InvalidArgument, "duplicate bond between the same atoms");
        }
      }
    }
  }
}

void Molecule::rebuild_adjacency() {
  adjacency_.assign(atoms_.size(), {});
  for (std::size_t k = 0; k < bonds_.size(); ++k) {
    adjacency_[static_cast<std::size_t>(bonds_[k].begin)].push_back(static_cast<int>(k));
    adjacency_[static_cast<std::size_t>(bonds_[k].end)].push_back(static_cast<int>(k));
  }
}

std::optional<int> Molecule::bond_between(int a, int b) const {
  for (int k : incident(a)) {
    if (bonds_[static_cast<std::size_t>(k)].other(a) == b) return k;
  }
  return std::nullopt;
}

int explicit_valence(const Molecule& m, int atom) {
  int v = 0;
  for (int k : m.incident(atom)) {
    const BondOrder o = m.bond(k).order;
    v += o == BondOrder::Aromatic ? 1 : static_cast<int>(o);
  }
  return v;
}

bool in_organic_subset(int z) { return !default_valences(z).empty(); }

int Molecule::implicit_h(int i) const { return atom(i).bracket ? 0 : default_implicit_h(*this, i); }

int default_implicit_h(const Molecule& m, int i) {
  const Atom& a = m.atom(i);
  const auto valences = default_valences(a.atomic_number);
  if (valences.empty()) return 0;
  int used = explicit_valence(m, i);
  if (a.aromatic) {
    // Pyridine-type atoms contribute one extra electron to the pi system; O, S
    // (and Se) donate a lone pair instead and take no extra valence.
    const bool donor = a.atomic_number == 8 || a.atomic_number == 16 || a.atomic_number == 34;
    if (!donor) {
      const int with_pi = used + 1;
      if (with_pi <= valences.front()) used = with_pi;
    } else {
      return 0;
    }
  }
  for (int v : valences) {
    if (v >= used) return v - used;
  }
  return 0;
}

int Molecule::total_h(int i) const {
  const Atom& a = atom(i);
  return a.bracket ? a.explicit_h : implicit_h(i);
}

std::vector<std::vector<int>> Molecule::components() const {
  const int n = static_cast<int>(atoms_.size());
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n; ++start) {
    if (label[static_cast<std::size_t>(start)] >= 0) continue;
    std::vector<int> comp;
    std::vector<int> stack{start};
    label[static_cast<std::size_t>(start)] = static_cast<int>(out.size());
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (int k : incident(v)) {
        const int w = bonds_[static_cast<std::size_t>(k)].other(v);
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = static_cast<int>(out.size());
          stack.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

Molecule Molecule::subgraph(std::span<const int> keep) const {
  std::vector<int> remap(atoms_.size(), -1);
  std::vector<Atom> atoms;
  atoms.reserve(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    remap[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
    atoms.push_back(atoms_.at(static_cast<std::size_t>(keep[k])));
  }
  std::vector<Bond> bonds;
  for (const Bond& b : bonds_) {
    const int x = remap[static_cast<std::size_t>(b.begin)];
    const int y = remap[static_cast<std::size_t>(b.end)];
    if (x >= 0 && y >= 0) bonds.push_back({x, y, b.order, b.stereo});
  }
  // Organic-subset atoms that lose a neighbour would silently gain an implicit
  // hydrogen; pin their count so the fragment keeps its original valence state.
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const int old = keep[k];
    Atom& a = atoms[k];
    if (a.bracket) continue;
    int lost = 0;
    for (int bi : incident(old)) {
      if (remap[static_cast<std::size_t>(bonds_[static_cast<std::size_t>(bi)].other(old))] < 0) ++lost;
    }
    if (lost > 0) {
      a.bracket = true;
      a.explicit_h = implicit_h(old);
    }
  }
  return Molecule(std::move(atoms), std::move(bonds));
}

Molecule Molecule::permuted(std::span<const int> order) const {
  if (order.size() != atoms_.size()) throw Error(ErrorKind::InvalidArgument, "permutation size");
  return subgraph(order);
}

std::vector<bool> Molecule::ring_bonds() const {
  // Tarjan bridge finding; a bond is a ring bond iff it is not a bridge.
  const int n = static_cast<int>(atoms_.size());
  std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> ring(bonds_.size(), true);
  int timer = 0;
  struct Frame {
    int v;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] >= 0) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto inc = incident(f.v);
      if (f.next < inc.size()) {
        const int k = inc[f.next++];
        if (k == f.parent_bond) continue;
        const int w = bonds_[static_cast<std::size_t>(k)].other(f.v);
        if (disc[static_cast<std::size_t>(w)] < 0) {
          disc[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = timer++;
          stack.push_back({w, k, 0});
        } else {
          low[static_cast<std::size_t>(f.v)] =
              std::min(low[static_cast<std::size_t>(f.v)], disc[static_cast<std::size_t>(w)]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const int p = stack.back().v;
          low[static_cast<std::size_t>(p)] =
              std::min(low[static_cast<std::size_t>(p)], low[static_cast<std::size_t>(done.v)]);
          if (low[static_cast<std::size_t>(done.v)] > disc[static_cast<std::size_t>(p)]) {
            ring[static_cast<std::size_t>(done.parent_bond)] = false;
          }
        }
      }
    }
  }
  return ring;
}

std::vector<bool> Molecule::ring_atoms() const {
  const auto rb = ring_bonds();
  std::vector<bool> out(atoms_.size(), false);
  for (std::size_t k = 0; k < bonds_.size(); ++k) {
    if (rb[k]) {
      out[static_cast<std::size_t>(bonds_[k].begin)] = true;
      out[static_cast<std::size_t>(bonds_[k].end)] = true;
    }
  }
  return out;
}

int Molecule::heavy_atom_count() const {
  return static_cast<int>(std::count_if(atoms_.begin(), atoms_.end(),
                                        [](const Atom& a) { return a.atomic_number > 1; }));
}

double Molecule::molecular_weight() const {
  double w = 0.0;
  for (int i = 0; i < static_cast<int>(atoms_.size()); ++i) {
    w += atomic_weight(atoms_[static_cast<std::size_t>(i)].atomic_number) + total_h(i) * atomic_weight(1);
  }
  return w;
}

int Molecule::net_charge() const {
  return std::accumulate(atoms_.begin(), atoms_.end(), 0,
                         [](int acc, const Atom& a) { return acc + a.formal_charge; });
}

}  // namespace qspr::chem
