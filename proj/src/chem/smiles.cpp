#include "qspr/chem/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <tuple>

#include "qspr/error.hpp"

namespace qspr::chem {

namespace {

[[noreturn]] void syntax_error(std::size_t pos, const std::string& msg) {
  throw Error(ErrorKind::SyntaxError, msg + " at position " + std::to_string(pos));
}

struct PendingBond {
  BondOrder order = BondOrder::Single;
  BondStereo stereo = BondStereo::None;
  bool explicit_order = false;
  bool present = false;
};

struct OpenRing {
  int atom;
  PendingBond bond;
  std::size_t pos;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Molecule run() {
    if (s_.empty()) throw Error(ErrorKind::SyntaxError, "empty SMILES");
    while (i_ < s_.size()) step();
    if (!rings_.empty()) {
      const auto& [num, ring] = *rings_.begin();
      syntax_error(ring.pos, "unclosed ring bond " + std::to_string(num));
    }
    if (!branches_.empty()) syntax_error(s_.size(), "unmatched '('");
    if (pending_.present) syntax_error(s_.size(), "dangling bond");
    if (atoms_.empty()) throw Error(ErrorKind::SyntaxError, "no atoms");
    return Molecule(std::move(atoms_), std::move(bonds_));
  }

 private:
  void step() {
    const char c = s_[i_];
    switch (c) {
      case '(':
        if (prev_ < 0) syntax_error(i_, "branch without preceding atom");
        if (pending_.present) syntax_error(i_, "bond before '('");
        branches_.push_back(prev_);
        ++i_;
        return;
      case ')':
        if (branches_.empty()) syntax_error(i_, "unmatched ')'");
        if (pending_.present) syntax_error(i_, "dangling bond before ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        ++i_;
        return;
      case '.':
        if (pending_.present) syntax_error(i_, "bond before '.'");
        if (!branches_.empty()) syntax_error(i_, "'.' inside branch");
        prev_ = -1;
        ++i_;
        return;
      case '-': set_bond(BondOrder::Single, BondStereo::None); return;
      case '=': set_bond(BondOrder::Double, BondStereo::None); return;
      case '#': set_bond(BondOrder::Triple, BondStereo::None); return;
      case ':': set_bond(BondOrder::Aromatic, BondStereo::None); return;
      case '/': set_bond(BondOrder::Single, BondStereo::Up); return;
      case '\\': set_bond(BondOrder::Single, BondStereo::Down); return;
      case '$': syntax_error(i_, "quadruple bonds are not supported");
      case '>': syntax_error(i_, "reaction SMILES are not supported");
      case '*': syntax_error(i_, "wildcard atoms are not supported");
      case '[': bracket_atom(); return;
      case '%': {
        if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
          syntax_error(i_, "malformed %nn ring bond");
        }
        const int num = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
        ring_bond(num, i_);
        i_ += 3;
        return;
      }
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_bond(c - '0', i_);
      ++i_;
      return;
    }
    organic_atom();
  }

  void set_bond(BondOrder order, BondStereo stereo) {
    if (pending_.present) syntax_error(i_, "two consecutive bond symbols");
    if (prev_ < 0) syntax_error(i_, "bond without preceding atom");
    pending_ = {order, stereo, true, true};
    ++i_;
  }

  void organic_atom() {
    static const std::map<std::string_view, std::pair<int, bool>> kOrganic{
        {"B", {5, false}},  {"C", {6, false}},  {"N", {7, false}},  {"O", {8, false}},
        {"P", {15, false}}, {"S", {16, false}}, {"F", {9, false}},  {"Cl", {17, false}},
        {"Br", {35, false}}, {"I", {53, false}}, {"b", {5, true}},  {"c", {6, true}},
        {"n", {7, true}},   {"o", {8, true}},   {"p", {15, true}},  {"s", {16, true}},
    };
    const std::size_t start = i_;
    std::string_view sym;
    if (i_ + 1 < s_.size() && (s_.substr(i_, 2) == "Cl" || s_.substr(i_, 2) == "Br")) {
      sym = s_.substr(i_, 2);
    } else {
      sym = s_.substr(i_, 1);
    }
    const auto it = kOrganic.find(sym);
    if (it == kOrganic.end()) {
      syntax_error(start, "unknown element or character '" + std::string(sym) + "'");
    }
    i_ += sym.size();
    Atom a;
    a.atomic_number = it->second.first;
    a.aromatic = it->second.second;
    add_atom(a, start);
  }

  void bracket_atom() {
    const std::size_t start = i_;
    ++i_;  // '['
    Atom a;
    a.bracket = true;
    int isotope = 0;
    bool has_isotope = false;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
      isotope = isotope * 10 + (s_[i_] - '0');
      has_isotope = true;
      ++i_;
    }
    if (has_isotope) a.isotope = isotope;
    if (i_ >= s_.size()) syntax_error(start, "unterminated bracket atom");

    static const std::map<std::string_view, int> kAromaticBracket{
        {"b", 5}, {"c", 6}, {"n", 7}, {"o", 8}, {"p", 15}, {"s", 16}, {"se", 34}, {"as", 33}, {"te", 52}};
    const char c0 = s_[i_];
    if (std::islower(static_cast<unsigned char>(c0))) {
      std::string_view two = s_.substr(i_, 2);
      std::string_view one = s_.substr(i_, 1);
      if (auto it = kAromaticBracket.find(two); two.size() == 2 && it != kAromaticBracket.end()) {
        a.atomic_number = it->second;
        i_ += 2;
      } else if (auto it1 = kAromaticBracket.find(one); it1 != kAromaticBracket.end()) {
        a.atomic_number = it1->second;
        i_ += 1;
      } else {
        syntax_error(i_, "unknown aromatic element");
      }
      a.aromatic = true;
    } else if (std::isupper(static_cast<unsigned char>(c0))) {
      std::optional<int> z;
      if (i_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[i_ + 1]))) {
        z = element_from_symbol(s_.substr(i_, 2));
        if (z) i_ += 2;
      }
      if (!z) {
        z = element_from_symbol(s_.substr(i_, 1));
        if (!z) syntax_error(i_, "unknown element symbol");
        i_ += 1;
      }
      a.atomic_number = *z;
    } else {
      syntax_error(i_, c0 == '*' ? "wildcard atoms are not supported" : "expected element symbol");
    }

    if (i_ < s_.size() && s_[i_] == '@') {
      ++i_;
      a.chirality = Chirality::CounterClockwise;
      if (i_ < s_.size() && s_[i_] == '@') {
        ++i_;
        a.chirality = Chirality::Clockwise;
      }
      if (i_ < s_.size() && std::isupper(static_cast<unsigned char>(s_[i_])) && s_[i_] != 'H') {
        syntax_error(i_, "extended chirality classes are not supported");
      }
    }
    if (i_ < s_.size() && s_[i_] == 'H') {
      ++i_;
      a.explicit_h = 1;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        a.explicit_h = s_[i_] - '0';
        ++i_;
      }
    }
    if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) {
      const char sign = s_[i_];
      const int unit = sign == '+' ? 1 : -1;
      ++i_;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        int mag = 0;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
          mag = mag * 10 + (s_[i_] - '0');
          ++i_;
        }
        a.formal_charge = unit * mag;
      } else {
        int mag = 1;
        while (i_ < s_.size() && s_[i_] == sign) {
          ++mag;
          ++i_;
        }
        a.formal_charge = unit * mag;
      }
    }
    if (i_ < s_.size() && s_[i_] == ':') {
      ++i_;
      if (i_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        syntax_error(i_, "malformed atom class");
      }
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    if (i_ >= s_.size() || s_[i_] != ']') syntax_error(start, "unmatched '['");
    ++i_;
    add_atom(a, start);
  }

  void add_atom(const Atom& a, std::size_t pos) {
    const int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(a);
    if (prev_ >= 0) {
      connect(prev_, idx, pending_, pos);
    } else if (pending_.present) {
      syntax_error(pos, "bond without preceding atom");
    }
    pending_ = {};
    prev_ = idx;
  }

  void connect(int a, int b, const PendingBond& pb, std::size_t pos) {
    const bool both_aromatic = atoms_[static_cast<std::size_t>(a)].aromatic &&
                               atoms_[static_cast<std::size_t>(b)].aromatic;
    BondOrder order = pb.explicit_order ? pb.order
                                        : (both_aromatic ? BondOrder::Aromatic : BondOrder::Single);
    if (pb.explicit_order && pb.order == BondOrder::Single && pb.stereo != BondStereo::None &&
        both_aromatic) {
      order = BondOrder::Aromatic;  // '/' between aromatic atoms stays aromatic
    }
    if (order == BondOrder::Aromatic && !both_aromatic) {
      syntax_error(pos, "aromatic bond between non-aromatic atoms");
    }
    for (const Bond& existing : bonds_) {
      if ((existing.begin == a && existing.end == b) || (existing.begin == b && existing.end == a)) {
        syntax_error(pos, "duplicate bond");
      }
    }
    bonds_.push_back({a, b, order, pb.stereo});
  }

  void ring_bond(int num, std::size_t pos) {
    if (prev_ < 0) syntax_error(pos, "ring bond without preceding atom");
    const auto it = rings_.find(num);
    if (it == rings_.end()) {
      rings_.emplace(num, OpenRing{prev_, pending_, pos});
      pending_ = {};
      return;
    }
    OpenRing open = it->second;
    rings_.erase(it);
    if (open.atom == prev_) syntax_error(pos, "ring bond to itself");
    PendingBond pb = open.bond;
    if (pending_.present) {
      if (pb.explicit_order && pb.order != pending_.order) {
        syntax_error(pos, "conflicting ring bond orders");
      }
      if (!pb.explicit_order) pb = pending_;
    }
    connect(open.atom, prev_, pb, pos);
    pending_ = {};
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<int> branches_;
  std::map<int, OpenRing> rings_;
  PendingBond pending_;
  int prev_ = -1;
};

// ---------------------------------------------------------------------------
// Canonical ranking: invariant refinement plus exhaustive tie-breaking with a
// leaf budget, choosing the lexicographically smallest serialization.

int bond_code(BondOrder o) { return static_cast<int>(o); }

std::vector<int> dense_ranks(const std::vector<std::vector<long long>>& keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return keys[static_cast<std::size_t>(x)] < keys[static_cast<std::size_t>(y)]; });
  std::vector<int> ranks(keys.size(), 0);
  int r = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && keys[static_cast<std::size_t>(order[k])] != keys[static_cast<std::size_t>(order[k - 1])]) ++r;
    ranks[static_cast<std::size_t>(order[k])] = r;
  }
  return ranks;
}

int count_classes(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> refine(const Molecule& m, std::vector<int> ranks) {
  const int n = static_cast<int>(m.atom_count());
  int classes = count_classes(ranks);
  for (;;) {
    std::vector<std::vector<long long>> keys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& key = keys[static_cast<std::size_t>(i)];
      key.push_back(ranks[static_cast<std::size_t>(i)]);
      std::vector<long long> nb;
      for (int k : m.incident(i)) {
        const Bond& b = m.bond(k);
        nb.push_back(static_cast<long long>(ranks[static_cast<std::size_t>(b.other(i))]) * 8 + bond_code(b.order));
      }
      std::sort(nb.begin(), nb.end());
      key.insert(key.end(), nb.begin(), nb.end());
    }
    auto next = dense_ranks(keys);
    const int next_classes = count_classes(next);
    ranks = std::move(next);
    if (next_classes == classes) return ranks;
    classes = next_classes;
  }
}

std::vector<int> initial_ranks(const Molecule& m) {
  const int n = static_cast<int>(m.atom_count());
  const auto ring = m.ring_atoms();
  std::vector<std::vector<long long>> keys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    keys[static_cast<std::size_t>(i)] = {m.degree(i),
                                         a.atomic_number,
                                         a.isotope.value_or(0),
                                         a.formal_charge,
                                         m.total_h(i),
                                         a.aromatic ? 1 : 0,
                                         ring[static_cast<std::size_t>(i)] ? 1 : 0};
  }
  return dense_ranks(keys);
}

std::string atom_token(const Molecule& m, int i) {
  const Atom& a = m.atom(i);
  const int h = m.total_h(i);
  const bool organic = in_organic_subset(a.atomic_number) && a.formal_charge == 0 && !a.isotope &&
                       h == default_implicit_h(m, i) &&
                       (!a.aromatic || a.atomic_number == 5 || a.atomic_number == 6 || a.atomic_number == 7 ||
                        a.atomic_number == 8 || a.atomic_number == 15 || a.atomic_number == 16);
  std::string sym(element_symbol(a.atomic_number));
  if (a.aromatic) {
    for (auto& ch : sym) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (organic) return sym;
  std::string out = "[";
  if (a.isotope) out += std::to_string(*a.isotope);
  out += sym;
  if (h > 0) {
    out += 'H';
    if (h > 1) out += std::to_string(h);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    const int mag = std::abs(a.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  out += ']';
  return out;
}

std::string bond_token(const Molecule& m, const Bond& b) {
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return "";
    case BondOrder::Single:
      return (m.atom(b.begin).aromatic && m.atom(b.end).aromatic) ? "-" : "";
  }
  return "";
}

std::string ring_label(int d) { return d < 10 ? std::string(1, static_cast<char>('0' + d)) : "%" + std::to_string(d); }

// Serializes one connected molecule given a total order (distinct ranks).
std::string serialize(const Molecule& m, const std::vector<int>& ranks) {
  const int n = static_cast<int>(m.atom_count());
  if (n == 0) return {};
  auto by_rank = [&](int x, int y) { return ranks[static_cast<std::size_t>(x)] < ranks[static_cast<std::size_t>(y)]; };

  int start = 0;
  for (int i = 1; i < n; ++i) {
    if (by_rank(i, start)) start = i;
  }

  // Pass 1: DFS tree and ring-closure bonds.
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  std::vector<bool> tree_bond(m.bond_count(), false), closure(m.bond_count(), false);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> closures(static_cast<std::size_t>(n));
  std::vector<int> dfs_order;
  struct Frame {
    int v;
    int parent_bond;
    std::vector<int> nbrs;
    std::size_t next;
  };
  auto sorted_bonds = [&](int v) {
    std::vector<int> inc(m.incident(v).begin(), m.incident(v).end());
    std::sort(inc.begin(), inc.end(), [&](int x, int y) { return by_rank(m.bond(x).other(v), m.bond(y).other(v)); });
    return inc;
  };
  std::vector<Frame> stack;
  visited[static_cast<std::size_t>(start)] = true;
  dfs_order.push_back(start);
  stack.push_back({start, -1, sorted_bonds(start), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next >= f.nbrs.size()) {
      stack.pop_back();
      continue;
    }
    const int k = f.nbrs[f.next++];
    if (k == f.parent_bond || tree_bond[static_cast<std::size_t>(k)] || closure[static_cast<std::size_t>(k)]) continue;
    const int w = m.bond(k).other(f.v);
    if (visited[static_cast<std::size_t>(w)]) {
      closure[static_cast<std::size_t>(k)] = true;
      closures[static_cast<std::size_t>(f.v)].push_back(k);
      closures[static_cast<std::size_t>(w)].push_back(k);
      continue;
    }
    tree_bond[static_cast<std::size_t>(k)] = true;
    children[static_cast<std::size_t>(f.v)].push_back(k);
    visited[static_cast<std::size_t>(w)] = true;
    dfs_order.push_back(w);
    stack.push_back({w, k, sorted_bonds(w), 0});
  }

  // Position in DFS order decides whether a closure opens or closes at an atom.
  std::vector<int> position(static_cast<std::size_t>(n), 0);
  for (std::size_t p = 0; p < dfs_order.size(); ++p) position[static_cast<std::size_t>(dfs_order[p])] = static_cast<int>(p);

  std::vector<int> digit_of(m.bond_count(), 0);
  std::vector<bool> digit_used(100, false);
  std::string out;

  // Pass 2: emit recursively (explicit stack of work items).
  struct Work {
    int atom;       // -1 means literal text
    int via_bond;   // bond used to reach atom, -1 for root
    std::string text;
  };
  std::vector<Work> work{{start, -1, {}}};
  while (!work.empty()) {
    Work item = std::move(work.back());
    work.pop_back();
    if (item.atom < 0) {
      out += item.text;
      continue;
    }
    const int v = item.atom;
    if (item.via_bond >= 0) out += bond_token(m, m.bond(item.via_bond));
    out += atom_token(m, v);

    auto& cl = closures[static_cast<std::size_t>(v)];
    // Closings first (partner already written), then openings; each by partner rank.
    std::vector<int> closing, opening;
    for (int k : cl) {
      const int w = m.bond(k).other(v);
      (position[static_cast<std::size_t>(w)] < position[static_cast<std::size_t>(v)] ? closing : opening).push_back(k);
    }
    auto partner_rank = [&](int k) { return ranks[static_cast<std::size_t>(m.bond(k).other(v))]; };
    std::sort(closing.begin(), closing.end(), [&](int x, int y) { return partner_rank(x) < partner_rank(y); });
    std::sort(opening.begin(), opening.end(), [&](int x, int y) { return partner_rank(x) < partner_rank(y); });
    for (int k : closing) {
      const int d = digit_of[static_cast<std::size_t>(k)];
      out += ring_label(d);
      digit_used[static_cast<std::size_t>(d)] = false;
    }
    for (int k : opening) {
      int d = 1;
      while (digit_used[static_cast<std::size_t>(d)]) ++d;
      digit_used[static_cast<std::size_t>(d)] = true;
      digit_of[static_cast<std::size_t>(k)] = d;
      out += bond_token(m, m.bond(k));
      out += ring_label(d);
    }

    const auto& ch = children[static_cast<std::size_t>(v)];
    // Push in reverse so the first child is processed first.
    for (std::size_t c = ch.size(); c-- > 0;) {
      const int k = ch[c];
      const int w = m.bond(k).other(v);
      if (c + 1 == ch.size()) {
        work.push_back({w, k, {}});
      } else {
        work.push_back({-1, -1, ")"});
        work.push_back({w, k, {}});
        work.push_back({-1, -1, "("});
      }
    }
  }
  return out;
}

struct Search {
  const Molecule& m;
  int leaves = 0;
  static constexpr int kLeafBudget = 256;
  std::optional<std::string> best;

  void run(std::vector<int> ranks) {
    ranks = refine(m, std::move(ranks));
    const int n = static_cast<int>(m.atom_count());
    if (count_classes(ranks) == n) {
      ++leaves;
      std::string s = serialize(m, ranks);
      if (!best || s < *best) best = std::move(s);
      return;
    }
    // Smallest tied class.
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int tied = 0;
    while (count[static_cast<std::size_t>(tied)] < 2) ++tied;
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (ranks[static_cast<std::size_t>(i)] == tied) members.push_back(i);
    }
    // Terminal atoms hanging off the same neighbour are interchangeable.
    bool interchangeable = true;
    int anchor = -1;
    for (int i : members) {
      if (m.degree(i) != 1) {
        interchangeable = false;
        break;
      }
      const int nb = m.bond(m.incident(i)[0]).other(i);
      if (anchor < 0) anchor = nb;
      if (nb != anchor) {
        interchangeable = false;
        break;
      }
    }
    if (interchangeable) members.resize(1);
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (c > 0 && leaves >= kLeafBudget) break;
      std::vector<int> next(ranks.size());
      for (std::size_t i = 0; i < ranks.size(); ++i) next[i] = 2 * ranks[i] + 1;
      next[static_cast<std::size_t>(members[c])] -= 1;
      run(std::move(next));
    }
  }
};

std::string canonical_component(const Molecule& m) {
  Search search{m, 0, std::nullopt};
  search.run(initial_ranks(m));
  return *search.best;
}

}  // namespace

Molecule parse_smiles(std::string_view text) { return Parser(text).run(); }

std::string write_smiles(const Molecule& m) {
  std::vector<std::string> parts;
  for (const auto& comp : m.components()) parts.push_back(canonical_component(m.subgraph(comp)));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k > 0) out += '.';
    out += parts[k];
  }
  return out;
}

}  // namespace qspr::chem
