#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "qspr/chem/fingerprint.hpp"
#include "qspr/chem/scaffold.hpp"
#include "qspr/chem/smiles.hpp"
#include "qspr/chem/standardize.hpp"
#include "qspr/error.hpp"
#include "qspr/random.hpp"
#include "support/corpus.hpp"
#include "support/isomorphism.hpp"

using namespace qspr;
using namespace qspr::chem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidArgument;
}

std::string canon(std::string_view s) { return write_smiles(parse_smiles(s)); }

bool has_charge(const Molecule& m) {
  return std::any_of(m.atoms().begin(), m.atoms().end(), [](const Atom& a) { return a.formal_charge != 0; });
}

}  // namespace

TEST_CASE("parse_smiles examples") {
  const auto ethanol = parse_smiles("CCO");
  CHECK(ethanol.heavy_atom_count() == 3);
  CHECK(ethanol.bond_count() == 2);
  CHECK(ethanol.total_h(0) == 3);
  CHECK(ethanol.total_h(2) == 1);

  const auto salt = parse_smiles("O=C(O)c1ccccc1.[Na+]");
  const auto comps = salt.components();
  REQUIRE(comps.size() == 2);
  const auto na = salt.subgraph(comps[1]);
  REQUIRE(na.atom_count() == 1);
  CHECK(na.atom(0).atomic_number == 11);
  CHECK(na.atom(0).formal_charge == 1);

  try {
    parse_smiles("C1CC");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
    CHECK(std::string(e.what()).find("unclosed ring bond 1") != std::string::npos);
  }
}

TEST_CASE("parse_smiles grammar details") {
  CHECK(parse_smiles("c1ccccc1").bond_count() == 6);
  CHECK(parse_smiles("c1ccccc1").total_h(0) == 1);
  CHECK(parse_smiles("c1cc[nH]c1").total_h(3) == 1);
  CHECK(parse_smiles("c1ccncc1").total_h(3) == 0);
  CHECK(parse_smiles("[13CH4]").atom(0).isotope == 13);
  CHECK(parse_smiles("[NH4+]").total_h(0) == 4);
  CHECK(parse_smiles("[O-]C").atom(0).formal_charge == -1);
  CHECK(parse_smiles("[Fe+++]").atom(0).formal_charge == 3);
  CHECK(parse_smiles("C%12CC%12").bond_count() == 3);
  CHECK(parse_smiles("ClCBr").atom(2).atomic_number == 35);
  CHECK(parse_smiles("C=1CC1").bond(2).order == BondOrder::Double);

  for (const char* bad : {"", "C(C", "C)C", "[Na", "Xx", "C1CC2", "CC[", "C==C", "c1ccccc1)"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { parse_smiles(bad); }) == ErrorKind::SyntaxError);
  }
}

TEST_CASE("write_smiles examples") {
  CHECK(canon("OCC") == canon("CCO"));

  const auto benzene = parse_smiles(canon("c1ccccc1"));
  CHECK(benzene.atom_count() == 6);
  CHECK(benzene.bond_count() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(benzene.atom(i).aromatic);
    CHECK(benzene.degree(i) == 2);
  }

  const auto ammonium = parse_smiles(canon("[NH4+]"));
  CHECK(ammonium.atom(0).formal_charge == 1);
  CHECK(ammonium.total_h(0) == 4);
}

TEST_CASE("write_smiles distinguishes different graphs") {
  std::set<std::string> seen;
  for (const char* s : {"CCO", "COC", "CC=O", "C1CC1", "CCC", "c1ccccc1", "C1CCCCC1", "OCCO", "CC(O)O"}) {
    CHECK(seen.insert(canon(s)).second);
  }
}

TEST_CASE("write_smiles is invariant under atom reordering") {
  Rng rng(11);
  for (const auto& smi : testing::drug_smiles()) {
    CAPTURE(smi);
    const auto m = parse_smiles(smi);
    const auto ref = write_smiles(m);
    std::vector<int> order(m.atom_count());
    std::iota(order.begin(), order.end(), 0);
    for (int trial = 0; trial < 100; ++trial) {
      rng.shuffle(order);
      REQUIRE(write_smiles(m.permuted(order)) == ref);
    }
  }
}

TEST_CASE("write_smiles round-trips to an isomorphic graph") {
  for (const auto& smi : testing::drug_smiles()) {
    CAPTURE(smi);
    const auto m = remove_stereo(parse_smiles(smi));
    const auto back = parse_smiles(write_smiles(m));
    CHECK(testing::isomorphic(m, back));
  }
  testing::SmilesGenerator gen(5);
  for (int i = 0; i < 300; ++i) {
    const auto smi = gen.next();
    CAPTURE(smi);
    const auto m = remove_stereo(parse_smiles(smi));
    const auto text = write_smiles(m);
    const auto back = parse_smiles(text);
    CHECK(testing::isomorphic(m, back));
    CHECK(write_smiles(back) == text);
  }
}

TEST_CASE("salt list") {
  const auto builtin = SaltList::builtin();
  CHECK(builtin.size() == 38);
  const auto file = SaltList::load(std::string(QSPR_RESOURCE_DIR) + "/salts.txt");
  CHECK(file.size() == builtin.size());
  CHECK(file.canonical_entries() == builtin.canonical_entries());
  CHECK(builtin.matches(parse_smiles("[Na+]")));
  CHECK(builtin.matches(parse_smiles("[Cl-]")));
  CHECK(builtin.matches(parse_smiles("Cl")));
  CHECK(builtin.matches(parse_smiles("OC(=O)CCC(=O)O")));
  CHECK_FALSE(builtin.matches(parse_smiles("c1ccccc1")));
}

TEST_CASE("desalt examples") {
  const auto salts = SaltList::builtin();

  const auto benzoate = desalt(parse_smiles("O=C([O-])c1ccccc1.[Na+]"), salts);
  CHECK(benzoate.components().size() == 1);
  CHECK_FALSE(has_charge(benzoate));
  CHECK(write_smiles(benzoate) == canon("OC(=O)c1ccccc1"));

  // A molecule made only of salt-list components is left alone rather than emptied.
  CHECK(write_smiles(desalt(parse_smiles("CCO"), salts)) == canon("CCO"));
  CHECK(kind_of([&] { desalt(Molecule{}, salts); }) == ErrorKind::EmptyAfterDesalt);

  const auto plain = parse_smiles("CC(C)Cc1ccc(cc1)[C@@H](C)C(=O)O");
  CHECK(testing::isomorphic(desalt(plain, salts), remove_stereo(plain)));

  CHECK(write_smiles(desalt(parse_smiles("CC(C)NCC(O)COc1cccc2ccccc12.Cl"), salts)) ==
        canon("CC(C)NCC(O)COc1cccc2ccccc12"));
  CHECK(write_smiles(desalt(parse_smiles("[NH3+]CCc1ccc(O)c(O)c1.[Cl-]"), salts)) == canon("NCCc1ccc(O)c(O)c1"));
  CHECK(write_smiles(desalt(parse_smiles("CS(=O)(=O)O.CCN(CC)CC(=O)Nc1c(C)cccc1C"), salts)) ==
        canon("CCN(CC)CC(=O)Nc1c(C)cccc1C"));
}

TEST_CASE("standardization steps") {
  // Zwitterion with a quaternary nitrogen keeps its carboxylate.
  const auto betaine = uncharge(parse_smiles("C[N+](C)(C)CC(=O)[O-]"));
  CHECK(betaine.net_charge() == 0);
  CHECK(write_smiles(betaine) == canon("C[N+](C)(C)CC(=O)[O-]"));

  CHECK(write_smiles(uncharge(parse_smiles("CC(=O)[O-]"))) == canon("CC(=O)O"));
  CHECK(write_smiles(uncharge(parse_smiles("C[NH3+]"))) == canon("CN"));

  // Nitro group in pentavalent form becomes charge-separated.
  CHECK(write_smiles(cleanup(parse_smiles("CN(=O)=O"))) == canon("C[N+](=O)[O-]"));

  // Metal-heteroatom bonds are broken.
  const auto sodium = cleanup(parse_smiles("CC(=O)O[Na]"));
  CHECK(sodium.components().size() == 2);

  const auto flat = remove_stereo(parse_smiles("C/C=C/[C@H](F)Cl"));
  for (const auto& a : flat.atoms()) CHECK(a.chirality == Chirality::None);
  for (const auto& b : flat.bonds()) CHECK(b.stereo == BondStereo::None);

  std::vector<Molecule> frags{parse_smiles("CCO"), parse_smiles("c1ccccc1CC"), parse_smiles("CCCC")};
  CHECK(most_significant_fragment(frags) == 1);
}

TEST_CASE("desalt is idempotent") {
  const auto salts = SaltList::builtin();
  auto check = [&](const std::string& smi) {
    CAPTURE(smi);
    const auto once = desalt(parse_smiles(smi), salts);
    const auto twice = desalt(once, salts);
    CHECK(write_smiles(twice) == write_smiles(once));
    CHECK(once.components().size() == 1);
  };
  for (const auto& smi : testing::drug_smiles()) check(smi);
  testing::SmilesGenerator gen(2024);
  for (int i = 0; i < 1000; ++i) check(gen.next());
}

TEST_CASE("generic Murcko scaffold examples") {
  CHECK(write_smiles(generic_murcko_scaffold(parse_smiles("Cc1ccccc1"))) == canon("C1CCCCC1"));
  const auto biphenyl = generic_murcko_scaffold(parse_smiles("c1ccccc1-c1ccccc1"));
  CHECK(write_smiles(biphenyl) == canon("C1CCC(CC1)C1CCCCC1"));
  CHECK(biphenyl.atom_count() == 12);
  CHECK(biphenyl.bond_count() == 13);
  CHECK(kind_of([&] { generic_murcko_scaffold(parse_smiles("CCCC")); }) == ErrorKind::Acyclic);

  // Linker atoms between rings stay; side chains go.
  CHECK(write_smiles(generic_murcko_scaffold(parse_smiles("c1ccccc1OCCc1ccncc1CC(=O)O"))) ==
        canon("C1CCCCC1CCCC1CCCCC1"));
  // The whole-graph variant keeps side chains.
  CHECK(write_smiles(generic_graph(parse_smiles("Cc1ccccc1"))) == canon("CC1CCCCC1"));
  CHECK(kind_of([&] { generic_graph(parse_smiles("CCO")); }) == ErrorKind::Acyclic);
}

TEST_CASE("scaffold invariants") {
  auto check = [](const std::string& smi) {
    CAPTURE(smi);
    const auto mol = parse_smiles(smi);
    Molecule s;
    try {
      s = generic_murcko_scaffold(mol);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Acyclic);
      const auto ring = mol.ring_atoms();
      CHECK(std::none_of(ring.begin(), ring.end(), [](bool b) { return b; }));
      return;
    }
    for (const auto& a : s.atoms()) {
      CHECK(a.atomic_number == 6);
      CHECK(a.formal_charge == 0);
      CHECK_FALSE(a.aromatic);
    }
    for (const auto& b : s.bonds()) CHECK(b.order == BondOrder::Single);
    // No terminal chain atoms survive: every non-ring atom has degree >= 2.
    const auto ring = s.ring_atoms();
    for (int i = 0; i < static_cast<int>(s.atom_count()); ++i) {
      if (!ring[static_cast<std::size_t>(i)]) CHECK(s.degree(i) >= 2);
    }
    CHECK(write_smiles(generic_murcko_scaffold(s)) == write_smiles(s));
  };
  for (const auto& smi : testing::drug_smiles()) check(smi);
  testing::SmilesGenerator gen(99);
  for (int i = 0; i < 300; ++i) check(gen.next());
}

TEST_CASE("fingerprint folding and similarity") {
  CHECK(fold_fingerprint(Fingerprint({3, 2003, 4005}), 2000).bits() == std::vector<std::uint32_t>{3, 5});
  CHECK(fold_fingerprint(Fingerprint(), 2000).empty());
  CHECK(fold_fingerprint(Fingerprint({1999}), 2000).bits() == std::vector<std::uint32_t>{1999});
  CHECK(fold_fingerprint(Fingerprint({1999}), 2000).width() == 2000u);

  CHECK(tanimoto(Fingerprint({1, 2, 3}), Fingerprint({2, 3, 4})) == doctest::Approx(0.5));
  CHECK(tanimoto(Fingerprint({1, 2, 3}), Fingerprint({3, 2, 1})) == 1.0);
  CHECK(tanimoto(Fingerprint({1, 2}), Fingerprint({3, 4})) == 0.0);
  CHECK(tanimoto(Fingerprint(), Fingerprint()) == 1.0);
  CHECK(kind_of([] { tanimoto(Fingerprint({1}, 10), Fingerprint({1}, 20)); }) == ErrorKind::WidthMismatch);
  CHECK_THROWS_AS(Fingerprint({10}, 10), Error);
  CHECK(Fingerprint::parse("[5, 1, 5 3]").bits() == std::vector<std::uint32_t>{1, 3, 5});
}

TEST_CASE("MaxMin examples") {
  std::vector<Fingerprint> fps{Fingerprint({1, 2}), Fingerprint({3}), Fingerprint({4, 5, 6})};
  auto all = maxmin_diversity_pick(fps, 3, 1);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2});
  CHECK(kind_of([&] { maxmin_diversity_pick(fps, 4, 1); }) == ErrorKind::KTooLarge);

  std::vector<Fingerprint> dup{Fingerprint({1, 2, 3}), Fingerprint({1, 2, 3}), Fingerprint({7, 8})};
  std::uint64_t seed = 0;
  while (maxmin_first_pick(3, seed) != 0) ++seed;
  CHECK(maxmin_diversity_pick(dup, 2, seed) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("MaxMin matches the greedy recurrence evaluated from scratch") {
  Rng rng(3);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<Fingerprint> fps;
    for (int i = 0; i < 8; ++i) {
      std::vector<std::uint32_t> bits;
      for (std::uint32_t b = 0; b < 12; ++b)
        if (rng.uniform() < 0.35) bits.push_back(b);
      fps.emplace_back(bits);
    }
    const std::uint64_t seed = rng.next();
    const auto got = maxmin_diversity_pick(fps, 3, seed);

    std::vector<std::size_t> expect{maxmin_first_pick(8, seed)};
    while (expect.size() < 3) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t c = 0; c < 8; ++c) {
        if (std::find(expect.begin(), expect.end(), c) != expect.end()) continue;
        double mind = 2.0;
        for (std::size_t p : expect) mind = std::min(mind, 1.0 - tanimoto(fps[c], fps[p]));
        if (mind > best) {
          best = mind;
          arg = c;
        }
      }
      expect.push_back(arg);
    }
    CHECK(got == expect);
  }
}
