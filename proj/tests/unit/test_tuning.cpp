#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "qspr/data/synth.hpp"
#include "qspr/error.hpp"
#include "qspr/tuning/tuning.hpp"

using namespace qspr;
using namespace qspr::tuning;
using models::ModelClass;

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

Dataset to_dataset(const data::SynthDataset& s) {
  return {"synth", s.table.ids, s.table.values, s.table.feature_names, s.targets, s.target_names};
}

CvPlan plan_for(const Dataset& d, std::uint64_t seed) {
  CvPlan p;
  p.folds = split_folds(d.ids, seed);
  p.seed = seed;
  return p;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

TrialResult fake_trial(std::string target, std::size_t grid_index, double r2, double eff) {
  TrialResult t;
  t.representation = "percepta";
  t.model_class = ModelClass::MLP;
  t.multitask = true;
  t.targets = {std::move(target)};
  t.grid_index = grid_index;
  t.params = {{"grid", grid_index}};
  t.effective_parameters = eff;
  TargetSummary s;
  s.valid_r2 = {r2, 0.01};
  t.summary = {s};
  return t;
}

}  // namespace

TEST_CASE("fold splitting") {
  std::vector<std::string> ids;
  for (int i = 0; i < 143; ++i) ids.push_back("c" + std::to_string(i));
  auto sizes = split_folds(ids, 11).fold_sizes();
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{28, 28, 29, 29, 29});
  CHECK(split_folds(ids, 11).folds == split_folds(ids, 11).folds);
  CHECK(split_folds(ids, 11).folds != split_folds(ids, 12).folds);

  const std::vector<std::string> five{"a", "b", "c", "d", "e"};
  auto f = split_folds(five, 3).folds;
  std::sort(f.begin(), f.end());
  CHECK(f == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(kind_of([] { split_folds({"a", "b", "c", "d"}, 0); }) == ErrorKind::TooFewCompounds);
}

TEST_CASE("metric examples") {
  const auto y = vec({1.0, 2.0, 3.0, 4.0});
  CHECK(metric_r2(y, y) == 1.0);
  CHECK(metric_corr(y, y) == 1.0);
  CHECK(metric_rmse(y, y) == 0.0);
  CHECK(metric_r2(y, Eigen::VectorXd::Constant(4, 2.5)) == 0.0);
  const Eigen::VectorXd centered = y.array() - 2.5;
  CHECK(metric_corr(centered, -centered) == -1.0);
  // Reversed order: 1 - 20/5.
  CHECK(metric_r2(y, vec({4.0, 3.0, 2.0, 1.0})) == -3.0);
  CHECK(metric_rmse(y, vec({2.0, 3.0, 4.0, 5.0})) == 1.0);
  CHECK(kind_of([] { metric_r2(vec({1.0, 1.0}), vec({1.0, 2.0})); }) == ErrorKind::ConstantTarget);
  CHECK(kind_of([] { metric_corr(vec({1.0, 1.0}), vec({1.0, 2.0})); }) == ErrorKind::ConstantTarget);

  const auto m = masked_metrics(vec({1.0, NAN, 3.0, 4.0}), vec({1.0, 100.0, 3.0, 4.0}));
  CHECK(m.r2 == 1.0);
  CHECK(m.rmse == 0.0);

  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(summarize({7.0}).std == 0.0);
  CHECK(format_summary({0.61694, 0.0123}) == "0.6169 (0.0123)");
  CHECK(format_summary({-0.0553, 0.1}) == "-0.0553 (0.1000)");
}

TEST_CASE("grids") {
  CHECK(default_grid(ModelClass::DTR).points.size() == 42);
  CHECK(default_grid(ModelClass::RFR).points.size() == 210);
  CHECK(default_grid(ModelClass::EN).points.size() == 132);
  CHECK(default_grid(ModelClass::MTEN).points.size() == 132);
  CHECK(default_grid(ModelClass::BayesRidge).points.size() == 1);
  CHECK(default_grid(ModelClass::PLS).points.size() == 7);
  CHECK(default_grid(ModelClass::SVR).points.size() == 420);
  CHECK(default_grid(ModelClass::GBT).points.size() == 300);
  CHECK(default_grid(ModelClass::MLP).points.size() == 72);
  const auto g = expand_grid(ModelClass::EN, nlohmann::ordered_json{{"alpha", {1, 2}}, {"l1_ratio", {0.1, 0.2, 0.3}}});
  REQUIRE(g.points.size() == 6);
  CHECK(g.points[1] == Hyperparams{{"alpha", 1}, {"l1_ratio", 0.2}});
  CHECK(g.points[3] == Hyperparams{{"alpha", 2}, {"l1_ratio", 0.1}});
  CHECK(default_grid(ModelClass::MLP).points[0].at("dropouts_trunk") == Hyperparams::array({0.5}));
}

TEST_CASE("run_grid protocol") {
  const auto d = to_dataset(data::synth_dataset(31, 60, 6, 2, 0.3));
  const auto plan = plan_for(d, 5);

  SUBCASE("DTR evaluates every grid point per target") {
    const auto r = run_grid(plan, d, default_grid(ModelClass::DTR));
    CHECK(r.trials.size() == 2 * 42);
    CHECK(r.leakage_violations == 0);
    for (const auto& t : r.trials) CHECK(t.runs.size() == 4);
  }
  SUBCASE("MLP runs 4 folds x 5 repeats per point") {
    const auto g = expand_grid(ModelClass::MLP, nlohmann::ordered_json{{"hidden_sizes", {4}}, {"epochs", {3}}});
    const auto r = run_grid(plan, d, g, {1, true});
    REQUIRE(r.trials.size() == 1);
    CHECK(r.trials[0].runs.size() == 20);
    CHECK(r.trials[0].targets.size() == 2);
    CHECK(r.trials[0].summary.size() == 2);
  }
  SUBCASE("mode checks") {
    CHECK(kind_of([&] { run_grid(plan, d, default_grid(ModelClass::MTEN)); }) == ErrorKind::ConfigError);
    CHECK(kind_of([&] { run_grid(plan, d, default_grid(ModelClass::SVR), {1, true}); }) == ErrorKind::ConfigError);
  }
  SUBCASE("failed runs mark trials without aborting") {
    const auto g = expand_grid(ModelClass::EN, nlohmann::ordered_json{{"alpha", {-1.0, 0.1}}});
    const auto r = run_grid(plan, d, g);
    CHECK(r.trials[0].failed);
    CHECK_FALSE(r.trials[1].failed);
    CHECK(r.failed_runs == 8);
    CHECK(r.warnings.size() == 1);
    CHECK(select_tuned(r.trials)[0].grid_index == 1);
  }
}

TEST_CASE("aggregates recompute from stored runs") {
  const auto d = to_dataset(data::synth_dataset(32, 50, 5, 1, 0.5));
  const auto g = expand_grid(ModelClass::RFR, nlohmann::ordered_json{{"n_estimators", {5}}, {"max_features", {0.5}}});
  auto r = run_grid(plan_for(d, 9), d, g);
  const auto& t = r.trials[0];
  REQUIRE(t.runs.size() == 12);
  std::vector<double> v;
  for (const auto& run : t.runs) v.push_back(run.valid[0].r2);
  double mean = 0.0;
  for (double x : v) mean += x / 12.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  CHECK(std::abs(t.summary[0].valid_r2.mean - mean) < 1e-12);
  CHECK(std::abs(t.summary[0].valid_r2.std - std::sqrt(ss / 11.0)) < 1e-12);
  for (std::size_t i = 1; i < t.runs.size(); ++i)
    CHECK(std::make_pair(t.runs[i - 1].fold, t.runs[i - 1].repeat) < std::make_pair(t.runs[i].fold, t.runs[i].repeat));
  CHECK(t.summary[0].valid_r2.mean <= 1.0);
}

TEST_CASE("sweeps are deterministic across worker counts") {
  const auto d = to_dataset(data::synth_dataset(33, 50, 5, 3, 0.3));
  const auto plan = plan_for(d, 2);
  const auto g = expand_grid(ModelClass::MLP, nlohmann::ordered_json{{"hidden_sizes", {{6}, {4, 4}}},
                                                                     {"dropouts_trunk", {0.2}},
                                                                     {"epochs", {5}}});
  const auto a = run_grid(plan, d, g, {1, true});
  const auto b = run_grid(plan, d, g, {4, true});
  CHECK(trials_csv(a.trials) == trials_csv(b.trials));
  CHECK(runs_csv(a.trials) == runs_csv(b.trials));
  const auto gb = expand_grid(ModelClass::GBT, nlohmann::ordered_json{{"n_estimators", {5}}, {"subsample", {0.5}}});
  CHECK(trials_csv(run_grid(plan, d, gb, {1, true}).trials) == trials_csv(run_grid(plan, d, gb, {3, true}).trials));
}

TEST_CASE("the test fold never influences cross-validation") {
  const auto d = to_dataset(data::synth_dataset(34, 60, 6, 2, 0.3));
  const auto plan = plan_for(d, 4);
  Dataset poisoned = d;
  for (std::size_t i = 0; i < d.ids.size(); ++i)
    if (plan.folds.folds[i] == 0) {
      poisoned.x.row(static_cast<Eigen::Index>(i)).setConstant(1e6);
      poisoned.y.row(static_cast<Eigen::Index>(i)).setConstant(-1e6);
    }
  for (ModelClass c : {ModelClass::EN, ModelClass::PLS}) {
    const auto g = default_grid(c);
    const auto clean = run_grid(plan, d, g);
    const auto dirty = run_grid(plan, poisoned, g);
    CHECK(clean.leakage_violations == 0);
    CHECK(runs_csv(clean.trials) == runs_csv(dirty.trials));
  }
}

TEST_CASE("planted-linear data: tuned EN validates and tests well") {
  const auto d = to_dataset(data::synth_dataset(35, 143, 10, 1, 0.1));
  const auto plan = plan_for(d, 1);
  const auto r = run_grid(plan, d, default_grid(ModelClass::EN));
  const auto sel = select_tuned(r.trials);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0].cv.valid_r2.mean > 0.9);
  const auto tested = evaluate_test(plan, {d}, sel);
  REQUIRE(tested[0].test.has_value());
  CHECK(std::abs(tested[0].test->valid_r2.mean - sel[0].cv.valid_r2.mean) < 0.1);
  CHECK(tested[0].test->valid_r2.std > 0.0);

  // A deterministic class gives identical repeats on each fold.
  CvPlan repeated = plan;
  repeated.repeats_override = 3;
  const auto g = expand_grid(ModelClass::EN, nlohmann::ordered_json{{"alpha", {0.01}}, {"l1_ratio", {0.5}}});
  const auto rr = run_grid(repeated, d, g);
  const auto& runs = rr.trials[0].runs;
  REQUIRE(runs.size() == 12);
  for (std::size_t i = 0; i < 12; i += 3) {
    CHECK(runs[i].valid[0].r2 == runs[i + 1].valid[0].r2);
    CHECK(runs[i].valid[0].r2 == runs[i + 2].valid[0].r2);
  }
  CHECK(runs[0].valid[0].r2 != runs[3].valid[0].r2);
}

TEST_CASE("tuned-model selection") {
  CHECK(select_tuned({fake_trial("BBB_LogPe", 0, 0.4, 10)})[0].grid_index == 0);
  CHECK(select_tuned({fake_trial("BBB_LogPe", 0, 0.3, 10), fake_trial("BBB_LogPe", 1, 0.5, 10)})[0].grid_index == 1);
  CHECK(select_tuned({fake_trial("BBB_LogPe", 0, 0.5, 10), fake_trial("BBB_LogPe", 1, 0.5, 10)})[0].grid_index == 0);
  CHECK(select_tuned({fake_trial("BBB_LogPe", 0, 0.5, 10), fake_trial("BBB_LogPe", 1, 0.5, 4)})[0].grid_index == 1);
  auto failed = fake_trial("BBB_LogPe", 0, 0.9, 1);
  failed.failed = true;
  CHECK(kind_of([&] { select_tuned({failed}); }) == ErrorKind::AllTrialsFailed);
  CHECK(select_tuned({failed, fake_trial("BBB_LogPe", 1, 0.2, 1)})[0].grid_index == 1);

  // Table-1-shaped validation results against the 0.5 threshold.
  const std::vector<std::pair<std::string, double>> table{{"BBB", 0.6169}, {"DOD", 0.5599}, {"L", 0.5493},
                                                          {"H", 0.5069},   {"PC", 0.4653},  {"PS", 0.4231},
                                                          {"PCA0", 0.6542}, {"PCA1", 0.3733}, {"PCA2", 0.1763}};
  std::vector<TrialResult> trials;
  for (const auto& [name, r2] : table) trials.push_back(fake_trial(name, 0, r2, 1));
  const auto kept = filter_by_validation(overall_best(select_tuned(trials)), 0.5);
  std::vector<std::string> names;
  for (const auto& s : kept) names.push_back(s.target);
  CHECK(names == std::vector<std::string>{"BBB", "DOD", "L", "H", "PCA0"});
}

TEST_CASE("single versus multitask pairing") {
  std::vector<TrialResult> trials;
  const char* reps[] = {"percepta", "rdkit", "ecfp", "cddd", "molbert"};
  const std::pair<ModelClass, ModelClass> fams[] = {{ModelClass::EN, ModelClass::MTEN},
                                                    {ModelClass::PLS, ModelClass::PLS},
                                                    {ModelClass::GBT, ModelClass::GBT},
                                                    {ModelClass::MLP, ModelClass::MLP}};
  for (const auto& [single, multi] : fams)
    for (const char* rep : reps)
      for (int t = 0; t < 6; ++t) {
        auto s = fake_trial("T" + std::to_string(t), 0, 0.5, 1);
        s.representation = rep;
        s.model_class = single;
        s.multitask = false;
        auto m = s;
        m.model_class = multi;
        m.multitask = true;
        m.summary[0].valid_r2.mean = t == 0 ? 0.5 : 0.6;
        trials.push_back(s);
        trials.push_back(m);
      }
  const auto c = compare_single_vs_multi(trials);
  CHECK(c.pairs.size() == 120);
  CHECK(c.comparable == 120);
  CHECK(c.multi_wins == 100);
  trials.pop_back();
  CHECK(compare_single_vs_multi(trials).missing.size() == 1);
}

TEST_CASE("shared-weight tasks favour the multitask elastic net") {
  const auto d = to_dataset(data::synth_dataset(36, 40, 30, 6, 0.8, 0.95));
  const auto plan = plan_for(d, 3);
  auto trials = run_grid(plan, d, default_grid(ModelClass::EN)).trials;
  const auto multi = run_grid(plan, d, default_grid(ModelClass::MTEN), {1, true}).trials;
  trials.insert(trials.end(), multi.begin(), multi.end());
  const auto c = compare_single_vs_multi(trials);
  CHECK(c.comparable == 6);
  CHECK(c.multi_wins >= 4);
}
