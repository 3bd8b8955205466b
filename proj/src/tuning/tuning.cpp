#include "qspr/tuning/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "qspr/data/csv.hpp"
#include "qspr/error.hpp"
#include "qspr/random.hpp"

namespace qspr::tuning {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(threads, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

/// Standardized inputs for one validation fold, shared by every job using it.
struct Split {
  int fold = 0;
  std::vector<std::size_t> train, valid, test;
  Matrix x_train, x_valid, x_test;
  Matrix y_train, y_valid, y_test;
  std::size_t leakage = 0;
};

std::vector<Split> prepare_splits(const CvPlan& plan, const Dataset& d) {
  if (d.x.rows() != static_cast<Eigen::Index>(d.ids.size()) || d.y.rows() != d.x.rows())
    throw Error(ErrorKind::DimensionMismatch, "dataset rows do not match its ids");
  std::unordered_map<std::string, int> fold_of;
  for (std::size_t i = 0; i < plan.folds.ids.size(); ++i) fold_of[plan.folds.ids[i]] = plan.folds.folds[i];
  std::vector<int> folds(d.ids.size());
  for (std::size_t i = 0; i < d.ids.size(); ++i) {
    const auto it = fold_of.find(d.ids[i]);
    if (it == fold_of.end()) throw Error(ErrorKind::SchemaError, "compound '" + d.ids[i] + "' has no fold");
    folds[i] = it->second;
  }
  auto is_cv = [&](int f) { return std::find(plan.cv_folds.begin(), plan.cv_folds.end(), f) != plan.cv_folds.end(); };

  std::vector<Split> splits;
  for (int f : plan.cv_folds) {
    Split s;
    s.fold = f;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] == f)
        s.valid.push_back(i);
      else if (is_cv(folds[i]))
        s.train.push_back(i);
      else if (folds[i] == plan.test_fold)
        s.test.push_back(i);
    }
    // The external test fold must never reach a training or validation input.
    for (std::size_t i : s.train) s.leakage += folds[i] == plan.test_fold || folds[i] == f;
    for (std::size_t i : s.valid) s.leakage += folds[i] == plan.test_fold;
    if (s.train.size() < 2 || s.valid.empty())
      throw Error(ErrorKind::TooFewCompounds, "fold " + std::to_string(f) + " leaves too few compounds");

    const auto stats = data::fit_normalization(d.x, d.feature_names, s.train, data::ZeroVariance::Center);
    const Matrix xs = data::apply_normalization(stats, d.x);
    s.x_train = take_rows(xs, s.train);
    s.x_valid = take_rows(xs, s.valid);
    s.x_test = take_rows(xs, s.test);
    s.y_train = take_rows(d.y, s.train);
    s.y_valid = take_rows(d.y, s.valid);
    s.y_test = take_rows(d.y, s.test);
    splits.push_back(std::move(s));
  }
  return splits;
}

std::uint64_t run_seed(const CvPlan& plan, std::size_t grid_index, int fold, int repeat, int target) {
  if (target < 0)
    return derive_seed(plan.seed, {grid_index, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(repeat)});
  return derive_seed(plan.seed, {grid_index, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(repeat),
                                 static_cast<std::uint64_t>(target)});
}

Matrix target_columns(const Matrix& y, int target) { return target < 0 ? y : Matrix(y.col(target)); }

struct Outcome {
  RunRecord record;
  std::vector<Metrics> test;
};

Outcome run_once(const CvPlan& plan, const Split& s, ModelClass cls, const Hyperparams& params,
                 std::size_t grid_index, int repeat, int target, bool score_test) {
  Outcome out;
  out.record.fold = s.fold;
  out.record.repeat = repeat;
  try {
    const Matrix yt = target_columns(s.y_train, target);
    const Matrix yv = target_columns(s.y_valid, target);
    models::FitOptions fo{&s.x_valid, &yv};
    const models::RegressorSpec spec{cls, params, run_seed(plan, grid_index, s.fold, repeat, target)};
    const auto model = models::fit(spec, s.x_train, yt, fo);
    const Matrix pt = model.predict(s.x_train);
    const Matrix pv = model.predict(s.x_valid);
    if (!pt.allFinite() || !pv.allFinite()) throw Error(ErrorKind::NonFinite, "non-finite predictions");
    for (Eigen::Index k = 0; k < yt.cols(); ++k) {
      out.record.train.push_back(masked_metrics(yt.col(k), pt.col(k)));
      out.record.valid.push_back(masked_metrics(yv.col(k), pv.col(k)));
    }
    if (score_test) {
      const Matrix ys = target_columns(s.y_test, target);
      const Matrix ps = model.predict(s.x_test);
      for (Eigen::Index k = 0; k < ys.cols(); ++k) out.test.push_back(masked_metrics(ys.col(k), ps.col(k)));
    }
    out.record.effective_parameters = model.effective_parameters();
    out.record.converged = model.converged();
    out.record.ok = true;
  } catch (const std::exception& e) {
    out.record.ok = false;
    out.record.error = e.what();
    out.record.train.clear();
    out.record.valid.clear();
    out.test.clear();
  }
  return out;
}

TargetSummary summarize_runs(const std::vector<const RunRecord*>& runs, std::size_t k) {
  std::vector<double> v[6];
  for (const auto* r : runs) {
    const Metrics& a = r->train[k];
    const Metrics& b = r->valid[k];
    v[0].push_back(a.corr);
    v[1].push_back(a.r2);
    v[2].push_back(a.rmse);
    v[3].push_back(b.corr);
    v[4].push_back(b.r2);
    v[5].push_back(b.rmse);
  }
  return {summarize(v[0]), summarize(v[1]), summarize(v[2]), summarize(v[3]), summarize(v[4]), summarize(v[5])};
}

std::string cell(double v) { return data::format_double(v); }

std::string mode_name(bool multitask) { return multitask ? "multi" : "single"; }

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<nlohmann::json> values(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

data::FoldAssignment split_folds(const std::vector<std::string>& compound_ids, std::uint64_t seed) {
  return data::assign_folds(compound_ids, seed, 5);
}

int CvPlan::repeats(ModelClass c) const {
  if (repeats_override > 0) return repeats_override;
  if (c == ModelClass::MLP) return 5;
  if (c == ModelClass::RFR) return 3;
  return 1;
}

Grid expand_grid(ModelClass c, const nlohmann::ordered_json& axes) {
  if (!axes.is_object()) throw Error(ErrorKind::ConfigError, "a grid must be a table of value lists");
  Grid g{c, {Hyperparams::object()}};
  for (const auto& [key, list] : axes.items()) {
    const nlohmann::ordered_json choices = list.is_array() ? list : nlohmann::ordered_json::array({list});
    if (choices.empty()) throw Error(ErrorKind::ConfigError, "grid axis '" + key + "' is empty");
    std::vector<Hyperparams> next;
    for (const auto& point : g.points)
      for (const auto& v : choices) {
        Hyperparams p = point;
        p[key] = Hyperparams::parse(v.dump());
        next.push_back(std::move(p));
      }
    g.points = std::move(next);
  }
  return g;
}

Grid default_grid(ModelClass c) {
  using OJ = nlohmann::ordered_json;
  const OJ leaf = OJ::array({1, 2, 4, 8, 16, 32, 64});
  const OJ split = OJ::array({2, 4, 8, 16, 32, 64});
  switch (c) {
    case ModelClass::DTR:
      return expand_grid(c, OJ{{"min_samples_leaf", leaf}, {"min_samples_split", split}});
    case ModelClass::RFR:
      return expand_grid(c, OJ{{"n_estimators", OJ::array({1000})},
                               {"min_samples_leaf", leaf},
                               {"min_samples_split", split},
                               {"max_features", OJ::array({0.1, 0.2, 0.4, 0.8, 1.0})}});
    case ModelClass::EN:
    case ModelClass::MTEN: {
      OJ l1 = OJ::array();
      for (int i = 0; i <= 10; ++i) l1.push_back(i / 10.0);
      return expand_grid(c, OJ{{"alpha", values({0, 0.01, 0.05, 0.1, 0.5, 1, 5, 10, 50, 100, 500, 1000})},
                               {"l1_ratio", l1}});
    }
    case ModelClass::BayesRidge:
      return Grid{c, {Hyperparams::object()}};
    case ModelClass::PLS:
      return expand_grid(c, OJ{{"n_components", OJ::array({1, 2, 5, 10, 20, 50, 100})}});
    case ModelClass::SVR: {
      Grid g{c, {}};
      const std::vector<std::pair<std::string, int>> kernels{{"linear", 3}, {"rbf", 3},  {"sigmoid", 3},
                                                             {"poly", 1},   {"poly", 2}, {"poly", 3}};
      for (const auto& [kernel, degree] : kernels)
        for (const char* gamma : {"scale", "auto"})
          for (double cc : {0.001, 0.01, 0.1, 1.0, 10.0})
            for (double eps : {1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0})
              g.points.push_back({{"kernel", kernel}, {"degree", degree}, {"gamma", gamma}, {"C", cc}, {"epsilon", eps}});
      return g;
    }
    case ModelClass::GBT:
      return expand_grid(c, OJ{{"n_estimators", OJ::array({100, 1000})},
                               {"max_depth", OJ::array({4, 5, 6})},
                               {"lambda", values({0.001, 0.01, 0.1, 1, 10})},
                               {"alpha", values({0.001, 0.01, 0.1, 1, 10})},
                               {"subsample", values({0.5, 1.0})}});
    case ModelClass::MLP: {
      Grid g{c, {}};
      for (const std::vector<int>& hidden : std::vector<std::vector<int>>{{20}, {50}, {100}, {20, 20}, {50, 50}, {100, 100}})
        for (double dropout : {0.5, 0.6, 0.8})
          for (double wd : {0.01, 0.1})
            for (double lr : {0.1, 0.3})
              g.points.push_back({{"hidden_sizes", hidden},
                                  {"dropouts_trunk", std::vector<double>(hidden.size(), dropout)},
                                  {"weight_decay", wd},
                                  {"lr", lr}});
      return g;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model class");
}

void aggregate(TrialResult& trial) {
  trial.failed = trial.runs.empty();
  std::vector<const RunRecord*> ok;
  double eff = 0.0;
  for (const auto& r : trial.runs) {
    if (!r.ok) trial.failed = true;
    ok.push_back(&r);
    eff += r.effective_parameters;
  }
  trial.summary.clear();
  if (trial.failed) {
    trial.effective_parameters = kNaN;
    return;
  }
  trial.effective_parameters = eff / static_cast<double>(ok.size());
  for (std::size_t k = 0; k < trial.targets.size(); ++k) trial.summary.push_back(summarize_runs(ok, k));
}

SweepResult run_grid(const CvPlan& plan, const Dataset& dataset, const Grid& grid, const SweepOptions& options) {
  const ModelClass cls = grid.model_class;
  if (options.multitask && !models::is_multitask(cls))
    throw Error(ErrorKind::ConfigError, std::string(models::model_class_name(cls)) + " has no multitask mode");
  if (!options.multitask && cls == ModelClass::MTEN)
    throw Error(ErrorKind::ConfigError, "MTEN only runs in multitask mode");
  if (dataset.y.cols() != static_cast<Eigen::Index>(dataset.target_names.size()) || dataset.y.cols() == 0)
    throw Error(ErrorKind::DimensionMismatch, "target names do not match the target matrix");

  const auto splits = prepare_splits(plan, dataset);
  const int repeats = plan.repeats(cls);

  SweepResult result;
  const int n_targets = static_cast<int>(dataset.target_names.size());
  // Trial order: target-major in single-task mode, then grid order.
  const int blocks = options.multitask ? 1 : n_targets;
  for (int b = 0; b < blocks; ++b)
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      TrialResult t;
      t.representation = dataset.representation;
      t.model_class = cls;
      t.multitask = options.multitask;
      t.targets = options.multitask ? dataset.target_names : std::vector<std::string>{dataset.target_names[static_cast<std::size_t>(b)]};
      t.grid_index = g;
      t.params = grid.points[g];
      t.runs.resize(splits.size() * static_cast<std::size_t>(repeats));
      result.trials.push_back(std::move(t));
    }

  const std::size_t per_trial = splits.size() * static_cast<std::size_t>(repeats);
  const std::size_t jobs = result.trials.size() * per_trial;
  parallel_for(jobs, options.workers, [&](std::size_t j) {
    auto& trial = result.trials[j / per_trial];
    const std::size_t r = j % per_trial;
    const auto& split = splits[r / static_cast<std::size_t>(repeats)];
    const int repeat = static_cast<int>(r % static_cast<std::size_t>(repeats));
    const int target = options.multitask ? -1 : static_cast<int>(j / per_trial / grid.points.size());
    trial.runs[r] = run_once(plan, split, cls, trial.params, trial.grid_index, repeat, target, false).record;
  });

  std::size_t failed_trials = 0;
  for (auto& t : result.trials) {
    aggregate(t);
    result.runs += t.runs.size();
    for (const auto& r : t.runs) result.failed_runs += !r.ok;
    failed_trials += t.failed;
  }
  for (const auto& s : splits) result.leakage_violations += s.leakage;
  if (failed_trials * 10 > result.trials.size()) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s %s %s: %zu of %zu trials failed", dataset.representation.c_str(),
                  std::string(models::model_class_name(cls)).c_str(), mode_name(options.multitask).c_str(),
                  failed_trials, result.trials.size());
    result.warnings.emplace_back(buf);
  }
  return result;
}

std::vector<Selection> select_tuned(const std::vector<TrialResult>& trials) {
  using Key = std::tuple<std::string, std::string, int, bool>;
  std::map<Key, std::size_t> slot;
  std::vector<Selection> out;
  std::vector<double> best_r2;
  for (const auto& t : trials)
    for (std::size_t k = 0; k < t.targets.size(); ++k) {
      const Key key{t.representation, t.targets[k], static_cast<int>(t.model_class), t.multitask};
      auto it = slot.find(key);
      if (it == slot.end()) {
        it = slot.emplace(key, out.size()).first;
        Selection s;
        s.representation = t.representation;
        s.target = t.targets[k];
        s.model_class = t.model_class;
        s.multitask = t.multitask;
        out.push_back(std::move(s));
        best_r2.push_back(kNaN);
      }
      if (t.failed) continue;
      const double r2 = t.summary[k].valid_r2.mean;
      if (std::isnan(r2)) continue;
      Selection& s = out[it->second];
      double& best = best_r2[it->second];
      const bool better = std::isnan(best) || r2 > best ||
                          (r2 == best && (t.effective_parameters < s.effective_parameters ||
                                          (t.effective_parameters == s.effective_parameters && t.grid_index < s.grid_index)));
      if (!better) continue;
      best = r2;
      s.trained_targets = t.targets;
      s.grid_index = t.grid_index;
      s.params = t.params;
      s.effective_parameters = t.effective_parameters;
      s.cv = t.summary[k];
    }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (std::isnan(best_r2[i]))
      throw Error(ErrorKind::AllTrialsFailed, "no successful trial for " + out[i].representation + " " + out[i].target +
                                                  " " + std::string(models::model_class_name(out[i].model_class)));
  return out;
}

std::vector<Selection> overall_best(const std::vector<Selection>& tuned) {
  std::vector<Selection> out;
  for (const auto& s : tuned) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Selection& o) { return o.target == s.target; });
    if (it == out.end())
      out.push_back(s);
    else if (s.cv.valid_r2.mean > it->cv.valid_r2.mean)
      *it = s;
  }
  return out;
}

std::vector<Selection> filter_by_validation(const std::vector<Selection>& selections, double threshold) {
  std::vector<Selection> out;
  for (const auto& s : selections)
    if (s.cv.valid_r2.mean > threshold) out.push_back(s);
  return out;
}

std::vector<Selection> evaluate_test(const CvPlan& plan, const std::vector<Dataset>& datasets,
                                     const std::vector<Selection>& selections, int workers) {
  std::map<std::string, std::vector<Split>> prepared;
  std::map<std::string, const Dataset*> by_name;
  for (const auto& d : datasets) by_name[d.representation] = &d;

  struct Task {
    std::size_t selection;
    const Split* split;
    int repeat;
    int target;  // column within the dataset, -1 for a joint fit
    std::size_t column;
  };
  std::vector<Task> tasks;
  std::vector<std::size_t> first_task;
  for (std::size_t i = 0; i < selections.size(); ++i) {
    const auto& s = selections[i];
    const auto d = by_name.find(s.representation);
    if (d == by_name.end()) throw Error(ErrorKind::ConfigError, "no dataset for representation " + s.representation);
    auto& splits = prepared[s.representation];
    if (splits.empty()) splits = prepare_splits(plan, *d->second);
    const auto& names = d->second->target_names;
    const auto pos = std::find(names.begin(), names.end(), s.target);
    if (pos == names.end()) throw Error(ErrorKind::ConfigError, "unknown target " + s.target);
    const int column = static_cast<int>(pos - names.begin());
    first_task.push_back(tasks.size());
    for (const auto& split : splits)
      for (int r = 0; r < plan.repeats(s.model_class); ++r)
        tasks.push_back({i, &split, r, s.multitask ? -1 : column, static_cast<std::size_t>(s.multitask ? column : 0)});
  }

  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t j) {
    const Task& t = tasks[j];
    const auto& s = selections[t.selection];
    outcomes[j] = run_once(plan, *t.split, s.model_class, s.params, s.grid_index, t.repeat, t.target, true);
  });

  std::vector<Selection> out = selections;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t end = i + 1 < out.size() ? first_task[i + 1] : tasks.size();
    std::vector<double> v[6];
    for (std::size_t j = first_task[i]; j < end; ++j) {
      const auto& o = outcomes[j];
      if (!o.record.ok) throw Error(ErrorKind::AllTrialsFailed, "test retraining failed: " + o.record.error);
      const std::size_t c = tasks[j].column;
      v[0].push_back(o.record.train[c].corr);
      v[1].push_back(o.record.train[c].r2);
      v[2].push_back(o.record.train[c].rmse);
      v[3].push_back(o.test[c].corr);
      v[4].push_back(o.test[c].r2);
      v[5].push_back(o.test[c].rmse);
    }
    out[i].test = TargetSummary{summarize(v[0]), summarize(v[1]), summarize(v[2]),
                                summarize(v[3]), summarize(v[4]), summarize(v[5])};
  }
  return out;
}

Comparison compare_single_vs_multi(const std::vector<TrialResult>& trials) {
  auto family = [](ModelClass c) -> std::string {
    switch (c) {
      case ModelClass::EN:
      case ModelClass::MTEN: return "EN";
      case ModelClass::PLS: return "PLS";
      case ModelClass::GBT: return "GBT";
      case ModelClass::MLP: return "MLP";
      default: return "";
    }
  };
  Comparison c;
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::size_t> slot;
  for (const auto& t : trials) {
    const std::string fam = family(t.model_class);
    if (fam.empty()) continue;
    for (std::size_t k = 0; k < t.targets.size(); ++k) {
      const Key key{fam, t.representation, t.targets[k]};
      auto it = slot.find(key);
      if (it == slot.end()) {
        it = slot.emplace(key, c.pairs.size()).first;
        c.pairs.push_back({fam, t.representation, t.targets[k], std::nullopt, std::nullopt, false});
      }
      if (t.failed || std::isnan(t.summary[k].valid_r2.mean)) continue;
      auto& best = t.multitask ? c.pairs[it->second].multi_r2 : c.pairs[it->second].single_r2;
      best = best ? std::max(*best, t.summary[k].valid_r2.mean) : t.summary[k].valid_r2.mean;
    }
  }
  for (auto& p : c.pairs) {
    if (p.single_r2 && p.multi_r2) {
      ++c.comparable;
      p.multi_wins = *p.multi_r2 > *p.single_r2;
      c.multi_wins += p.multi_wins;
    } else {
      c.missing.push_back(p.family + " " + p.representation + " " + p.target);
    }
  }
  return c;
}

std::string format_summary(const Summary& s) {
  if (std::isnan(s.mean)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f (%.4f)", s.mean, s.std);
  return buf;
}

std::string trials_csv(const std::vector<TrialResult>& trials) {
  data::CsvTable t;
  t.header = {"representation", "model_class", "mode",      "target",     "grid_index", "params",
              "status",         "n_runs",      "effective_parameters", "corr_train", "corr_valid", "r2_train",
              "r2_valid",       "rmse_train",  "rmse_valid", "r2_valid_mean", "r2_valid_std"};
  for (const auto& tr : trials)
    for (std::size_t k = 0; k < tr.targets.size(); ++k) {
      std::vector<std::string> row{tr.representation, std::string(models::model_class_name(tr.model_class)),
                                   mode_name(tr.multitask), tr.targets[k], std::to_string(tr.grid_index),
                                   tr.params.dump(), tr.failed ? "failed" : "ok", std::to_string(tr.runs.size())};
      if (tr.failed) {
        row.resize(t.header.size());
      } else {
        const auto& s = tr.summary[k];
        for (const auto& cellv : {cell(tr.effective_parameters), format_summary(s.train_corr), format_summary(s.valid_corr),
                                  format_summary(s.train_r2), format_summary(s.valid_r2), format_summary(s.train_rmse),
                                  format_summary(s.valid_rmse), cell(s.valid_r2.mean), cell(s.valid_r2.std)})
          row.push_back(cellv);
      }
      t.rows.push_back(std::move(row));
    }
  return data::format_csv(t);
}

std::string runs_csv(const std::vector<TrialResult>& trials) {
  data::CsvTable t;
  t.header = {"representation", "model_class", "mode",     "grid_index", "target",     "fold",
              "repeat",         "status",      "corr_train", "r2_train", "rmse_train", "corr_valid",
              "r2_valid",       "rmse_valid",  "error"};
  for (const auto& tr : trials)
    for (const auto& r : tr.runs)
      for (std::size_t k = 0; k < tr.targets.size(); ++k) {
        std::vector<std::string> row{tr.representation, std::string(models::model_class_name(tr.model_class)),
                                     mode_name(tr.multitask), std::to_string(tr.grid_index), tr.targets[k],
                                     std::to_string(r.fold), std::to_string(r.repeat), r.ok ? "ok" : "failed"};
        if (r.ok) {
          for (const Metrics* m : {&r.train[k], &r.valid[k]}) {
            row.push_back(cell(m->corr));
            row.push_back(cell(m->r2));
            row.push_back(cell(m->rmse));
          }
          row.emplace_back();
        } else {
          row.resize(t.header.size() - 1);
          row.push_back(r.error);
        }
        t.rows.push_back(std::move(row));
      }
  return data::format_csv(t);
}

std::string selection_csv(const std::vector<Selection>& selections) {
  data::CsvTable t;
  t.header = {"representation", "target",     "model_class", "mode",     "trained_targets", "grid_index",
              "params",         "effective_parameters", "corr_train", "corr_valid", "corr_test", "r2_train",
              "r2_valid",       "r2_test",    "r2_valid_mean", "r2_test_mean"};
  for (const auto& s : selections) {
    const Summary none{kNaN, kNaN};
    const Summary& corr_test = s.test ? s.test->valid_corr : none;
    const Summary& r2_test = s.test ? s.test->valid_r2 : none;
    t.rows.push_back({s.representation, s.target, std::string(models::model_class_name(s.model_class)),
                      mode_name(s.multitask), join(s.trained_targets, ';'), std::to_string(s.grid_index),
                      s.params.dump(), cell(s.effective_parameters), format_summary(s.cv.train_corr),
                      format_summary(s.cv.valid_corr), format_summary(corr_test), format_summary(s.cv.train_r2),
                      format_summary(s.cv.valid_r2), format_summary(r2_test), cell(s.cv.valid_r2.mean),
                      cell(r2_test.mean)});
  }
  return data::format_csv(t);
}

std::string comparison_csv(const Comparison& comparison) {
  data::CsvTable t;
  t.header = {"family", "representation", "target", "single_r2_valid", "multi_r2_valid", "multi_wins"};
  for (const auto& p : comparison.pairs)
    t.rows.push_back({p.family, p.representation, p.target, p.single_r2 ? cell(*p.single_r2) : "",
                      p.multi_r2 ? cell(*p.multi_r2) : "",
                      p.single_r2 && p.multi_r2 ? (p.multi_wins ? "1" : "0") : ""});
  return data::format_csv(t);
}

namespace {

nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
double num_of(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

nlohmann::json summary_json(const Summary& s) { return {num(s.mean), num(s.std)}; }
Summary summary_of(const nlohmann::json& j) { return {num_of(j.at(0)), num_of(j.at(1))}; }

nlohmann::json target_summary_json(const TargetSummary& t) {
  return {{"train_corr", summary_json(t.train_corr)}, {"train_r2", summary_json(t.train_r2)},
          {"train_rmse", summary_json(t.train_rmse)}, {"valid_corr", summary_json(t.valid_corr)},
          {"valid_r2", summary_json(t.valid_r2)},     {"valid_rmse", summary_json(t.valid_rmse)}};
}

TargetSummary target_summary_of(const nlohmann::json& j) {
  return {summary_of(j.at("train_corr")), summary_of(j.at("train_r2")), summary_of(j.at("train_rmse")),
          summary_of(j.at("valid_corr")), summary_of(j.at("valid_r2")), summary_of(j.at("valid_rmse"))};
}

nlohmann::json metrics_json(const std::vector<Metrics>& ms) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : ms) out.push_back({num(m.corr), num(m.r2), num(m.rmse)});
  return out;
}

std::vector<Metrics> metrics_of(const nlohmann::json& j) {
  std::vector<Metrics> out;
  for (const auto& m : j) out.push_back({num_of(m.at(0)), num_of(m.at(1)), num_of(m.at(2))});
  return out;
}

template <typename F>
auto schema_guard(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

nlohmann::json trials_to_json(const std::vector<TrialResult>& trials) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trials) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : t.runs)
      runs.push_back({{"fold", r.fold}, {"repeat", r.repeat}, {"ok", r.ok}, {"error", r.error},
                      {"converged", r.converged}, {"effective_parameters", num(r.effective_parameters)},
                      {"train", metrics_json(r.train)}, {"valid", metrics_json(r.valid)}});
    out.push_back({{"representation", t.representation},
                   {"model_class", models::model_class_name(t.model_class)},
                   {"multitask", t.multitask},
                   {"targets", t.targets},
                   {"grid_index", t.grid_index},
                   {"params", t.params},
                   {"runs", runs}});
  }
  return out;
}

std::vector<TrialResult> trials_from_json(const nlohmann::json& j) {
  return schema_guard("trials", [&] {
    std::vector<TrialResult> out;
    for (const auto& e : j) {
      TrialResult t;
      t.representation = e.at("representation").get<std::string>();
      t.model_class = models::parse_model_class(e.at("model_class").get<std::string>());
      t.multitask = e.at("multitask").get<bool>();
      t.targets = e.at("targets").get<std::vector<std::string>>();
      t.grid_index = e.at("grid_index").get<std::size_t>();
      t.params = e.at("params");
      for (const auto& r : e.at("runs")) {
        RunRecord rr;
        rr.fold = r.at("fold").get<int>();
        rr.repeat = r.at("repeat").get<int>();
        rr.ok = r.at("ok").get<bool>();
        rr.error = r.at("error").get<std::string>();
        rr.converged = r.at("converged").get<bool>();
        rr.effective_parameters = num_of(r.at("effective_parameters"));
        rr.train = metrics_of(r.at("train"));
        rr.valid = metrics_of(r.at("valid"));
        t.runs.push_back(std::move(rr));
      }
      aggregate(t);
      out.push_back(std::move(t));
    }
    return out;
  });
}

nlohmann::json selections_to_json(const std::vector<Selection>& selections) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : selections) {
    nlohmann::json e{{"representation", s.representation},
                     {"target", s.target},
                     {"model_class", models::model_class_name(s.model_class)},
                     {"multitask", s.multitask},
                     {"trained_targets", s.trained_targets},
                     {"grid_index", s.grid_index},
                     {"params", s.params},
                     {"effective_parameters", num(s.effective_parameters)},
                     {"cv", target_summary_json(s.cv)}};
    if (s.test) e["test"] = target_summary_json(*s.test);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Selection> selections_from_json(const nlohmann::json& j) {
  return schema_guard("selection", [&] {
    std::vector<Selection> out;
    for (const auto& e : j) {
      Selection s;
      s.representation = e.at("representation").get<std::string>();
      s.target = e.at("target").get<std::string>();
      s.model_class = models::parse_model_class(e.at("model_class").get<std::string>());
      s.multitask = e.at("multitask").get<bool>();
      s.trained_targets = e.at("trained_targets").get<std::vector<std::string>>();
      s.grid_index = e.at("grid_index").get<std::size_t>();
      s.params = e.at("params");
      s.effective_parameters = num_of(e.at("effective_parameters"));
      s.cv = target_summary_of(e.at("cv"));
      if (e.contains("test")) s.test = target_summary_of(e.at("test"));
      out.push_back(std::move(s));
    }
    return out;
  });
}

}  // namespace qspr::tuning
