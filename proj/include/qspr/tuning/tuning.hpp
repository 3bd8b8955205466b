#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qspr/data/descriptors.hpp"
#include "qspr/models/model.hpp"
#include "qspr/tuning/metrics.hpp"

namespace qspr::tuning {

using models::Hyperparams;
using models::Matrix;
using models::ModelClass;

/// Seeded shuffle, round-robin into 5 folds. Throws TooFewCompounds.
data::FoldAssignment split_folds(const std::vector<std::string>& compound_ids, std::uint64_t seed);

struct CvPlan {
  data::FoldAssignment folds;
  std::vector<int> cv_folds{1, 2, 3, 4};
  int test_fold = 0;
  std::uint64_t seed = 0;
  /// Overrides the per-class defaults (MLP 5, RFR 3, others 1) when positive.
  int repeats_override = 0;

  int repeats(ModelClass c) const;
};

/// Model inputs for one representation. Rows of x and y follow `ids`; NaN marks
/// missing cells. Features are raw: each training split is standardized on its own.
struct Dataset {
  std::string representation;
  std::vector<std::string> ids;
  Matrix x;
  std::vector<std::string> feature_names;
  Matrix y;
  std::vector<std::string> target_names;
};

struct Grid {
  ModelClass model_class = ModelClass::EN;
  std::vector<Hyperparams> points;
};

/// The published search grid of a class.
Grid default_grid(ModelClass c);
/// Cartesian product over an object of value arrays; the last key varies fastest.
Grid expand_grid(ModelClass c, const nlohmann::ordered_json& axes);

struct RunRecord {
  int fold = 0;    // validation fold
  int repeat = 0;
  bool ok = false;
  std::string error;
  bool converged = true;
  double effective_parameters = 0.0;
  std::vector<Metrics> train;  // per trial target
  std::vector<Metrics> valid;
};

struct TargetSummary {
  Summary train_corr, train_r2, train_rmse;
  Summary valid_corr, valid_r2, valid_rmse;
};

struct TrialResult {
  std::string representation;
  ModelClass model_class = ModelClass::EN;
  bool multitask = false;
  std::vector<std::string> targets;  // every target the model was trained on
  std::size_t grid_index = 0;
  Hyperparams params;
  std::vector<RunRecord> runs;  // sorted by (fold, repeat)
  bool failed = false;
  double effective_parameters = 0.0;
  std::vector<TargetSummary> summary;  // per target
};

/// Recomputes a trial's aggregate from its runs.
void aggregate(TrialResult& trial);

struct SweepOptions {
  int workers = 1;
  /// Train one model on all targets jointly. Single-task mode trains each target alone.
  bool multitask = false;
};

struct SweepResult {
  std::vector<TrialResult> trials;
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  std::size_t leakage_violations = 0;
  std::vector<std::string> warnings;
};

/// Every grid point x CV fold x repeat. Training inputs are standardized on the
/// three training folds only; failed runs mark their trial failed.
SweepResult run_grid(const CvPlan& plan, const Dataset& dataset, const Grid& grid, const SweepOptions& options = {});

struct Selection {
  std::string representation;
  std::string target;
  ModelClass model_class = ModelClass::EN;
  bool multitask = false;
  std::vector<std::string> trained_targets;
  std::size_t grid_index = 0;
  Hyperparams params;
  double effective_parameters = 0.0;
  TargetSummary cv;
  std::optional<TargetSummary> test;  // valid_* fields hold the test metrics
};

/// Tuned model per (representation, target, class, mode): highest mean validation R2,
/// ties to fewer effective parameters, then grid order. Throws AllTrialsFailed.
std::vector<Selection> select_tuned(const std::vector<TrialResult>& trials);
/// Highest validation R2 per target across every group.
std::vector<Selection> overall_best(const std::vector<Selection>& tuned);
std::vector<Selection> filter_by_validation(const std::vector<Selection>& selections, double threshold);

/// Retrains each selection on every CV training split x repeat and scores fold 0.
std::vector<Selection> evaluate_test(const CvPlan& plan, const std::vector<Dataset>& datasets,
                                     const std::vector<Selection>& selections, int workers = 1);

struct Pairing {
  std::string family;  // EN, PLS, GBT or MLP
  std::string representation;
  std::string target;
  std::optional<double> single_r2;
  std::optional<double> multi_r2;
  bool multi_wins = false;
};

struct Comparison {
  std::vector<Pairing> pairs;
  std::size_t comparable = 0;
  std::size_t multi_wins = 0;
  std::vector<std::string> missing;
};

Comparison compare_single_vs_multi(const std::vector<TrialResult>& trials);

/// "mean (std)" with four decimals, the published table style.
std::string format_summary(const Summary& s);

std::string trials_csv(const std::vector<TrialResult>& trials);
std::string runs_csv(const std::vector<TrialResult>& trials);
std::string selection_csv(const std::vector<Selection>& selections);
std::string comparison_csv(const Comparison& comparison);

/// Lossless JSON forms; NaN is written as null.
nlohmann::json trials_to_json(const std::vector<TrialResult>& trials);
std::vector<TrialResult> trials_from_json(const nlohmann::json& j);
nlohmann::json selections_to_json(const std::vector<Selection>& selections);
std::vector<Selection> selections_from_json(const nlohmann::json& j);

}  // namespace qspr::tuning
