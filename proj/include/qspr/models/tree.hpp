#pragma once

#include <cstdint>
#include <vector>

#include "qspr/models/model.hpp"

namespace qspr::models {

/// Array-backed binary tree; x[feature] <= threshold goes left. Leaves carry one value per output.
struct Tree {
  std::vector<int> feature;  // -1 at leaves
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  Matrix value;  // nodes x outputs

  int leaf_for(const Eigen::Ref<const Vector>& x) const;
  int leaf_count() const;
  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

struct TreeParams {
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  int max_depth = -1;           // unlimited
  double max_features = 1.0;    // fraction of features tried per split
};

class TreeEnsemble : public Regressor {
 public:
  std::vector<Tree> trees;
  Vector base;          // added to the (scaled) sum of tree outputs
  double scale = 1.0;   // 1/n_trees for forests, the learning rate for boosting
  std::size_t features = 0;

  Matrix predict(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  double effective_parameters() const override;
  std::size_t n_features() const override { return features; }
  std::size_t n_outputs() const override { return static_cast<std::size_t>(base.size()); }

  static TreeEnsemble from_parameters(const nlohmann::json& j);
};

/// CART with variance-reduction splits at midpoints of sorted distinct values.
TreeEnsemble fit_decision_tree(const Matrix& x, const Vector& y, const TreeParams& params, std::uint64_t seed);

struct ForestParams {
  TreeParams tree;
  int n_estimators = 1000;
  bool bootstrap = true;
};

/// Bagged CART trees with per-split feature subsampling of ⌈max_features·d⌉ features.
TreeEnsemble fit_random_forest(const Matrix& x, const Vector& y, const ForestParams& params, std::uint64_t seed);

struct GbtParams {
  int n_estimators = 100;
  int max_depth = 6;
  double lambda = 1.0;
  double alpha = 0.0;
  double subsample = 1.0;
  double learning_rate = 0.3;
  double min_child_weight = 1.0;
};

/// Second-order boosting on squared loss. With several targets the trees share
/// their structure and carry one leaf weight per target; NaN targets contribute
/// no gradient. `loss_trace` receives the training RMSE after each round.
TreeEnsemble fit_gbt(const Matrix& x, const Matrix& y, const GbtParams& params, std::uint64_t seed,
                     std::vector<double>* loss_trace = nullptr);

}  // namespace qspr::models
