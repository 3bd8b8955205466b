#include "qspr/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qspr/error.hpp"
#include "qspr/models/serialize.hpp"
#include "qspr/random.hpp"

namespace qspr::models {

namespace {

void check_inputs(const Matrix& x, Eigen::Index rows) {
  if (x.rows() != rows) throw Error(ErrorKind::DimensionMismatch, "X and y have different row counts");
  if (rows == 0) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "X contains non-finite values");
}

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m >= b ? a : m;
}

// Shared recursive builder. The split score is supplied by the caller as
// statistics over per-row vectors: CART uses (1, y), boosting uses (h, g).
class Builder {
 public:
  struct Score {
    // Returns the gain of splitting `parent` into `l` and `r`, or a negative value if not allowed.
    virtual double gain(const Matrix& l_stats, const Matrix& r_stats, const Matrix& parent) const = 0;
    virtual Vector leaf(const Matrix& stats) const = 0;
    virtual ~Score() = default;
  };

  Builder(const Matrix& x, const Matrix& row_stats, const Score& score, const TreeParams& p, Rng* rng)
      : x_(x), stats_(row_stats), score_(score), p_(p), rng_(rng) {
    const auto d = static_cast<int>(x.cols());
    try_features_ = std::clamp(static_cast<int>(std::ceil(p.max_features * d - 1e-12)), 1, d);
  }

  Tree build(std::vector<int> rows) {
    tree_ = Tree{};
    tree_.value.resize(0, stats_.cols() / 2);
    values_.clear();
    grow(rows, 0);
    tree_.value.resize(static_cast<Eigen::Index>(values_.size()), stats_.cols() / 2);
    for (std::size_t i = 0; i < values_.size(); ++i) tree_.value.row(static_cast<Eigen::Index>(i)) = values_[i].transpose();
    return std::move(tree_);
  }

 private:
  Matrix sum_stats(const std::vector<int>& rows) const {
    Matrix s = Matrix::Zero(1, stats_.cols());
    for (int r : rows) s += stats_.row(r);
    return s;
  }

  int new_node(const Matrix& s) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    values_.push_back(score_.leaf(s));
    return static_cast<int>(tree_.feature.size()) - 1;
  }

  int grow(std::vector<int>& rows, int depth) {
    const Matrix total = sum_stats(rows);
    const int node = new_node(total);
    const int m = static_cast<int>(rows.size());
    if (m < p_.min_samples_split || m < 2 * p_.min_samples_leaf) return node;
    if (p_.max_depth >= 0 && depth >= p_.max_depth) return node;

    std::vector<int> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (try_features_ < static_cast<int>(features.size()) && rng_) {
      // Partial Fisher-Yates: the first try_features_ entries are a uniform sample.
      for (int i = 0; i < try_features_; ++i) {
        const auto j = i + static_cast<int>(rng_->index(features.size() - static_cast<std::size_t>(i)));
        std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
      }
      features.resize(static_cast<std::size_t>(try_features_));
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order = rows;
    Matrix left(1, stats_.cols());
    for (int f : features) {
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x_(a, f) < x_(b, f); });
      left.setZero();
      for (int k = 1; k < m; ++k) {
        left += stats_.row(order[static_cast<std::size_t>(k - 1)]);
        const double lo = x_(order[static_cast<std::size_t>(k - 1)], f);
        const double hi = x_(order[static_cast<std::size_t>(k)], f);
        if (!(lo < hi)) continue;
        if (k < p_.min_samples_leaf || m - k < p_.min_samples_leaf) continue;
        const double g = score_.gain(left, total - left, total);
        if (g > best_gain) {
          best_gain = g;
          best_feature = f;
          best_threshold = midpoint(lo, hi);
        }
      }
    }
    if (best_feature < 0) return node;

    std::vector<int> l, r;
    for (int row : rows) (x_(row, best_feature) <= best_threshold ? l : r).push_back(row);
    tree_.feature[static_cast<std::size_t>(node)] = best_feature;
    tree_.threshold[static_cast<std::size_t>(node)] = best_threshold;
    const int li = grow(l, depth + 1);
    tree_.left[static_cast<std::size_t>(node)] = li;
    const int ri = grow(r, depth + 1);
    tree_.right[static_cast<std::size_t>(node)] = ri;
    return node;
  }

  const Matrix& x_;
  const Matrix& stats_;
  const Score& score_;
  TreeParams p_;
  Rng* rng_;
  int try_features_ = 1;
  Tree tree_;
  std::vector<Vector> values_;
};

// Stats per row: [count, y]. Gain is the reduction in squared error.
struct VarianceScore : Builder::Score {
  double gain(const Matrix& l, const Matrix& r, const Matrix& p) const override {
    const double before = p(0, 1) * p(0, 1) / p(0, 0);
    const double after = l(0, 1) * l(0, 1) / l(0, 0) + r(0, 1) * r(0, 1) / r(0, 0);
    const double g = after - before;
    return g > 1e-12 * std::max(1.0, std::abs(before)) ? g : -1.0;
  }
  Vector leaf(const Matrix& s) const override { return Vector::Constant(1, s(0, 1) / s(0, 0)); }
};

// Stats per row: [h_1..h_T, g_1..g_T].
struct BoostScore : Builder::Score {
  double lambda, alpha, min_child_weight;
  Eigen::Index t;
  BoostScore(double l, double a, double mcw, Eigen::Index tasks) : lambda(l), alpha(a), min_child_weight(mcw), t(tasks) {}

  double threshold_l1(double g) const {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
  }
  double term(const Matrix& s) const {
    double v = 0.0;
    for (Eigen::Index k = 0; k < t; ++k) {
      const double h = s(0, k) + lambda;
      if (h > 0.0) {
        const double g = threshold_l1(s(0, t + k));
        v += g * g / h;
      }
    }
    return v;
  }
  double gain(const Matrix& l, const Matrix& r, const Matrix& p) const override {
    if (l.leftCols(t).sum() < min_child_weight || r.leftCols(t).sum() < min_child_weight) return -1.0;
    const double g = 0.5 * (term(l) + term(r) - term(p));
    return g > 1e-6 ? g : -1.0;
  }
  Vector leaf(const Matrix& s) const override {
    Vector w(t);
    for (Eigen::Index k = 0; k < t; ++k) {
      const double h = s(0, k) + lambda;
      w(k) = h > 0.0 ? -threshold_l1(s(0, t + k)) / h : 0.0;
    }
    return w;
  }
};

void check_tree_params(const TreeParams& p) {
  if (p.min_samples_leaf < 1 || p.min_samples_split < 2 || !(p.max_features > 0.0 && p.max_features <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "tree needs min_samples_leaf >= 1, min_samples_split >= 2, max_features in (0, 1]");
}

}  // namespace

int Tree::leaf_for(const Eigen::Ref<const Vector>& x) const {
  int node = 0;
  while (feature[static_cast<std::size_t>(node)] >= 0) {
    const auto i = static_cast<std::size_t>(node);
    node = x(feature[i]) <= threshold[i] ? left[i] : right[i];
  }
  return node;
}

int Tree::leaf_count() const { return static_cast<int>(std::count(feature.begin(), feature.end(), -1)); }

nlohmann::json Tree::to_json() const {
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", matrix_to_json(value)}};
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  t.feature = j.at("feature").get<std::vector<int>>();
  t.threshold = j.at("threshold").get<std::vector<double>>();
  t.left = j.at("left").get<std::vector<int>>();
  t.right = j.at("right").get<std::vector<int>>();
  t.value = matrix_from_json(j.at("value"));
  return t;
}

Matrix TreeEnsemble::predict(const Matrix& x) const {
  Matrix p = Matrix::Zero(x.rows(), base.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector row = x.row(i).transpose();
    for (const auto& t : trees) p.row(i) += t.value.row(t.leaf_for(row));
  }
  p *= scale;
  p.rowwise() += base.transpose();
  return p;
}

nlohmann::json TreeEnsemble::parameters() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) trees_json.push_back(t.to_json());
  return {{"trees", trees_json}, {"base", vector_to_json(base)}, {"scale", scale}, {"n_features", features}};
}

double TreeEnsemble::effective_parameters() const {
  double leaves = 0;
  for (const auto& t : trees) leaves += t.leaf_count();
  return leaves;
}

TreeEnsemble TreeEnsemble::from_parameters(const nlohmann::json& j) {
  TreeEnsemble e;
  for (const auto& t : j.at("trees")) e.trees.push_back(Tree::from_json(t));
  e.base = vector_from_json(j.at("base"));
  e.scale = j.at("scale").get<double>();
  e.features = j.at("n_features").get<std::size_t>();
  return e;
}

TreeEnsemble fit_decision_tree(const Matrix& x, const Vector& y, const TreeParams& params, std::uint64_t seed) {
  ForestParams fp;
  fp.tree = params;
  fp.n_estimators = 1;
  fp.bootstrap = false;
  return fit_random_forest(x, y, fp, seed);
}

TreeEnsemble fit_random_forest(const Matrix& x, const Vector& y, const ForestParams& params, std::uint64_t seed) {
  check_inputs(x, y.size());
  check_tree_params(params.tree);
  if (!y.allFinite()) throw Error(ErrorKind::NonFinite, "y contains non-finite values");
  if (params.n_estimators < 1) throw Error(ErrorKind::InvalidArgument, "n_estimators must be >= 1");
  const Eigen::Index n = x.rows();
  Matrix stats(n, 2);
  stats.col(0).setOnes();
  stats.col(1) = y;
  VarianceScore score;

  TreeEnsemble e;
  e.features = static_cast<std::size_t>(x.cols());
  e.base = Vector::Zero(1);
  e.scale = 1.0 / params.n_estimators;
  for (int k = 0; k < params.n_estimators; ++k) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    Builder builder(x, stats, score, params.tree, &rng);
    e.trees.push_back(builder.build(std::move(rows)));
  }
  return e;
}

TreeEnsemble fit_gbt(const Matrix& x, const Matrix& y, const GbtParams& params, std::uint64_t seed,
                     std::vector<double>* loss_trace) {
  check_inputs(x, y.rows());
  if (params.n_estimators < 1 || params.max_depth < 1 || !(params.lambda >= 0.0) || !(params.alpha >= 0.0) ||
      !(params.subsample > 0.0 && params.subsample <= 1.0) || !(params.learning_rate > 0.0))
    throw Error(ErrorKind::InvalidArgument, "invalid gradient boosting parameters");
  const Eigen::Index n = x.rows();
  const Eigen::Index t = y.cols();

  TreeEnsemble e;
  e.features = static_cast<std::size_t>(x.cols());
  e.scale = params.learning_rate;
  e.base = Vector::Zero(t);
  for (Eigen::Index k = 0; k < t; ++k) {
    double sum = 0.0;
    int c = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isnan(y(i, k))) {
        sum += y(i, k);
        ++c;
      }
    if (c == 0) throw Error(ErrorKind::EmptyInput, "target column " + std::to_string(k) + " has no observations");
    e.base(k) = sum / c;
  }

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = 1;
  tp.min_samples_split = 2;
  BoostScore score(params.lambda, params.alpha, params.min_child_weight, t);
  Matrix pred = Matrix::Zero(n, t);
  pred.rowwise() += e.base.transpose();
  Matrix stats(n, 2 * t);
  const auto take = static_cast<std::size_t>(std::max<double>(1.0, std::ceil(params.subsample * static_cast<double>(n) - 1e-9)));

  auto rmse = [&] {
    double sq = 0.0;
    int c = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < t; ++k)
        if (!std::isnan(y(i, k))) {
          sq += (pred(i, k) - y(i, k)) * (pred(i, k) - y(i, k));
          ++c;
        }
    return std::sqrt(sq / c);
  };

  for (int round = 0; round < params.n_estimators; ++round) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < t; ++k) {
        const bool seen = !std::isnan(y(i, k));
        stats(i, k) = seen ? 1.0 : 0.0;
        stats(i, t + k) = seen ? pred(i, k) - y(i, k) : 0.0;
      }
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    if (take < rows.size()) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(round)}));
      rng.shuffle(rows);
      rows.resize(take);
      std::sort(rows.begin(), rows.end());
    }
    Builder builder(x, stats, score, tp, nullptr);
    Tree tree = builder.build(std::move(rows));
    for (Eigen::Index i = 0; i < n; ++i) pred.row(i) += params.learning_rate * tree.value.row(tree.leaf_for(x.row(i).transpose()));
    e.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(rmse());
  }
  return e;
}

}  // namespace qspr::models
