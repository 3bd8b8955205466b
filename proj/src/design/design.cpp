#include "qspr/design/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qspr/error.hpp"
#include "qspr/models/linear.hpp"
#include "qspr/random.hpp"
#include "qspr/tuning/metrics.hpp"

namespace qspr::design {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd columns_of(const MatrixXd& x, const std::vector<int>& cols) {
  MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

MatrixXd rows_of(const MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> fold_labels(Eigen::Index n, int n_folds, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> folds(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) folds[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % n_folds;
  return folds;
}

VectorXd fit_predict(const MatrixXd& xt, const VectorXd& yt, const MatrixXd& xv, LinearFamily family, double param) {
  switch (family) {
    case LinearFamily::OLS: return models::fit_elastic_net(xt, yt, 0.0, 0.0).predict(xv).col(0);
    case LinearFamily::Lasso: return models::fit_elastic_net(xt, yt, param, 1.0).predict(xv).col(0);
    case LinearFamily::Ridge: return models::fit_elastic_net(xt, yt, param, 0.0).predict(xv).col(0);
    case LinearFamily::PLS: return models::fit_pls(xt, yt, static_cast<int>(param)).predict(xv).col(0);
  }
  return {};
}

}  // namespace

LinearFamily parse_family(std::string_view name) {
  if (name == "OLS" || name == "ols" || name == "linear") return LinearFamily::OLS;
  if (name == "lasso" || name == "Lasso") return LinearFamily::Lasso;
  if (name == "ridge" || name == "Ridge") return LinearFamily::Ridge;
  if (name == "PLS" || name == "pls") return LinearFamily::PLS;
  throw Error(ErrorKind::ConfigError, "unknown model family '" + std::string(name) + "'");
}

double cv_score(const MatrixXd& x, const VectorXd& y, const std::vector<int>& columns, LinearFamily family,
                const ForwardOptions& options) {
  const MatrixXd xs = columns_of(x, columns);
  const auto folds = fold_labels(x.rows(), options.n_folds, options.seed);
  std::vector<double> params;
  switch (family) {
    case LinearFamily::OLS: params = {0.0}; break;
    case LinearFamily::Lasso: params = options.lasso_alphas; break;
    case LinearFamily::Ridge: params = options.ridge_alphas; break;
    case LinearFamily::PLS:
      for (int c : options.pls_components) {
        const double clipped = std::min<int>(c, static_cast<int>(columns.size()));
        if (std::find(params.begin(), params.end(), clipped) == params.end()) params.push_back(clipped);
      }
      break;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (double p : params) {
    double sum = 0.0;
    int used = 0;
    for (int f = 0; f < options.n_folds; ++f) {
      std::vector<Eigen::Index> tr, va;
      for (Eigen::Index i = 0; i < x.rows(); ++i) (folds[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
      VectorXd yt(static_cast<Eigen::Index>(tr.size())), yv(static_cast<Eigen::Index>(va.size()));
      for (std::size_t i = 0; i < tr.size(); ++i) yt(static_cast<Eigen::Index>(i)) = y(tr[i]);
      for (std::size_t i = 0; i < va.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y(va[i]);
      const VectorXd pred = fit_predict(rows_of(xs, tr), yt, rows_of(xs, va), family, p);
      const double r2 = tuning::masked_metrics(yv, pred).r2;
      if (std::isnan(r2)) continue;
      sum += r2;
      ++used;
    }
    if (used > 0) best = std::max(best, sum / used);
  }
  return best;
}

ForwardResult forward_feature_select(const MatrixXd& x, const VectorXd& y, LinearFamily family, int k,
                                     const ForwardOptions& options) {
  if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "X and y differ in rows");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::NonFinite, "forward selection needs complete data");
  if (k < 0 || k > x.cols()) throw Error(ErrorKind::KTooLarge, "k exceeds the number of features");
  if (x.rows() < 2 * options.n_folds || options.n_folds < 2)
    throw Error(ErrorKind::TooFewCompounds, "too few rows for cross-validation");
  if ((y.array() - y.mean()).abs().maxCoeff() == 0.0) throw Error(ErrorKind::DegenerateTarget, "target is constant");

  ForwardResult out;
  std::vector<bool> used(static_cast<std::size_t>(x.cols()), false);
  for (int step = 0; step < k; ++step) {
    int pick = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < x.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      auto cols = out.features;
      cols.push_back(j);
      const double s = cv_score(x, y, cols, family, options);
      if (pick < 0 || s > best) {
        best = s;
        pick = j;
      }
    }
    used[static_cast<std::size_t>(pick)] = true;
    out.features.push_back(pick);
    out.scores.push_back(best);
  }
  return out;
}

DOptimalResult d_optimal_select(const MatrixXd& pool, int k, const std::vector<int>& owned, std::uint64_t seed) {
  const Eigen::Index n = pool.rows(), d = pool.cols();
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "candidate pool has no columns");
  if (!pool.allFinite()) throw Error(ErrorKind::NonFinite, "candidate pool has missing cells");
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (int i : owned) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InvalidArgument, "owned row out of range");
    taken[static_cast<std::size_t>(i)] = true;
  }
  const auto free = static_cast<int>(std::count(taken.begin(), taken.end(), false));
  if (k < 0 || k > free) throw Error(ErrorKind::KTooLarge, "k exceeds the available candidates");

  // Upper-triangular R with R^T R = X_S^T X_S + eps I, kept by Givens row insertion
  // so the eps directions never pass through a squared Gram matrix.
  MatrixXd r = std::sqrt(kDOptimalEpsilon) * MatrixXd::Identity(d, d);
  auto insert_row = [&](Eigen::Index row) {
    VectorXd x = pool.row(row).transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (x(j) == 0.0) continue;
      const double h = std::hypot(r(j, j), x(j));
      const double c = r(j, j) / h, s = x(j) / h;
      for (Eigen::Index c2 = j; c2 < d; ++c2) {
        const double a = r(j, c2), b = x(c2);
        r(j, c2) = c * a + s * b;
        x(c2) = -s * a + c * b;
      }
    }
  };
  auto log_det = [&] { return 2.0 * r.diagonal().cwiseAbs().array().log().sum(); };
  for (std::size_t i = 0; i < taken.size(); ++i)
    if (taken[i]) insert_row(static_cast<Eigen::Index>(i));

  DOptimalResult out;
  out.log_det.push_back(log_det());
  Rng rng(seed);
  for (int step = 0; step < k; ++step) {
    // Gain of each candidate: 1 + x^T M^-1 x = 1 + |R^-T x|^2.
    const MatrixXd z = r.transpose().triangularView<Eigen::Lower>().solve(pool.transpose());
    std::vector<int> ties;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double g = 1.0 + z.col(i).squaredNorm();
      if (g > best) {
        best = g;
        ties.assign(1, static_cast<int>(i));
      } else if (g == best) {
        ties.push_back(static_cast<int>(i));
      }
    }
    const int pick = ties.size() == 1 ? ties[0] : ties[rng.index(ties.size())];
    taken[static_cast<std::size_t>(pick)] = true;
    out.chosen.push_back(pick);
    insert_row(pick);
    out.log_det.push_back(log_det());
  }
  return out;
}

}  // namespace qspr::design
