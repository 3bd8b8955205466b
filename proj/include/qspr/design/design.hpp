#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qspr::design {

enum class LinearFamily { OLS, Lasso, Ridge, PLS };

LinearFamily parse_family(std::string_view name);

struct ForwardOptions {
  std::uint64_t seed = 0;
  int n_folds = 4;
  std::vector<double> lasso_alphas{0.01, 0.05, 0.1, 0.5, 1.0};
  std::vector<double> ridge_alphas{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<int> pls_components{1, 2, 5, 10, 20};
};

struct ForwardResult {
  std::vector<int> features;  // in pick order
  std::vector<double> scores;  // CV validation R2 after each pick
};

/// Greedy forward selection of `k` columns of a standardized X, each step adding
/// the feature whose tuned fit has the best mean CV validation R2 (lowest index on ties).
/// Throws DegenerateTarget for a constant y and KTooLarge when k > d.
ForwardResult forward_feature_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LinearFamily family, int k,
                                     const ForwardOptions& options = {});

/// Mean CV validation R2 of the family's best hyperparameter on the given columns.
double cv_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& columns,
                LinearFamily family, const ForwardOptions& options);

struct DOptimalResult {
  std::vector<int> chosen;       // new rows in pick order, owned rows excluded
  std::vector<double> log_det;   // log det(X_S^T X_S + eps I) after the owned set and each pick
};

constexpr double kDOptimalEpsilon = 1e-8;

/// Greedy D-optimal augmentation from the owned rows. Each step adds the candidate
/// maximizing 1 + x^T (X_S^T X_S + eps I)^-1 x; exact ties are broken by the seed.
/// Throws KTooLarge when fewer than k candidates remain.
DOptimalResult d_optimal_select(const Eigen::MatrixXd& pool, int k, const std::vector<int>& owned = {},
                                std::uint64_t seed = 0);

}  // namespace qspr::design
