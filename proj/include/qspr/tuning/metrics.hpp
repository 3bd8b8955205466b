#pragma once

#include <Eigen/Dense>

namespace qspr::tuning {

/// Coefficient of determination. Throws ConstantTarget when Var(y) = 0.
double metric_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
/// Pearson correlation. Throws ConstantTarget when Var(y) = 0.
double metric_corr(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double metric_rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

struct Metrics {
  double corr = 0.0;
  double r2 = 0.0;
  double rmse = 0.0;
};

/// All three metrics over the rows where y is observed. Undefined values are NaN.
Metrics masked_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

Summary summarize(const std::vector<double>& values);

}  // namespace qspr::tuning
