#include "qspr/tuning/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qspr/error.hpp"

namespace qspr::tuning {
namespace {

void check(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size()) throw Error(ErrorKind::DimensionMismatch, "metric inputs differ in length");
  if (y.size() < 2) throw Error(ErrorKind::EmptyInput, "metrics need at least two values");
  if (!y.allFinite() || !yhat.allFinite()) throw Error(ErrorKind::NonFinite, "metric inputs must be finite");
}

double centered_ss(const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().sum(); }

}  // namespace

double metric_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  check(y, yhat);
  const double tss = centered_ss(y);
  if (tss == 0.0) throw Error(ErrorKind::ConstantTarget, "R2 undefined for a constant target");
  return 1.0 - (y - yhat).squaredNorm() / tss;
}

double metric_corr(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  check(y, yhat);
  const double syy = centered_ss(y);
  if (syy == 0.0) throw Error(ErrorKind::ConstantTarget, "correlation undefined for a constant target");
  const double spp = centered_ss(yhat);
  if (spp == 0.0) return 0.0;
  const double syp = ((y.array() - y.mean()) * (yhat.array() - yhat.mean())).sum();
  return std::clamp(syp / std::sqrt(syy * spp), -1.0, 1.0);
}

double metric_rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size()) throw Error(ErrorKind::DimensionMismatch, "metric inputs differ in length");
  if (y.size() == 0) throw Error(ErrorKind::EmptyInput, "RMSE of an empty set");
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

Metrics masked_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!std::isnan(y(i))) {
      a.push_back(y(i));
      b.push_back(yhat(i));
    }
  const Eigen::VectorXd ya = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::VectorXd yb = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  Metrics m{nan, nan, nan};
  if (a.empty()) return m;
  m.rmse = metric_rmse(ya, yb);
  if (a.size() >= 2 && centered_ss(ya) > 0.0) {
    m.r2 = metric_r2(ya, yb);
    m.corr = metric_corr(ya, yb);
  }
  return m;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace qspr::tuning
