#pragma once

#include <vector>

#include "qspr/models/model.hpp"

namespace qspr::models {

/// y = x·coef + intercept, one column per target.
class LinearModel : public Regressor {
 public:
  Matrix coef;       // d x T
  Vector intercept;  // T
  int iterations = 0;
  bool did_converge = true;

  Matrix predict(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  double effective_parameters() const override;
  std::size_t n_features() const override { return static_cast<std::size_t>(coef.rows()); }
  std::size_t n_outputs() const override { return static_cast<std::size_t>(coef.cols()); }
  bool converged() const override { return did_converge; }

  static LinearModel from_parameters(const nlohmann::json& j);
};

struct CoordinateDescentOptions {
  double tol = 1e-6;       // on the largest coefficient change in a sweep
  int max_sweeps = 10000;
  std::vector<double>* objective_trace = nullptr;  // objective after each sweep
};

/// (1/2n)‖y − Xw − b‖² + αρ‖w‖₁ + (α(1−ρ)/2)‖w‖², cyclic coordinate descent;
/// α = 0 is solved by minimum-norm least squares.
LinearModel fit_elastic_net(const Matrix& x, const Vector& y, double alpha, double l1_ratio,
                            const CoordinateDescentOptions& options = {});

/// Σ_t (1/2n_t)‖y_t − Xw_t − b_t‖²_obs + αρ Σ_j ‖W_j·‖₂ + (α(1−ρ)/2)‖W‖²_F.
/// NaN cells of y are left out of their task's loss.
LinearModel fit_multitask_elastic_net(const Matrix& x, const Matrix& y, double alpha, double l1_ratio,
                                      const CoordinateDescentOptions& options = {});

/// Evidence-approximation Bayesian ridge (Gamma(1e-6, 1e-6) hyperpriors).
LinearModel fit_bayesian_ridge(const Matrix& x, const Vector& y, double tol = 1e-3, int max_iter = 300);

/// NIPALS PLS regression (PLS2 for several targets). X and Y are centered, not scaled.
class PlsModel : public LinearModel {
 public:
  Matrix x_weights;   // d x A
  Matrix x_loadings;  // d x A
  Matrix y_loadings;  // T x A
  int n_components = 0;

  nlohmann::json parameters() const override;
  double effective_parameters() const override { return n_components; }
  static PlsModel from_parameters(const nlohmann::json& j);
};

/// n_components is clipped to min(n − 1, d). Missing Y cells are filled with the
/// column mean. Throws RankDeficient when a score vector vanishes.
PlsModel fit_pls(const Matrix& x, const Matrix& y, int n_components);

}  // namespace qspr::models
