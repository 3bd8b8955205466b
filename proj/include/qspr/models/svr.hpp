#pragma once

#include <string>

#include "qspr/models/model.hpp"

namespace qspr::models {

enum class Kernel { Linear, Rbf, Sigmoid, Poly };

struct KernelParams {
  Kernel kernel = Kernel::Rbf;
  int degree = 3;
  double gamma = 1.0;
  double coef0 = 0.0;
};

double kernel_value(const KernelParams& k, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);
Matrix kernel_matrix(const KernelParams& k, const Matrix& a, const Matrix& b);

/// "scale" -> 1/(d·Var(X)) over all cells, "auto" -> 1/d, or a number.
double resolve_gamma(const nlohmann::json& gamma, const Matrix& x);

struct SvrParams {
  Kernel kernel = Kernel::Rbf;
  int degree = 3;
  nlohmann::json gamma = "scale";
  double c = 1.0;
  double epsilon = 0.1;
  double tol = 1e-3;
};

/// Dual solution of ε-SVR: minimize ½αᵀQα + pᵀα over the 2n box variables.
struct SvrDual {
  Vector alpha;  // 2n: α⁺ then α⁻
  double rho = 0.0;
  double max_violation = 0.0;  // KKT gap at termination
  long iterations = 0;
  bool converged = true;
};

/// Sequential minimal optimization with second-order working-set selection.
SvrDual solve_svr_dual(const Matrix& kernel, const Vector& y, double c, double epsilon, double tol, long max_iter);

class SvrModel : public Regressor {
 public:
  KernelParams kernel;
  Matrix support;  // support vectors (rows)
  Vector dual;     // α⁺ − α⁻ for each support vector
  double bias = 0.0;
  std::size_t features = 0;
  bool did_converge = true;

  Matrix predict(const Matrix& x) const override;
  nlohmann::json parameters() const override;
  double effective_parameters() const override { return static_cast<double>(support.rows()); }
  std::size_t n_features() const override { return features; }
  std::size_t n_outputs() const override { return 1; }
  bool converged() const override { return did_converge; }

  static SvrModel from_parameters(const nlohmann::json& j);
};

/// Gives up after 100 iterations per dual variable and returns the last iterate flagged unconverged.
SvrModel fit_svr(const Matrix& x, const Vector& y, const SvrParams& params);

std::string kernel_name(Kernel k);
Kernel parse_kernel(std::string_view name);

}  // namespace qspr::models
