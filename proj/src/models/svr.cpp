#include "qspr/models/svr.hpp"

#include <cmath>
#include <limits>

#include "qspr/error.hpp"
#include "qspr/models/serialize.hpp"

namespace qspr::models {

std::string kernel_name(Kernel k) {
  switch (k) {
    case Kernel::Linear: return "linear";
    case Kernel::Rbf: return "rbf";
    case Kernel::Sigmoid: return "sigmoid";
    case Kernel::Poly: return "poly";
  }
  return "?";
}

Kernel parse_kernel(std::string_view name) {
  for (Kernel k : {Kernel::Linear, Kernel::Rbf, Kernel::Sigmoid, Kernel::Poly})
    if (name == kernel_name(k)) return k;
  throw Error(ErrorKind::ConfigError, "unknown SVR kernel '" + std::string(name) + "'");
}

double kernel_value(const KernelParams& k, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  switch (k.kernel) {
    case Kernel::Linear: return a.dot(b);
    case Kernel::Rbf: return std::exp(-k.gamma * (a - b).squaredNorm());
    case Kernel::Sigmoid: return std::tanh(k.gamma * a.dot(b) + k.coef0);
    case Kernel::Poly: return std::pow(k.gamma * a.dot(b) + k.coef0, k.degree);
  }
  return 0.0;
}

Matrix kernel_matrix(const KernelParams& k, const Matrix& a, const Matrix& b) {
  Matrix dots = a * b.transpose();
  switch (k.kernel) {
    case Kernel::Linear:
      return dots;
    case Kernel::Rbf: {
      const Vector na = a.rowwise().squaredNorm();
      const Vector nb = b.rowwise().squaredNorm();
      for (Eigen::Index i = 0; i < dots.rows(); ++i)
        for (Eigen::Index j = 0; j < dots.cols(); ++j)
          dots(i, j) = std::exp(-k.gamma * std::max(0.0, na(i) + nb(j) - 2.0 * dots(i, j)));
      return dots;
    }
    case Kernel::Sigmoid:
      return (k.gamma * dots.array() + k.coef0).tanh().matrix();
    case Kernel::Poly:
      return (k.gamma * dots.array() + k.coef0).pow(k.degree).matrix();
  }
  return dots;
}

double resolve_gamma(const nlohmann::json& gamma, const Matrix& x) {
  const double d = static_cast<double>(x.cols());
  if (gamma.is_number()) return gamma.get<double>();
  const auto s = gamma.get<std::string>();
  if (s == "auto") return 1.0 / d;
  if (s == "scale") {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    return var > 0.0 ? 1.0 / (d * var) : 1.0;
  }
  throw Error(ErrorKind::ConfigError, "unknown gamma '" + s + "'");
}

SvrDual solve_svr_dual(const Matrix& kernel, const Vector& y, double c, double epsilon, double tol, long max_iter) {
  constexpr double kTau = 1e-12;
  const Eigen::Index n = y.size();
  const Eigen::Index l = 2 * n;
  auto sign = [n](Eigen::Index i) { return i < n ? 1.0 : -1.0; };
  auto base = [n](Eigen::Index i) { return i < n ? i : i - n; };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return sign(i) * sign(j) * kernel(base(i), base(j)); };

  SvrDual out;
  out.alpha = Vector::Zero(l);
  Vector& alpha = out.alpha;
  Vector grad(l);
  for (Eigen::Index i = 0; i < n; ++i) {
    grad(i) = epsilon - y(i);
    grad(i + n) = epsilon + y(i);
  }
  auto at_upper = [&](Eigen::Index i) { return alpha(i) >= c; };
  auto at_lower = [&](Eigen::Index i) { return alpha(i) <= 0.0; };

  out.converged = false;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    // Maximal-violation i, then second-order choice of j.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (sign(t) > 0) {
        if (!at_upper(t) && -grad(t) >= gmax) {
          gmax = -grad(t);
          i = t;
        }
      } else if (!at_lower(t) && grad(t) >= gmax) {
        gmax = grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < l && i >= 0; ++t) {
      if (sign(t) > 0) {
        if (at_lower(t)) continue;
        const double diff = gmax + grad(t);
        gmax2 = std::max(gmax2, grad(t));
        if (diff > 0.0) {
          double quad = q(i, i) + q(t, t) - 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      } else {
        if (at_upper(t)) continue;
        const double diff = gmax - grad(t);
        gmax2 = std::max(gmax2, -grad(t));
        if (diff > 0.0) {
          double quad = q(i, i) + q(t, t) + 2.0 * sign(i) * q(i, t);
          if (quad <= 0.0) quad = kTau;
          const double obj = -diff * diff / quad;
          if (obj <= best) {
            best = obj;
            j = t;
          }
        }
      }
    }
    out.max_violation = i < 0 ? 0.0 : gmax + gmax2;
    if (i < 0 || j < 0 || out.max_violation < tol) {
      out.converged = true;
      break;
    }

    const double qij = q(i, j);
    const double old_i = alpha(i), old_j = alpha(j);
    if (sign(i) != sign(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < l; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yg = sign(t) * grad(t);
    if (at_upper(t)) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  out.rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);
  return out;
}

Matrix SvrModel::predict(const Matrix& x) const {
  Matrix p(x.rows(), 1);
  if (support.rows() == 0) {
    p.setConstant(bias);
    return p;
  }
  p.col(0) = kernel_matrix(kernel, x, support) * dual;
  p.array() += bias;
  return p;
}

nlohmann::json SvrModel::parameters() const {
  return {{"kernel", kernel_name(kernel.kernel)}, {"degree", kernel.degree}, {"gamma", kernel.gamma},
          {"coef0", kernel.coef0}, {"support", matrix_to_json(support)}, {"dual", vector_to_json(dual)},
          {"bias", bias}, {"n_features", features}, {"converged", did_converge}};
}

SvrModel SvrModel::from_parameters(const nlohmann::json& j) {
  SvrModel m;
  m.kernel.kernel = parse_kernel(j.at("kernel").get<std::string>());
  m.kernel.degree = j.at("degree").get<int>();
  m.kernel.gamma = j.at("gamma").get<double>();
  m.kernel.coef0 = j.at("coef0").get<double>();
  m.features = j.at("n_features").get<std::size_t>();
  m.support = matrix_from_json(j.at("support"));
  if (m.support.rows() == 0) m.support.resize(0, static_cast<Eigen::Index>(m.features));
  m.dual = vector_from_json(j.at("dual"));
  m.bias = j.at("bias").get<double>();
  m.did_converge = j.value("converged", true);
  return m;
}

SvrModel fit_svr(const Matrix& x, const Vector& y, const SvrParams& params) {
  if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "X and y have different row counts");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::NonFinite, "SVR input contains non-finite values");
  if (!(params.c > 0.0) || !(params.epsilon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "SVR needs C > 0 and epsilon >= 0");
  if (params.kernel == Kernel::Poly && (params.degree < 1))
    throw Error(ErrorKind::InvalidArgument, "poly kernel degree must be >= 1");

  SvrModel m;
  m.features = static_cast<std::size_t>(x.cols());
  m.kernel.kernel = params.kernel;
  m.kernel.degree = params.degree;
  m.kernel.gamma = resolve_gamma(params.gamma, x);
  const Matrix k = kernel_matrix(m.kernel, x, x);
  const long max_iter = 100L * 2L * static_cast<long>(x.rows());
  const auto sol = solve_svr_dual(k, y, params.c, params.epsilon, params.tol, max_iter);
  m.did_converge = sol.converged;

  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sol.alpha(i) - sol.alpha(i + n) != 0.0) sv.push_back(i);
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.dual.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    m.support.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
    m.dual(static_cast<Eigen::Index>(s)) = sol.alpha(sv[s]) - sol.alpha(sv[s] + n);
  }
  m.bias = -sol.rho;
  return m;
}

}  // namespace qspr::models
