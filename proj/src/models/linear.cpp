#include "qspr/models/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qspr/error.hpp"
#include "qspr/models/serialize.hpp"

namespace qspr::models {

namespace {

void require_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " contains non-finite values");
}

void require_rows(const Matrix& x, Eigen::Index n) {
  if (x.rows() != n) throw Error(ErrorKind::DimensionMismatch, "X and y have different row counts");
  if (n < 1) throw Error(ErrorKind::EmptyInput, "no training rows");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void check_penalty(double alpha, double l1_ratio) {
  if (!(alpha >= 0.0) || !(l1_ratio >= 0.0 && l1_ratio <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "elastic net needs alpha >= 0 and l1_ratio in [0, 1]");
}

Vector least_squares(const Matrix& xc, const Vector& yc) {
  return xc.completeOrthogonalDecomposition().solve(yc);
}

}  // namespace

Matrix LinearModel::predict(const Matrix& x) const {
  Matrix p = x * coef;
  p.rowwise() += intercept.transpose();
  return p;
}

nlohmann::json LinearModel::parameters() const {
  return {{"coef", matrix_to_json(coef)}, {"intercept", vector_to_json(intercept)},
          {"iterations", iterations}, {"converged", did_converge}};
}

double LinearModel::effective_parameters() const {
  double k = 0;
  for (Eigen::Index i = 0; i < coef.rows(); ++i)
    if (coef.row(i).cwiseAbs().maxCoeff() > 0.0) ++k;
  return k;
}

LinearModel LinearModel::from_parameters(const nlohmann::json& j) {
  LinearModel m;
  m.coef = matrix_from_json(j.at("coef"));
  m.intercept = vector_from_json(j.at("intercept"));
  m.iterations = j.value("iterations", 0);
  m.did_converge = j.value("converged", true);
  return m;
}

LinearModel fit_elastic_net(const Matrix& x, const Vector& y, double alpha, double l1_ratio,
                            const CoordinateDescentOptions& options) {
  check_penalty(alpha, l1_ratio);
  require_rows(x, y.size());
  require_finite(x, "X");
  require_finite(y, "y");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const double nd = static_cast<double>(n);

  const Vector x_mean = x.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  LinearModel m;
  m.coef = Matrix::Zero(d, 1);
  m.intercept = Vector::Constant(1, y_mean);
  if (alpha == 0.0) {
    m.coef.col(0) = least_squares(xc, yc);
    m.intercept(0) = y_mean - x_mean.dot(m.coef.col(0));
    return m;
  }

  const double l1 = alpha * l1_ratio;
  const double l2 = alpha * (1.0 - l1_ratio);
  const Vector norms = xc.colwise().squaredNorm().transpose() / nd;
  Vector w = Vector::Zero(d);
  Vector r = yc;
  auto objective = [&] { return r.squaredNorm() / (2.0 * nd) + l1 * w.lpNorm<1>() + 0.5 * l2 * w.squaredNorm(); };

  m.did_converge = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (norms(j) == 0.0) continue;
      const double old = w(j);
      const double z = xc.col(j).dot(r) / nd + norms(j) * old;
      const double updated = soft_threshold(z, l1) / (norms(j) + l2);
      if (updated != old) {
        r.noalias() -= (updated - old) * xc.col(j);
        w(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (options.objective_trace) options.objective_trace->push_back(objective());
    if (!std::isfinite(max_change)) throw Error(ErrorKind::NonFinite, "elastic net diverged");
    m.iterations = sweep;
    if (max_change < options.tol) {
      m.did_converge = true;
      break;
    }
  }
  m.coef.col(0) = w;
  m.intercept(0) = y_mean - x_mean.dot(w);
  return m;
}

LinearModel fit_multitask_elastic_net(const Matrix& x, const Matrix& y, double alpha, double l1_ratio,
                                      const CoordinateDescentOptions& options) {
  check_penalty(alpha, l1_ratio);
  require_rows(x, y.rows());
  require_finite(x, "X");
  const Eigen::Index d = x.cols();
  const Eigen::Index t_count = y.cols();

  // Per-task centered copies over that task's observed rows; the intercept is profiled out.
  struct Task {
    Matrix xc;
    Vector r;
    Vector x_mean;
    Vector norms;
    double y_mean = 0.0;
    double n = 0.0;
  };
  std::vector<Task> tasks(static_cast<std::size_t>(t_count));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    Matrix xo;
    Vector yo;
    observed_rows(x, y, t, xo, yo);
    if (yo.size() == 0) throw Error(ErrorKind::EmptyInput, "task " + std::to_string(t) + " has no observed rows");
    require_finite(yo, "y");
    auto& task = tasks[static_cast<std::size_t>(t)];
    task.n = static_cast<double>(yo.size());
    task.x_mean = xo.colwise().mean().transpose();
    task.y_mean = yo.mean();
    task.xc = xo.rowwise() - task.x_mean.transpose();
    task.r = yo.array() - task.y_mean;
    task.norms = task.xc.colwise().squaredNorm().transpose() / task.n;
  }

  LinearModel m;
  m.coef = Matrix::Zero(d, t_count);
  m.intercept.resize(t_count);
  if (alpha == 0.0) {
    for (Eigen::Index t = 0; t < t_count; ++t) {
      auto& task = tasks[static_cast<std::size_t>(t)];
      m.coef.col(t) = least_squares(task.xc, task.r);
    }
  } else {
    const double l1 = alpha * l1_ratio;
    const double l2 = alpha * (1.0 - l1_ratio);
    Matrix& w = m.coef;
    auto objective = [&] {
      double f = 0.0;
      for (const auto& task : tasks) f += task.r.squaredNorm() / (2.0 * task.n);
      return f + l1 * w.rowwise().norm().sum() + 0.5 * l2 * w.squaredNorm();
    };
    Vector z(t_count), h(t_count);
    m.did_converge = false;
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        double big_h = 0.0;
        for (Eigen::Index t = 0; t < t_count; ++t) {
          const auto& task = tasks[static_cast<std::size_t>(t)];
          h(t) = task.norms(j) + l2;
          big_h = std::max(big_h, h(t));
          z(t) = task.xc.col(j).dot(task.r) / task.n - l2 * w(j, t);
        }
        if (big_h == 0.0) continue;
        // Majorize the block with its largest curvature, then apply the group prox.
        const Vector target = w.row(j).transpose() + z / big_h;
        const double norm = target.norm();
        const double shrink = norm > 0.0 ? std::max(0.0, 1.0 - l1 / (big_h * norm)) : 0.0;
        const Vector updated = shrink * target;
        for (Eigen::Index t = 0; t < t_count; ++t) {
          const double delta = updated(t) - w(j, t);
          if (delta == 0.0) continue;
          auto& task = tasks[static_cast<std::size_t>(t)];
          task.r.noalias() -= delta * task.xc.col(j);
          w(j, t) = updated(t);
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (options.objective_trace) options.objective_trace->push_back(objective());
      if (!std::isfinite(max_change)) throw Error(ErrorKind::NonFinite, "multitask elastic net diverged");
      m.iterations = sweep;
      if (max_change < options.tol) {
        m.did_converge = true;
        break;
      }
    }
  }
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const auto& task = tasks[static_cast<std::size_t>(t)];
    m.intercept(t) = task.y_mean - task.x_mean.dot(m.coef.col(t));
  }
  return m;
}

LinearModel fit_bayesian_ridge(const Matrix& x, const Vector& y, double tol, int max_iter) {
  require_rows(x, y.size());
  require_finite(x, "X");
  require_finite(y, "y");
  constexpr double kHyper = 1e-6;
  const Eigen::Index n = x.rows();
  const Vector x_mean = x.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const Vector s2 = s.array().square();
  const Vector uty = svd.matrixU().transpose() * yc;
  const Matrix& v = svd.matrixV();

  const double var = yc.squaredNorm() / static_cast<double>(n);
  double noise = 1.0 / (var + std::numeric_limits<double>::epsilon());  // precision of the noise
  double prior = 1.0;                                                   // precision of the weights
  auto posterior_mean = [&](double a, double l) -> Vector {
    Vector scale(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) scale(i) = s2(i) > 0.0 ? s(i) / (s2(i) + l / a) : 0.0;
    return v * (scale.cwiseProduct(uty));
  };

  LinearModel m;
  m.did_converge = false;
  Vector w = Vector::Zero(x.cols());
  for (int it = 1; it <= max_iter; ++it) {
    const Vector w_new = posterior_mean(noise, prior);
    const double rss = (yc - xc * w_new).squaredNorm();
    const double gamma = (noise * s2.array() / (prior + noise * s2.array())).sum();
    prior = (gamma + 2.0 * kHyper) / (w_new.squaredNorm() + 2.0 * kHyper);
    noise = (static_cast<double>(n) - gamma + 2.0 * kHyper) / (rss + 2.0 * kHyper);
    if (!std::isfinite(prior) || !std::isfinite(noise)) throw Error(ErrorKind::NonFinite, "Bayesian ridge diverged");
    const double change = (w_new - w).lpNorm<1>();
    const double size = std::max(w_new.lpNorm<1>(), 1e-12);
    w = w_new;
    m.iterations = it;
    if (it > 1 && change <= tol * size) {
      m.did_converge = true;
      break;
    }
  }
  w = posterior_mean(noise, prior);
  m.coef = w;
  m.intercept = Vector::Constant(1, y_mean - x_mean.dot(w));
  return m;
}

nlohmann::json PlsModel::parameters() const {
  auto j = LinearModel::parameters();
  j["x_weights"] = matrix_to_json(x_weights);
  j["x_loadings"] = matrix_to_json(x_loadings);
  j["y_loadings"] = matrix_to_json(y_loadings);
  j["n_components"] = n_components;
  return j;
}

PlsModel PlsModel::from_parameters(const nlohmann::json& j) {
  PlsModel m;
  static_cast<LinearModel&>(m) = LinearModel::from_parameters(j);
  m.x_weights = matrix_from_json(j.at("x_weights"));
  m.x_loadings = matrix_from_json(j.at("x_loadings"));
  m.y_loadings = matrix_from_json(j.at("y_loadings"));
  m.n_components = j.at("n_components").get<int>();
  return m;
}

PlsModel fit_pls(const Matrix& x, const Matrix& y, int n_components) {
  require_rows(x, y.rows());
  require_finite(x, "X");
  if (n_components < 1) throw Error(ErrorKind::InvalidArgument, "PLS needs at least one component");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index t_count = y.cols();
  const int a_max = static_cast<int>(std::min<Eigen::Index>({static_cast<Eigen::Index>(n_components), n - 1, d}));
  if (a_max < 1) throw Error(ErrorKind::DegenerateInput, "PLS needs at least 2 rows");

  Vector y_mean(t_count);
  Matrix yf = y;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    double sum = 0.0;
    int k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isnan(y(i, t))) {
        sum += y(i, t);
        ++k;
      }
    if (k == 0) throw Error(ErrorKind::EmptyInput, "PLS target column " + std::to_string(t) + " is empty");
    y_mean(t) = sum / k;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::isnan(yf(i, t))) yf(i, t) = y_mean(t);
  }
  require_finite(yf, "Y");

  const Vector x_mean = x.colwise().mean().transpose();
  Matrix xk = x.rowwise() - x_mean.transpose();
  Matrix yk = yf.rowwise() - y_mean.transpose();
  const double y_scale = std::max(yk.norm(), 1e-300);

  PlsModel m;
  m.x_weights = Matrix::Zero(d, a_max);
  m.x_loadings = Matrix::Zero(d, a_max);
  m.y_loadings = Matrix::Zero(t_count, a_max);
  int a = 0;
  for (; a < a_max; ++a) {
    if (yk.norm() <= 1e-12 * y_scale) break;  // nothing left to explain
    Vector w;
    if (t_count == 1) {
      w = xk.transpose() * yk.col(0);
    } else {
      Eigen::Index start = 0;
      yk.colwise().squaredNorm().maxCoeff(&start);
      Vector u = yk.col(start);
      Vector w_old = Vector::Zero(d);
      for (int it = 0; it < 500; ++it) {
        w = xk.transpose() * u;
        const double wn = w.norm();
        if (wn == 0.0) break;
        w /= wn;
        const Vector t = xk * w;
        const Vector c = yk.transpose() * t / std::max(t.squaredNorm(), 1e-300);
        u = yk * c / std::max(c.squaredNorm(), 1e-300);
        if ((w - w_old).squaredNorm() < 1e-20) break;
        w_old = w;
      }
    }
    const double wn = w.norm();
    if (wn <= 1e-12) break;
    w /= wn;
    const Vector t = xk * w;
    const double tt = t.squaredNorm();
    if (std::sqrt(tt) < 1e-12)
      throw Error(ErrorKind::RankDeficient, "PLS latent direction " + std::to_string(a + 1) + " vanished");
    const Vector p = xk.transpose() * t / tt;
    const Vector q = yk.transpose() * t / tt;
    xk.noalias() -= t * p.transpose();
    yk.noalias() -= t * q.transpose();
    m.x_weights.col(a) = w;
    m.x_loadings.col(a) = p;
    m.y_loadings.col(a) = q;
  }
  m.n_components = a;
  m.x_weights.conservativeResize(d, a);
  m.x_loadings.conservativeResize(d, a);
  m.y_loadings.conservativeResize(t_count, a);
  if (a == 0) {
    m.coef = Matrix::Zero(d, t_count);
  } else {
    const Matrix pw = m.x_loadings.transpose() * m.x_weights;
    m.coef = m.x_weights * pw.partialPivLu().solve(m.y_loadings.transpose());
  }
  m.intercept = y_mean - m.coef.transpose() * x_mean;
  return m;
}

}  // namespace qspr::models
