#include "qspr/models/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qspr/error.hpp"
#include "qspr/models/serialize.hpp"

namespace qspr::models {

namespace {

struct Pass {
  std::vector<Matrix> pre;   // pre-activations per hidden layer
  std::vector<Matrix> act;   // inputs to each layer (act[0] = x)
  std::vector<Matrix> mask;  // dropout scale per hidden layer (empty when off)
  Matrix out;
};

Pass run(const MlpNetwork& net, const Matrix& x, double dropout, Rng* rng) {
  Pass p;
  p.act.push_back(x);
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Matrix z = p.act.back() * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    Matrix h = z.cwiseMax(0.0);
    if (rng && dropout > 0.0) {
      Matrix m(h.rows(), h.cols());
      const double keep = 1.0 - dropout;
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
      h = h.cwiseProduct(m);
      p.mask.push_back(std::move(m));
    } else {
      p.mask.emplace_back();
    }
    p.pre.push_back(std::move(z));
    p.act.push_back(std::move(h));
  }
  p.out = p.act.back() * net.weights.back().transpose();
  p.out.rowwise() += net.biases.back().transpose();
  return p;
}

}  // namespace

MlpNetwork MlpNetwork::initialize(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng) {
  MlpNetwork net;
  int fan_in = inputs;
  std::vector<int> sizes = hidden;
  sizes.push_back(outputs);
  for (int width : sizes) {
    if (width < 1) throw Error(ErrorKind::InvalidArgument, "layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(width, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
    Vector b(width);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = (2.0 * rng.uniform() - 1.0) * bound;
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
    fan_in = width;
  }
  return net;
}

Matrix MlpNetwork::forward(const Matrix& x) const {
  if (x.cols() != weights.front().cols())
    throw Error(ErrorKind::DimensionMismatch, "MLP expects " + std::to_string(weights.front().cols()) + " features");
  return run(*this, x, 0.0, nullptr).out;
}

double MlpNetwork::loss(const Matrix& x, const Matrix& y, double weight_decay) const {
  const Matrix out = forward(x);
  double sq = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      if (!std::isnan(y(i, k))) {
        sq += (out(i, k) - y(i, k)) * (out(i, k) - y(i, k));
        ++count;
      }
  return (count ? sq / count : 0.0) + 0.5 * weight_decay * flat().squaredNorm();
}

Vector MlpNetwork::gradient(const Matrix& x, const Matrix& y, double weight_decay, double dropout, Rng* rng) const {
  const Pass p = run(*this, x, dropout, rng);
  Matrix delta = Matrix::Zero(y.rows(), y.cols());
  int count = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      if (!std::isnan(y(i, k))) {
        delta(i, k) = p.out(i, k) - y(i, k);
        ++count;
      }
  if (count) delta *= 2.0 / count;

  const std::size_t layers = weights.size();
  std::vector<Matrix> gw(layers);
  std::vector<Vector> gb(layers);
  for (std::size_t l = layers; l-- > 0;) {
    gw[l] = delta.transpose() * p.act[l] + weight_decay * weights[l];
    gb[l] = delta.colwise().sum().transpose() + weight_decay * biases[l];
    if (l == 0) break;
    Matrix back = delta * weights[l];
    if (p.mask[l - 1].size()) back = back.cwiseProduct(p.mask[l - 1]);
    delta = back.cwiseProduct((p.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }

  Vector g(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    g.segment(at, gw[l].size()) = Eigen::Map<const Vector>(gw[l].data(), gw[l].size());
    at += gw[l].size();
    g.segment(at, gb[l].size()) = gb[l];
    at += gb[l].size();
  }
  return g;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Vector MlpNetwork::flat() const {
  Vector theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    theta.segment(at, weights[l].size()) = Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
    at += weights[l].size();
    theta.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return theta;
}

void MlpNetwork::set_flat(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw Error(ErrorKind::DimensionMismatch, "parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Vector>(weights[l].data(), weights[l].size()) = theta.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = theta.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

nlohmann::json MlpNetwork::to_json() const {
  nlohmann::json w = nlohmann::json::array(), b = nlohmann::json::array();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    w.push_back(matrix_to_json(weights[l]));
    b.push_back(vector_to_json(biases[l]));
  }
  return {{"weights", w}, {"biases", b}};
}

MlpNetwork MlpNetwork::from_json(const nlohmann::json& j) {
  MlpNetwork net;
  for (const auto& w : j.at("weights")) net.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) net.biases.push_back(vector_from_json(b));
  return net;
}

nlohmann::json MlpModel::parameters() const {
  return {{"network", net.to_json()}, {"epochs", epochs}, {"best_epoch", best_epoch}};
}

MlpModel MlpModel::from_parameters(const nlohmann::json& j) {
  MlpModel m;
  m.net = MlpNetwork::from_json(j.at("network"));
  m.epochs = j.value("epochs", 0);
  m.best_epoch = j.value("best_epoch", 0);
  return m;
}

double masked_rmse(const Matrix& pred, const Matrix& y) {
  double sq = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index k = 0; k < y.cols(); ++k)
      if (!std::isnan(y(i, k))) {
        sq += (pred(i, k) - y(i, k)) * (pred(i, k) - y(i, k));
        ++count;
      }
  return count ? std::sqrt(sq / count) : 0.0;
}

MlpModel fit_mlp(const Matrix& x, const Matrix& y, const MlpParams& params, std::uint64_t seed,
                 const FitOptions& options) {
  if (x.rows() != y.rows()) throw Error(ErrorKind::DimensionMismatch, "X and Y have different row counts");
  if (x.rows() == 0) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "X contains non-finite values");
  if (params.hidden.empty()) throw Error(ErrorKind::InvalidArgument, "MLP needs at least one hidden layer");
  if (!(params.dropout >= 0.0 && params.dropout < 1.0) || !(params.learning_rate > 0.0) || params.batch_size < 1 ||
      params.max_epochs < 1 || !(params.weight_decay >= 0.0) || !(params.max_grad_norm >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "invalid MLP parameters");
  const bool has_valid = options.x_valid && options.y_valid && options.x_valid->rows() > 0;

  Rng rng(seed);
  MlpModel m;
  m.net = MlpNetwork::initialize(static_cast<int>(x.cols()), params.hidden, static_cast<int>(y.cols()), rng);
  Vector theta = m.net.flat();
  Vector best = theta;
  double best_valid = std::numeric_limits<double>::infinity();

  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(params.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(params.batch_size));
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Matrix xb(rows, x.cols()), yb(rows, y.cols());
      for (Eigen::Index r = 0; r < rows; ++r) {
        xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
        yb.row(r) = y.row(order[start + static_cast<std::size_t>(r)]);
      }
      Vector g = m.net.gradient(xb, yb, params.weight_decay, params.dropout, &rng);
      if (params.max_grad_norm > 0.0) {
        const double norm = g.norm();
        if (norm > params.max_grad_norm) g *= params.max_grad_norm / norm;
      }
      theta -= params.learning_rate * g;
      m.net.set_flat(theta);
    }
    const double train = masked_rmse(m.net.forward(x), y);
    if (!std::isfinite(train))
      throw Error(ErrorKind::NonFinite, "MLP training diverged at epoch " + std::to_string(epoch) +
                                            " (lr " + std::to_string(params.learning_rate) + ")");
    m.train_rmse.push_back(train);
    m.epochs = epoch;
    if (!has_valid) continue;
    const double valid = masked_rmse(m.net.forward(*options.x_valid), *options.y_valid);
    m.valid_rmse.push_back(valid);
    if (valid < best_valid) {
      best_valid = valid;
      best = theta;
      m.best_epoch = epoch;
    } else if (epoch - m.best_epoch >= params.patience) {
      break;
    }
  }
  if (has_valid) {
    m.net.set_flat(best);
  } else {
    m.best_epoch = m.epochs;
  }
  return m;
}

}  // namespace qspr::models
