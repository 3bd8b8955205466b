#include "qspr/pca.hpp"

#include <cmath>
#include <string>

#include "qspr/error.hpp"

namespace qspr::pca {

PcaModel pca_fit(const Eigen::MatrixXd& x, std::size_t k) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error(ErrorKind::DegenerateInput, "PCA needs at least 2 rows, got " + std::to_string(n));
  if (k == 0 || k > static_cast<std::size_t>(std::min(n, d)))
    throw Error(ErrorKind::InvalidArgument, "PCA: k must be in 1..min(n, d)");
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "PCA input contains missing or non-finite cells");

  PcaModel m;
  m.n_samples = static_cast<std::size_t>(n);
  m.column_means = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.column_means.transpose();
  const double total = centered.squaredNorm();
  if (!(total > 0.0)) throw Error(ErrorKind::DegenerateInput, "PCA input is constant");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);
  m.singular_values = svd.singularValues().head(kk);
  m.components = svd.matrixV().leftCols(kk).transpose();
  for (Eigen::Index i = 0; i < kk; ++i) {
    Eigen::Index arg = 0;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (m.components(i, arg) < 0.0) m.components.row(i) *= -1.0;
  }
  m.explained_variance_ratio = m.singular_values.array().square() / total;
  return m;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.column_means.size())
    throw Error(ErrorKind::DimensionMismatch, "PCA model expects " + std::to_string(model.column_means.size()) +
                                                  " columns, got " + std::to_string(x.cols()));
  return (x.rowwise() - model.column_means.transpose()) * model.components.transpose();
}

Eigen::MatrixXd pca_inverse_transform(const PcaModel& model, const Eigen::MatrixXd& scores) {
  if (scores.cols() != model.components.rows())
    throw Error(ErrorKind::DimensionMismatch, "score width does not match the number of components");
  Eigen::MatrixXd x = scores * model.components;
  x.rowwise() += model.column_means.transpose();
  return x;
}

CompleteRows drop_incomplete_rows(const Eigen::MatrixXd& x) {
  CompleteRows out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) (x.row(i).hasNaN() ? out.dropped : out.kept).push_back(static_cast<std::size_t>(i));
  out.matrix.resize(static_cast<Eigen::Index>(out.kept.size()), x.cols());
  for (std::size_t r = 0; r < out.kept.size(); ++r) out.matrix.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(out.kept[r]));
  return out;
}

}  // namespace qspr::pca
