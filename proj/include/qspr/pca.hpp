#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qspr::pca {

struct PcaModel {
  Eigen::VectorXd column_means;              // d
  Eigen::MatrixXd components;                // k x d, orthonormal rows
  Eigen::VectorXd singular_values;           // k
  Eigen::VectorXd explained_variance_ratio;  // k, relative to the total variance
  std::size_t n_samples = 0;
};

/// Center-only SVD. Each component is flipped so its largest-magnitude loading
/// is positive. Throws DegenerateInput for n < 2 or a constant matrix.
PcaModel pca_fit(const Eigen::MatrixXd& x, std::size_t k);

/// (x - means) · componentsᵀ. Throws DimensionMismatch.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& x);

/// scores · components + means.
Eigen::MatrixXd pca_inverse_transform(const PcaModel& model, const Eigen::MatrixXd& scores);

struct CompleteRows {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};

/// Removes rows with any NaN cell, remembering which ones went.
CompleteRows drop_incomplete_rows(const Eigen::MatrixXd& x);

}  // namespace qspr::pca
