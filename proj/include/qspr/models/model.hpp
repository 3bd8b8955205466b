#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace qspr::models {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Hyperparams = nlohmann::json;

enum class ModelClass { DTR, RFR, EN, MTEN, BayesRidge, PLS, SVR, GBT, MLP };

std::string_view model_class_name(ModelClass c) noexcept;
/// Accepts the class names above plus "XGB" for GBT. Throws ConfigError.
ModelClass parse_model_class(std::string_view name);
const std::vector<ModelClass>& all_model_classes();
/// Classes that fit all targets jointly when given several.
bool is_multitask(ModelClass c) noexcept;

struct RegressorSpec {
  ModelClass model_class = ModelClass::EN;
  Hyperparams params = Hyperparams::object();
  std::uint64_t seed = 0;
};

nlohmann::json spec_to_json(const RegressorSpec& spec);
RegressorSpec spec_from_json(const nlohmann::json& j);

/// Fitted state of one model class. Targets are the columns of the training Y.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual Matrix predict(const Matrix& x) const = 0;
  virtual nlohmann::json parameters() const = 0;
  /// Non-zero coefficients, leaves, support vectors, components or weights.
  virtual double effective_parameters() const = 0;
  virtual std::size_t n_features() const = 0;
  virtual std::size_t n_outputs() const = 0;
  virtual bool converged() const { return true; }
};

/// Optional held-out data; the MLP uses it for early stopping.
struct FitOptions {
  const Matrix* x_valid = nullptr;
  const Matrix* y_valid = nullptr;
};

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(RegressorSpec spec, std::shared_ptr<const Regressor> impl);

  const RegressorSpec& spec() const noexcept { return spec_; }
  const Regressor& regressor() const { return *impl_; }

  /// n x T predictions. Throws DimensionMismatch on a feature-count mismatch.
  Matrix predict(const Matrix& x) const;
  double effective_parameters() const { return impl_->effective_parameters(); }
  bool converged() const { return impl_->converged(); }

  /// Versioned document holding the spec and every fitted parameter.
  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

 private:
  RegressorSpec spec_;
  std::shared_ptr<const Regressor> impl_;
};

/// Fits any class. Y is n x T with NaN marking missing targets; single-task
/// classes fit one independent model per column on that column's observed rows.
TrainedModel fit(const RegressorSpec& spec, const Matrix& x, const Matrix& y, const FitOptions& options = {});

inline Matrix predict(const TrainedModel& model, const Matrix& x) { return model.predict(x); }

/// Rows of (x, y column) where the target is observed.
void observed_rows(const Matrix& x, const Matrix& y, Eigen::Index column, Matrix& x_out, Vector& y_out);

}  // namespace qspr::models
