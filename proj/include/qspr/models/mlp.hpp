#pragma once

#include <cstdint>
#include <vector>

#include "qspr/models/model.hpp"
#include "qspr/random.hpp"

namespace qspr::models {

struct MlpParams {
  std::vector<int> hidden{50};
  double dropout = 0.0;  // drop probability after each hidden ReLU
  double weight_decay = 0.0;
  double learning_rate = 0.1;
  int max_epochs = 200;
  int patience = 20;
  int batch_size = 16;
  double max_grad_norm = 1.0;  // minibatch gradients are rescaled to at most this L2 norm; 0 disables
};

/// Fully connected ReLU network with linear output heads.
class MlpNetwork {
 public:
  std::vector<Matrix> weights;  // out x in per layer
  std::vector<Vector> biases;

  /// PyTorch-style U(−1/√fan_in, 1/√fan_in) initialization.
  static MlpNetwork initialize(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng);

  Matrix forward(const Matrix& x) const;

  /// Σ_obs (ŷ − y)² / n_obs + (wd/2)·‖θ‖², NaN targets masked, no dropout.
  double loss(const Matrix& x, const Matrix& y, double weight_decay) const;

  /// Gradient of loss() (dropout off) or of one dropout-masked step when `rng` is given.
  Vector gradient(const Matrix& x, const Matrix& y, double weight_decay, double dropout = 0.0, Rng* rng = nullptr) const;

  std::size_t parameter_count() const;
  Vector flat() const;
  void set_flat(const Vector& theta);

  nlohmann::json to_json() const;
  static MlpNetwork from_json(const nlohmann::json& j);
};

class MlpModel : public Regressor {
 public:
  MlpNetwork net;
  int epochs = 0;
  int best_epoch = 0;
  std::vector<double> train_rmse;  // per epoch
  std::vector<double> valid_rmse;  // per epoch, empty without validation data

  Matrix predict(const Matrix& x) const override { return net.forward(x); }
  nlohmann::json parameters() const override;
  double effective_parameters() const override { return static_cast<double>(net.parameter_count()); }
  std::size_t n_features() const override { return static_cast<std::size_t>(net.weights.front().cols()); }
  std::size_t n_outputs() const override { return static_cast<std::size_t>(net.weights.back().rows()); }

  static MlpModel from_parameters(const nlohmann::json& j);
};

/// Minibatch SGD with L2 weight decay, inverted dropout and gradient-norm clipping. With validation data,
/// stops after `patience` epochs without a better validation RMSE and restores the
/// best epoch's weights; otherwise trains for max_epochs. Throws NonFinite on divergence.
MlpModel fit_mlp(const Matrix& x, const Matrix& y, const MlpParams& params, std::uint64_t seed,
                 const FitOptions& options = {});

/// RMSE pooled over all observed cells.
double masked_rmse(const Matrix& pred, const Matrix& y);

}  // namespace qspr::models
