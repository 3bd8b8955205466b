#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspr/data/descriptors.hpp"

namespace qspr::data {

struct SynthDataset {
  DescriptorTable table;
  Eigen::MatrixXd targets;  // n x T
  Eigen::MatrixXd weights;  // d x T, planted
  Eigen::VectorXd intercepts;
  std::vector<std::string> target_names;
};

/// Standard-normal features and targets Y = X·W + b + noise. Task weight columns
/// share a common component (`shared` is its variance fraction) so the targets
/// are correlated; the signal variance of each target is about 1.
SynthDataset synth_dataset(std::uint64_t seed, std::size_t n_compounds, std::size_t n_features,
                           std::size_t n_targets, double noise_sd, double shared = 0.8);

}  // namespace qspr::data
