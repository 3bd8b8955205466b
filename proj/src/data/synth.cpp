#include "qspr/data/synth.hpp"

#include <cmath>
#include <cstdio>

#include "qspr/error.hpp"
#include "qspr/membrane.hpp"
#include "qspr/random.hpp"

namespace qspr::data {

SynthDataset synth_dataset(std::uint64_t seed, std::size_t n_compounds, std::size_t n_features,
                           std::size_t n_targets, double noise_sd, double shared) {
  if (n_compounds == 0 || n_features == 0 || n_targets == 0)
    throw Error(ErrorKind::InvalidArgument, "synth_dataset: counts must be positive");
  if (noise_sd < 0.0 || shared < 0.0 || shared > 1.0)
    throw Error(ErrorKind::InvalidArgument, "synth_dataset: noise_sd >= 0 and shared in [0,1] required");
  const auto n = static_cast<Eigen::Index>(n_compounds);
  const auto d = static_cast<Eigen::Index>(n_features);
  const auto t = static_cast<Eigen::Index>(n_targets);

  Rng rng(seed);
  SynthDataset s;
  s.table.representation = Representation::Percepta;
  s.table.values.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s.table.values(i, j) = rng.normal();

  Eigen::VectorXd common(d);
  for (Eigen::Index j = 0; j < d; ++j) common(j) = rng.normal();
  s.weights.resize(d, t);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index k = 0; k < t; ++k)
    for (Eigen::Index j = 0; j < d; ++j)
      s.weights(j, k) = scale * (std::sqrt(shared) * common(j) + std::sqrt(1.0 - shared) * rng.normal());
  s.intercepts.resize(t);
  for (Eigen::Index k = 0; k < t; ++k) s.intercepts(k) = -5.0 + rng.normal();

  s.targets = s.table.values * s.weights;
  s.targets.rowwise() += s.intercepts.transpose();
  if (noise_sd > 0.0)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < t; ++k) s.targets(i, k) += noise_sd * rng.normal();

  char buf[32];
  for (std::size_t i = 0; i < n_compounds; ++i) {
    std::snprintf(buf, sizeof buf, "C%04zu", i + 1);
    s.table.ids.emplace_back(buf);
  }
  for (std::size_t j = 0; j < n_features; ++j) s.table.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t k = 0; k < n_targets; ++k) {
    s.target_names.push_back(n_targets == kMembraneCount
                                 ? std::string(membrane_name(kAllMembranes[k])) + "_LogPe"
                                 : "target_" + std::to_string(k));
  }
  if (n_compounds >= 5) {
    s.table.folds = assign_folds(s.table.ids, derive_seed(seed, {0xf01d}), 5).folds;
  } else {
    s.table.folds.assign(n_compounds, -1);
  }
  return s;
}

}  // namespace qspr::data
