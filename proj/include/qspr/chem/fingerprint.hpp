#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qspr::chem {

/// Sparse bit-vector: sorted, duplicate-free active indices.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(std::vector<std::uint32_t> bits, std::optional<std::uint32_t> width = std::nullopt);

  const std::vector<std::uint32_t>& bits() const noexcept { return bits_; }
  std::optional<std::uint32_t> width() const noexcept { return width_; }
  bool empty() const noexcept { return bits_.empty(); }

  /// Space-separated index list as stored in the ECFP table.
  static Fingerprint parse(std::string_view text, std::optional<std::uint32_t> width = std::nullopt);

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  std::vector<std::uint32_t> bits_;
  std::optional<std::uint32_t> width_;
};

Fingerprint fold_fingerprint(const Fingerprint& fp, std::uint32_t width);

/// |a ∩ b| / |a ∪ b|, 1.0 for two empty sets. Throws WidthMismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

/// Greedy MaxMin picking on Tanimoto distance. The first pick is derived from
/// `seed`; later picks maximize the minimum distance to the picked set, ties to
/// the lowest index. Throws KTooLarge when k exceeds the pool.
std::vector<std::size_t> maxmin_diversity_pick(std::span<const Fingerprint> fps, std::size_t k,
                                               std::uint64_t seed);

/// Index of the first pick for a pool of size n under `seed`.
std::size_t maxmin_first_pick(std::size_t n, std::uint64_t seed);

}  // namespace qspr::chem
