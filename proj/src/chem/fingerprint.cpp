#include "qspr/chem/fingerprint.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

#include "qspr/error.hpp"
#include "qspr/random.hpp"

namespace qspr::chem {

Fingerprint::Fingerprint(std::vector<std::uint32_t> bits, std::optional<std::uint32_t> width)
    : bits_(std::move(bits)), width_(width) {
  std::sort(bits_.begin(), bits_.end());
  bits_.erase(std::unique(bits_.begin(), bits_.end()), bits_.end());
  if (width_ && *width_ == 0) throw Error(ErrorKind::InvalidArgument, "fingerprint width must be > 0");
  if (width_ && !bits_.empty() && bits_.back() >= *width_) {
    throw Error(ErrorKind::InvalidArgument, "fingerprint bit " + std::to_string(bits_.back()) +
                                                " outside width " + std::to_string(*width_));
  }
}

Fingerprint Fingerprint::parse(std::string_view text, std::optional<std::uint32_t> width) {
  std::vector<std::uint32_t> bits;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '[' || text[i] == ']' ||
                               text[i] == ',' || text[i] == ';')) {
      ++i;
    }
    if (i >= text.size()) break;
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
    if (ec != std::errc()) {
      throw Error(ErrorKind::ParseError, "bad fingerprint index near '" + std::string(text.substr(i, 8)) + "'");
    }
    bits.push_back(v);
    i = static_cast<std::size_t>(ptr - text.data());
  }
  return Fingerprint(std::move(bits), width);
}

Fingerprint fold_fingerprint(const Fingerprint& fp, std::uint32_t width) {
  if (width == 0) throw Error(ErrorKind::InvalidArgument, "fold width must be > 0");
  std::vector<std::uint32_t> bits;
  bits.reserve(fp.bits().size());
  for (std::uint32_t b : fp.bits()) bits.push_back(b % width);
  return Fingerprint(std::move(bits), width);
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width() != b.width()) throw Error(ErrorKind::WidthMismatch, "fingerprints have different widths");
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.bits().begin();
  auto ib = b.bits().begin();
  while (ia != a.bits().end() && ib != b.bits().end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.bits().size() + b.bits().size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::size_t maxmin_first_pick(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::EmptyInput, "empty pool");
  return static_cast<std::size_t>(Rng(seed).index(n));
}

std::vector<std::size_t> maxmin_diversity_pick(std::span<const Fingerprint> fps, std::size_t k,
                                               std::uint64_t seed) {
  const std::size_t n = fps.size();
  if (k > n) throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds pool of " + std::to_string(n));
  std::vector<std::size_t> picked;
  if (k == 0) return picked;
  picked.reserve(k);
  std::vector<bool> taken(n, false);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

  std::size_t next = maxmin_first_pick(n, seed);
  while (picked.size() < k) {
    picked.push_back(next);
    taken[next] = true;
    if (picked.size() == k) break;
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(min_dist[i], 1.0 - tanimoto(fps[i], fps[next]));
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    next = best;
  }
  return picked;
}

}  // namespace qspr::chem
