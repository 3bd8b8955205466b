#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace qspr {

// The six-membrane PAMPA panel, in the column order used throughout.
enum class Membrane { BBB = 0, L, H, DOD, PS, PC };

inline constexpr std::size_t kMembraneCount = 6;

inline constexpr std::array<Membrane, kMembraneCount> kAllMembranes{
    Membrane::BBB, Membrane::L, Membrane::H, Membrane::DOD, Membrane::PS, Membrane::PC};

constexpr std::string_view membrane_name(Membrane m) noexcept {
  constexpr std::array<std::string_view, kMembraneCount> names{"BBB", "L", "H", "DOD", "PS", "PC"};
  return names[static_cast<std::size_t>(m)];
}

std::optional<Membrane> parse_membrane(std::string_view name);

// Per-membrane values where any entry may be absent.
template <typename T>
using PerMembrane = std::array<std::optional<T>, kMembraneCount>;

}  // namespace qspr
