#pragma once

#include <filesystem>
#include <string_view>

#include "json.hpp"

namespace qspr::config {

/// Parses the TOML subset used by run configs: [table] and [a.b] headers,
/// bare/quoted/dotted keys, basic and literal strings, integers, floats,
/// booleans, (multi-line) arrays and inline tables, and # comments.
/// Key order is preserved. Throws ConfigError with the line number.
nlohmann::ordered_json parse_toml(std::string_view text, std::string_view source = "<config>");
nlohmann::ordered_json load_toml(const std::filesystem::path& path);

}  // namespace qspr::config
