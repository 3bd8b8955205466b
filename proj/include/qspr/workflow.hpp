#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qspr::workflow {

struct RunConfig {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  std::filesystem::path base_dir = ".";  // relative input paths resolve against this
  std::filesystem::path out_dir = "qspr_out";
  int workers = 1;
  std::uint64_t seed = 0;
};

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "QSPR_OUT_DIR";

/// Reads a config file (or starts empty). Output directory precedence: the
/// explicit `out` argument, then QSPR_OUT_DIR, then `out` in the file.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::optional<std::filesystem::path>& out = std::nullopt);

/// Checks class names, representations, grids, modes and input paths before any
/// compute. Throws ConfigError.
void validate(const RunConfig& cfg);

struct Report {
  std::vector<std::filesystem::path> files;  // relative to the output directory
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
};

Report cmd_assay(const RunConfig& cfg);
Report cmd_desalt(const RunConfig& cfg);
Report cmd_pca(const RunConfig& cfg);
Report cmd_sweep(const RunConfig& cfg);
Report cmd_select(const RunConfig& cfg);
Report cmd_test(const RunConfig& cfg);
Report cmd_importance(const RunConfig& cfg);
Report cmd_profiles(const RunConfig& cfg);
Report cmd_scaffolds(const RunConfig& cfg);
Report cmd_design(const RunConfig& cfg);
/// assay (when measurements are given), pca, sweep, select, test, importance,
/// profiles and scaffolds (when SMILES are given). Throws AllTrialsFailed when
/// every sweep cell failed; partial failures are listed in the report.
Report cmd_pipeline(const RunConfig& cfg);

/// Writes manifest.json listing every output file with its SHA-256, the config
/// hash and the seed. Worker count and output path are deliberately left out.
void write_manifest(const RunConfig& cfg, std::string_view command, Report& report);

std::string sha256_hex(std::string_view bytes);

}  // namespace qspr::workflow
