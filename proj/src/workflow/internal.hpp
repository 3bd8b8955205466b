#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qspr/assay.hpp"
#include "qspr/data/measurements.hpp"
#include "qspr/pca.hpp"
#include "qspr/tuning/tuning.hpp"
#include "qspr/workflow.hpp"

namespace qspr::workflow::detail {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Dotted lookups into the config document; nullptr when absent.
const Json* find(const Json& doc, std::string_view dotted);
std::string get_string(const RunConfig& cfg, std::string_view key, const std::string& fallback);
double get_number(const RunConfig& cfg, std::string_view key, double fallback);
long long get_int(const RunConfig& cfg, std::string_view key, long long fallback);
bool get_bool(const RunConfig& cfg, std::string_view key, bool fallback);
std::optional<std::vector<std::string>> get_strings(const RunConfig& cfg, std::string_view key);
/// Resolved against the config's directory; nullopt when the key is absent.
std::optional<fs::path> input_path(const RunConfig& cfg, std::string_view key);
fs::path require_input(const RunConfig& cfg, std::string_view key);

assay::AssayGeometry geometry(const RunConfig& cfg);

/// Published per-repeat layout, or raw concentrations (compound_id, plate_number,
/// {M}_CD0, {M}_CDt, {M}_CAt) which are converted well by well.
data::MeasurementTable load_measurement_table(const fs::path& path, const assay::AssayGeometry& g);
bool is_raw_concentration_csv(const data::CsvTable& csv);
data::MeasurementTable measurements_from_raw(const data::CsvTable& csv, const assay::AssayGeometry& g,
                                             std::string_view source);

inline constexpr std::size_t kPcaTargets = 3;

struct Targets {
  std::vector<std::string> ids;
  std::vector<std::string> base_names;  // the per-membrane logPe targets
  Eigen::MatrixXd base;                 // ids x base_names
  std::optional<pca::PcaModel> pca;
  Eigen::MatrixXd pca_scores;           // NaN rows for compounds with a missing membrane
  std::vector<std::size_t> pca_rows;    // rows the PCA was fitted on
  std::vector<std::string> names() const;  // base names then PCA_i
  Eigen::MatrixXd all() const;
  std::vector<std::string> warnings;
};

struct Inputs {
  Targets targets;
  std::vector<tuning::Dataset> datasets;  // y holds every target in Targets::names()
  tuning::CvPlan plan;
  std::vector<std::string> warnings;
};

bool synth_mode(const RunConfig& cfg);
Targets load_targets(const RunConfig& cfg);
Inputs load_inputs(const RunConfig& cfg);

/// Column subset of a dataset's targets, by name. Throws ConfigError for unknown names.
tuning::Dataset with_targets(const tuning::Dataset& d, const std::vector<std::string>& names);

void write_output(const RunConfig& cfg, Report& report, const fs::path& name, std::string_view text);

}  // namespace qspr::workflow::detail
