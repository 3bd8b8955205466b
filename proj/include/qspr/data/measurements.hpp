#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspr/assay.hpp"
#include "qspr/data/csv.hpp"

namespace qspr::data {

/// Plate measurements in the published layout: an identifier, the plate number
/// and the 18 value columns {BBB,L,H,DOD,PS,PC} x {MR,Pe,LogPe}.
struct MeasurementTable {
  std::vector<assay::PlateRecord> rows;

  /// Distinct compound ids in first-seen order.
  std::vector<std::string> compound_ids() const;
};

/// "BBB_MR", "BBB_Pe", "BBB_LogPe", ...
std::vector<std::string> measurement_value_columns();
std::string log_pe_column(Membrane m);

MeasurementTable parse_measurements(const CsvTable& csv, std::string_view source = "<memory>");
MeasurementTable load_measurements(const std::filesystem::path& path);
CsvTable measurements_to_csv(const MeasurementTable& table);

/// One row per compound holding the mean of the available repeats.
MeasurementTable average_repeats(const MeasurementTable& table);

/// Rows follow `ids`; missing values (or unknown ids) are NaN.
Eigen::MatrixXd log_pe_matrix(const MeasurementTable& table, const std::vector<std::string>& ids);

}  // namespace qspr::data
