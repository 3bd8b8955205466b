#include "qspr/data/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "qspr/error.hpp"

namespace qspr::data {

namespace {

constexpr std::array<std::string_view, 3> kQuantities{"MR", "Pe", "LogPe"};
constexpr std::array<std::string_view, 6> kIdColumns{"compound_id", "ID", "Id", "id", "compound_name", "Molecule"};
constexpr std::array<std::string_view, 4> kPlateColumns{"plate_number", "plate", "Plate", "plate_no"};

std::string value_column(Membrane m, std::size_t q) {
  return std::string(membrane_name(m)) + "_" + std::string(kQuantities[q]);
}

template <std::size_t N>
std::optional<std::size_t> first_of(const CsvTable& csv, const std::array<std::string_view, N>& names) {
  for (auto n : names)
    if (auto c = csv.column(n)) return c;
  return std::nullopt;
}

bool looks_like_value_column(const std::string& name) {
  for (auto q : kQuantities) {
    const std::string suffix = "_" + std::string(q);
    if (name.size() > suffix.size() && name.ends_with(suffix)) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> MeasurementTable::compound_ids() const {
  std::vector<std::string> ids;
  std::unordered_map<std::string, bool> seen;
  for (const auto& r : rows)
    if (seen.emplace(r.compound_id, true).second) ids.push_back(r.compound_id);
  return ids;
}

std::vector<std::string> measurement_value_columns() {
  std::vector<std::string> cols;
  for (Membrane m : kAllMembranes)
    for (std::size_t q = 0; q < kQuantities.size(); ++q) cols.push_back(value_column(m, q));
  return cols;
}

std::string log_pe_column(Membrane m) { return value_column(m, 2); }

MeasurementTable parse_measurements(const CsvTable& csv, std::string_view source) {
  const auto id_col = first_of(csv, kIdColumns);
  const auto plate_col = first_of(csv, kPlateColumns);
  const auto expected = measurement_value_columns();

  std::vector<std::string> missing, extra;
  if (!id_col) missing.emplace_back("compound_id");
  if (!plate_col) missing.emplace_back("plate_number");
  for (const auto& c : expected)
    if (!csv.column(c)) missing.push_back(c);
  for (const auto& h : csv.header)
    if (looks_like_value_column(h) && std::find(expected.begin(), expected.end(), h) == expected.end())
      extra.push_back(h);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = std::string(source) + ": measurement schema mismatch;";
    if (!missing.empty()) {
      msg += " missing:";
      for (const auto& m : missing) msg += " " + m;
    }
    if (!extra.empty()) {
      msg += " unexpected:";
      for (const auto& e : extra) msg += " " + e;
    }
    throw Error(ErrorKind::SchemaError, msg);
  }

  std::array<std::array<std::size_t, 3>, kMembraneCount> cols{};
  for (Membrane m : kAllMembranes)
    for (std::size_t q = 0; q < 3; ++q) cols[static_cast<std::size_t>(m)][q] = *csv.column(value_column(m, q));

  MeasurementTable table;
  table.rows.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = r + 2;
    if (row.size() != csv.header.size()) {
      throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(line) + " has " +
                                             std::to_string(row.size()) + " fields, expected " +
                                             std::to_string(csv.header.size()));
    }
    assay::PlateRecord rec;
    rec.compound_id = row[*id_col];
    if (rec.compound_id.empty())
      throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(line) + ": empty compound id");
    const auto plate = parse_number(row[*plate_col], source, line, csv.header[*plate_col]);
    rec.plate_number = plate ? static_cast<int>(*plate) : 0;
    for (Membrane m : kAllMembranes) {
      const auto mi = static_cast<std::size_t>(m);
      rec.mr[mi] = parse_number(row[cols[mi][0]], source, line, csv.header[cols[mi][0]]);
      rec.pe[mi] = parse_number(row[cols[mi][1]], source, line, csv.header[cols[mi][1]]);
      rec.log_pe[mi] = parse_number(row[cols[mi][2]], source, line, csv.header[cols[mi][2]]);
      if (rec.pe[mi] && rec.log_pe[mi] && *rec.pe[mi] > 0.0 &&
          std::abs(std::log10(*rec.pe[mi]) - *rec.log_pe[mi]) > 1e-6) {
        throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(line) + ", column '" +
                                               log_pe_column(m) + "': logPe disagrees with log10(Pe)");
      }
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

MeasurementTable load_measurements(const std::filesystem::path& path) {
  return parse_measurements(read_csv(path), path.string());
}

CsvTable measurements_to_csv(const MeasurementTable& table) {
  CsvTable csv;
  csv.header = {"compound_id", "plate_number"};
  for (const auto& c : measurement_value_columns()) csv.header.push_back(c);
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.compound_id, std::to_string(r.plate_number)};
    for (std::size_t m = 0; m < kMembraneCount; ++m) {
      row.push_back(cell(r.mr[m]));
      row.push_back(cell(r.pe[m]));
      row.push_back(cell(r.log_pe[m]));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

MeasurementTable average_repeats(const MeasurementTable& table) {
  std::map<std::string, std::vector<assay::PlateRecord>> groups;
  for (const auto& r : table.rows) groups[r.compound_id].push_back(r);
  MeasurementTable out;
  for (const auto& id : table.compound_ids()) {
    const auto& g = groups.at(id);
    assay::PlateRecord rec;
    rec.compound_id = id;
    rec.plate_number = g.front().plate_number;
    rec.mr = assay::aggregate_field(g, &assay::PlateRecord::mr);
    rec.pe = assay::aggregate_field(g, &assay::PlateRecord::pe);
    rec.log_pe = assay::aggregate_repeats(g);
    out.rows.push_back(std::move(rec));
  }
  return out;
}

Eigen::MatrixXd log_pe_matrix(const MeasurementTable& table, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const assay::PlateRecord*> by_id;
  for (const auto& r : table.rows) by_id.emplace(r.compound_id, &r);
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(ids.size()), kMembraneCount,
                                                std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    if (it == by_id.end()) continue;
    for (std::size_t m = 0; m < kMembraneCount; ++m)
      if (it->second->log_pe[m]) y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = *it->second->log_pe[m];
  }
  return y;
}

}  // namespace qspr::data
