#include "qspr/data/descriptors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "json.hpp"

#include "qspr/error.hpp"
#include "qspr/random.hpp"

namespace qspr::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::size_t> find_id_column(const CsvTable& csv) {
  for (std::string_view n : {"compound_id", "ID", "Id", "id", "compound_name", "Molecule"})
    if (auto c = csv.column(n)) return c;
  return std::nullopt;
}

std::optional<std::size_t> find_fold_column(const CsvTable& csv) {
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    const auto h = lower(csv.header[i]);
    if (h == "fold" || h == "folds" || h == "cv_fold" || h == "cv-fold" || h == "cv fold" || h == "fold_id")
      return i;
  }
  return std::nullopt;
}

void check_row_width(const CsvTable& csv, std::size_t r, std::string_view source) {
  if (csv.rows[r].size() != csv.header.size()) {
    throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(r + 2) + " has " +
                                           std::to_string(csv.rows[r].size()) + " fields, expected " +
                                           std::to_string(csv.header.size()));
  }
}

}  // namespace

std::string_view representation_name(Representation r) noexcept {
  switch (r) {
    case Representation::Percepta: return "percepta";
    case Representation::RDKit: return "rdkit";
    case Representation::ECFP: return "ecfp";
    case Representation::CDDD: return "cddd";
    case Representation::MolBERT: return "molbert";
  }
  return "?";
}

Representation parse_representation(std::string_view name) {
  const auto n = lower(name);
  for (auto r : {Representation::Percepta, Representation::RDKit, Representation::ECFP, Representation::CDDD,
                 Representation::MolBERT})
    if (n == representation_name(r)) return r;
  throw Error(ErrorKind::ConfigError, "unknown representation '" + std::string(name) + "'");
}

std::size_t expected_width(Representation r) noexcept {
  switch (r) {
    case Representation::Percepta: return 38;
    case Representation::RDKit: return 96;
    case Representation::ECFP: return 2000;
    case Representation::CDDD: return 512;
    case Representation::MolBERT: return 768;
  }
  return 0;
}

std::optional<int> FoldAssignment::fold_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return folds[i];
  return std::nullopt;
}

std::vector<std::size_t> FoldAssignment::fold_sizes(int n_folds) const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n_folds), 0);
  for (int f : folds)
    if (f >= 0 && f < n_folds) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

FoldAssignment assign_folds(const std::vector<std::string>& ids, std::uint64_t seed, int n_folds) {
  if (n_folds < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 folds");
  if (ids.size() < static_cast<std::size_t>(n_folds))
    throw Error(ErrorKind::TooFewCompounds,
                std::to_string(ids.size()) + " compounds cannot fill " + std::to_string(n_folds) + " folds");
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  FoldAssignment fa;
  fa.ids = ids;
  fa.folds.assign(ids.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) fa.folds[order[k]] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
  return fa;
}

std::optional<std::size_t> DescriptorTable::row_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  return std::nullopt;
}

FoldAssignment DescriptorTable::fold_assignment() const { return FoldAssignment{ids, folds}; }

DescriptorTable parse_descriptors(const CsvTable& csv, Representation rep, std::string_view source) {
  if (csv.header.empty()) throw Error(ErrorKind::SchemaError, std::string(source) + ": empty header");
  const std::size_t id_col = find_id_column(csv).value_or(0);
  const auto fold_col = find_fold_column(csv);

  DescriptorTable t;
  t.representation = rep;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < csv.header.size(); ++c)
    if (c != id_col && (!fold_col || c != *fold_col)) feature_cols.push_back(c);

  if (rep == Representation::ECFP) {
    if (feature_cols.size() != 1)
      throw Error(ErrorKind::SchemaError, std::string(source) + ": ECFP table needs exactly one bit-list column");
    const auto width = static_cast<std::uint32_t>(expected_width(rep));
    for (std::uint32_t b = 0; b < width; ++b) t.feature_names.push_back("bit_" + std::to_string(b));
    t.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(csv.rows.size()), width);
  } else {
    for (auto c : feature_cols) t.feature_names.push_back(csv.header[c]);
    t.values.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  }

  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    check_row_width(csv, r, source);
    const auto& row = csv.rows[r];
    const auto& id = row[id_col];
    if (!seen.emplace(id, r).second)
      throw Error(ErrorKind::SchemaError, std::string(source) + ": duplicate compound id '" + id + "'");
    t.ids.push_back(id);
    if (fold_col) {
      const auto f = parse_number(row[*fold_col], source, r + 2, csv.header[*fold_col]);
      if (!f || *f != std::floor(*f) || *f < 0 || *f > 4)
        throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(r + 2) + ": fold must be 0..4");
      t.folds.push_back(static_cast<int>(*f));
    } else {
      t.folds.push_back(-1);
    }
    const auto ri = static_cast<Eigen::Index>(r);
    if (rep == Representation::ECFP) {
      const auto fp = chem::Fingerprint::parse(row[feature_cols[0]], static_cast<std::uint32_t>(expected_width(rep)));
      for (auto b : fp.bits()) t.values(ri, static_cast<Eigen::Index>(b)) = 1.0;
      t.fingerprints.push_back(fp);
    } else {
      for (std::size_t k = 0; k < feature_cols.size(); ++k) {
        const auto v = parse_number(row[feature_cols[k]], source, r + 2, csv.header[feature_cols[k]]);
        t.values(ri, static_cast<Eigen::Index>(k)) = v.value_or(kNaN);
      }
    }
  }
  return t;
}

DescriptorTable load_descriptors(const std::filesystem::path& path, Representation rep) {
  return parse_descriptors(read_csv(path), rep, path.string());
}

CsvTable descriptors_to_csv(const DescriptorTable& t) {
  CsvTable csv;
  csv.header = {"compound_id", "fold"};
  const bool ecfp = t.representation == Representation::ECFP && t.fingerprints.size() == t.ids.size();
  if (ecfp) {
    csv.header.emplace_back("ecfp");
  } else {
    for (const auto& n : t.feature_names) csv.header.push_back(n);
  }
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    std::vector<std::string> row{t.ids[i], std::to_string(t.folds[i])};
    if (ecfp) {
      std::string bits;
      for (auto b : t.fingerprints[i].bits()) {
        if (!bits.empty()) bits += ' ';
        bits += std::to_string(b);
      }
      row.push_back(bits);
    } else {
      for (Eigen::Index c = 0; c < t.values.cols(); ++c) row.push_back(format_double(t.values(static_cast<Eigen::Index>(i), c)));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

void check_width(const DescriptorTable& t) {
  const auto want = expected_width(t.representation);
  if (static_cast<std::size_t>(t.values.cols()) != want) {
    throw Error(ErrorKind::SchemaError, std::string(representation_name(t.representation)) + " table has " +
                                            std::to_string(t.values.cols()) + " features, expected " +
                                            std::to_string(want));
  }
}

DescriptorTable select_rows(const DescriptorTable& t, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.ids.size(); ++i) index.emplace(t.ids[i], i);
  DescriptorTable out;
  out.representation = t.representation;
  out.feature_names = t.feature_names;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), t.values.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it = index.find(ids[k]);
    if (it == index.end())
      throw Error(ErrorKind::SchemaError, "compound '" + ids[k] + "' missing from " +
                                              std::string(representation_name(t.representation)) + " table");
    out.ids.push_back(ids[k]);
    out.folds.push_back(t.folds[it->second]);
    out.values.row(static_cast<Eigen::Index>(k)) = t.values.row(static_cast<Eigen::Index>(it->second));
    if (!t.fingerprints.empty()) out.fingerprints.push_back(t.fingerprints[it->second]);
  }
  return out;
}

const std::vector<std::string>& percepta_retained_names() {
  static const std::vector<std::string> kNames{
      "LogPS",
      "LogBB",
      "Log(PS*fu, brain)",
      "Pe (Jejunum), 10^-4 cm/s",
      "Maximum passive absorption (%)",
      "Contribution of transcellular route to absorption (%)",
      "Contribution of paracellular route to absorption (%)",
      "Molecular Weight",
      "No. of Hydrogen Bond Donors",
      "No. of Hydrogen Bond Acceptors",
      "TPSA",
      "No. of Rotatable Bonds",
      "C Ratio",
      "N Ratio",
      "NO Ratio",
      "Hetero Ratio",
      "Halogen Ratio",
      "Number of Rings",
      "Number of Aromatic Rings",
      "Number of Rings (size 5)",
      "Number of Rings (size 6)",
      "LogS (pH = 7,40)",
      "LogSw|LogSw",
      "LogSw|pH",
      "Pe (Caco-2) with LogP, 10^-6 cm/s (pH = 7,40, rpm = 300,00)",
      "Pe (Caco-2) with LogD, 10^-6 cm/s (pH = 7,40, rpm = 300,00)",
      "Log(BCF)",
      "Log(Koc)",
      "LogP",
      "LogD (pH = 7,40)",
      "Vd (L/kg)",
      "Fraction of form +1-1 (pH = 7,40)",
      "Most common form (pH = 7,40)|+",
      "Most common form (pH = 7,40)|-",
      "Most common form (pH = 7,40)|Fraction",
      "Bioavailability (%) (Dose, mg = 10,00)",
      "1st strongest acid pKa",
      "1st strongest base pKa",
  };
  return kNames;
}

std::string normalize_column_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '$' || c == '\\' || c == '{' || c == '}' || c == '^')
      continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<double> parse_value_list(std::string_view cell) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (auto v = parse_number(token, "pKa list", 0, "pKa")) out.push_back(*v);
    token.clear();
  };
  for (char c : cell) {
    if (c == ';' || c == ',' || c == ' ' || c == '[' || c == ']' || c == '\t' || c == '|') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return out;
}

DescriptorTable preprocess_percepta(const CsvTable& raw, const PerceptaOptions& options, std::string_view source) {
  const auto acid_col = raw.column("pKa(Acid)|pKa");
  const auto base_col = raw.column("pKa(Base)|pKa");
  if (!acid_col || !base_col)
    throw Error(ErrorKind::SchemaError, std::string(source) + ": pKa source columns 'pKa(Acid)|pKa' and 'pKa(Base)|pKa' required");
  const std::size_t id_col = find_id_column(raw).value_or(0);
  const auto fold_col = find_fold_column(raw);
  const std::size_t n = raw.rows.size();

  // Candidate numeric columns, keyed by header position.
  std::map<std::size_t, std::vector<double>> numeric;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (c == id_col || (fold_col && c == *fold_col) || raw.header[c].starts_with("pKa(")) continue;
    std::vector<double> col(n, kNaN);
    bool ok = true;
    for (std::size_t r = 0; r < n && ok; ++r) {
      check_row_width(raw, r, source);
      try {
        col[r] = parse_number(raw.rows[r][c], source, r + 2, raw.header[c]).value_or(kNaN);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) numeric.emplace(c, std::move(col));
  }

  std::vector<double> acid(n, kNaN), base(n, kNaN);
  for (std::size_t r = 0; r < n; ++r) {
    check_row_width(raw, r, source);
    const auto a = parse_value_list(raw.rows[r][*acid_col]);
    const auto b = parse_value_list(raw.rows[r][*base_col]);
    if (!a.empty()) acid[r] = *std::min_element(a.begin(), a.end());
    if (!b.empty()) base[r] = *std::max_element(b.begin(), b.end());
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  if (options.use_reference_names) {
    std::unordered_map<std::string, std::size_t> by_norm;
    for (const auto& [c, _] : numeric) by_norm.emplace(normalize_column_name(raw.header[c]), c);
    std::vector<std::string> missing;
    for (const auto& name : percepta_retained_names()) {
      if (name == "1st strongest acid pKa") {
        columns.push_back(acid);
      } else if (name == "1st strongest base pKa") {
        columns.push_back(base);
      } else if (auto it = by_norm.find(normalize_column_name(name)); it != by_norm.end()) {
        columns.push_back(numeric.at(it->second));
      } else {
        missing.push_back(name);
        continue;
      }
      names.push_back(name);
    }
    if (!missing.empty()) {
      std::string msg = std::string(source) + ": Percepta columns missing:";
      for (const auto& m : missing) msg += " '" + m + "'";
      throw Error(ErrorKind::SchemaError, msg);
    }
  } else {
    for (const auto& [c, col] : numeric) {
      double sum = 0.0, sq = 0.0;
      std::size_t k = 0;
      for (double v : col)
        if (!std::isnan(v)) {
          sum += v;
          ++k;
        }
      if (k == 0) continue;
      const double mean = sum / static_cast<double>(k);
      for (double v : col)
        if (!std::isnan(v)) sq += (v - mean) * (v - mean);
      if (sq / static_cast<double>(k) < options.variance_tolerance) continue;
      names.push_back(raw.header[c]);
      columns.push_back(col);
    }
    names.emplace_back("1st strongest acid pKa");
    columns.push_back(acid);
    names.emplace_back("1st strongest base pKa");
    columns.push_back(base);
  }

  DescriptorTable t;
  t.representation = Representation::Percepta;
  t.feature_names = names;
  t.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    double sum = 0.0;
    std::size_t k = 0;
    for (double v : columns[c])
      if (!std::isnan(v)) {
        sum += v;
        ++k;
      }
    const double fill = k ? sum / static_cast<double>(k) : 0.0;
    for (std::size_t r = 0; r < n; ++r)
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::isnan(columns[c][r]) ? fill : columns[c][r];
  }
  for (std::size_t r = 0; r < n; ++r) {
    t.ids.push_back(raw.rows[r][id_col]);
    int fold = -1;
    if (fold_col) {
      if (auto f = parse_number(raw.rows[r][*fold_col], source, r + 2, raw.header[*fold_col])) fold = static_cast<int>(*f);
    }
    t.folds.push_back(fold);
  }
  return t;
}

NormalizationStats fit_normalization(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                                     const std::vector<std::size_t>& rows, ZeroVariance policy) {
  const Eigen::Index d = x.cols();
  NormalizationStats s;
  s.names = names;
  if (s.names.size() != static_cast<std::size_t>(d)) {
    s.names.clear();
    for (Eigen::Index j = 0; j < d; ++j) s.names.push_back("x" + std::to_string(j));
  }
  s.mean = Eigen::VectorXd::Zero(d);
  s.scale = Eigen::VectorXd::Ones(d);
  std::vector<std::size_t> use = rows;
  if (use.empty()) {
    use.resize(static_cast<std::size_t>(x.rows()));
    std::iota(use.begin(), use.end(), std::size_t{0});
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    double sum = 0.0;
    std::size_t k = 0;
    for (auto r : use) {
      const double v = x(static_cast<Eigen::Index>(r), j);
      if (!std::isnan(v)) {
        sum += v;
        ++k;
      }
    }
    const double mean = k ? sum / static_cast<double>(k) : 0.0;
    double sq = 0.0;
    for (auto r : use) {
      const double v = x(static_cast<Eigen::Index>(r), j);
      if (!std::isnan(v)) sq += (v - mean) * (v - mean);
    }
    const double sd = k ? std::sqrt(sq / static_cast<double>(k)) : 0.0;
    s.mean(j) = mean;
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      if (policy == ZeroVariance::Throw)
        throw Error(ErrorKind::ZeroVariance, "column '" + s.names[static_cast<std::size_t>(j)] + "' has zero variance");
      s.scale(j) = 1.0;
    } else {
      s.scale(j) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd apply_normalization(const NormalizationStats& stats, const Eigen::MatrixXd& x) {
  if (x.cols() != stats.mean.size())
    throw Error(ErrorKind::DimensionMismatch, "normalization expects " + std::to_string(stats.mean.size()) +
                                                  " columns, got " + std::to_string(x.cols()));
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      z(i, j) = std::isnan(v) ? 0.0 : (v - stats.mean(j)) / stats.scale(j);
    }
  return z;
}

std::pair<DescriptorTable, NormalizationStats> standardize(const DescriptorTable& table,
                                                           const std::optional<NormalizationStats>& stats) {
  NormalizationStats s = stats ? *stats : fit_normalization(table.values, table.feature_names);
  DescriptorTable out = table;
  out.values = apply_normalization(s, table.values);
  return {std::move(out), std::move(s)};
}

NormalizationStats load_normalization_json(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::SchemaError, path.string() + ": expected a JSON object");
  NormalizationStats s;
  std::vector<double> means, scales;
  for (const auto& [name, v] : j.items()) {
    double m = 0.0, sd = 0.0;
    if (v.is_array() && v.size() == 2) {
      m = v[0].get<double>();
      sd = v[1].get<double>();
    } else if (v.is_object() && v.contains("mean") && v.contains("std")) {
      m = v["mean"].get<double>();
      sd = v["std"].get<double>();
    } else {
      throw Error(ErrorKind::SchemaError, path.string() + ": entry '" + name + "' is not [mean, std]");
    }
    if (!(sd > 0.0)) throw Error(ErrorKind::ZeroVariance, path.string() + ": column '" + name + "' has std <= 0");
    s.names.push_back(name);
    means.push_back(m);
    scales.push_back(sd);
  }
  s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  s.scale = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  return s;
}

}  // namespace qspr::data
