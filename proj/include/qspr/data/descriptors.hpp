#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qspr/chem/fingerprint.hpp"
#include "qspr/data/csv.hpp"

namespace qspr::data {

enum class Representation { Percepta, RDKit, ECFP, CDDD, MolBERT };

std::string_view representation_name(Representation r) noexcept;
Representation parse_representation(std::string_view name);
/// Column count after preprocessing: 38, 96, 2000, 512, 768.
std::size_t expected_width(Representation r) noexcept;

/// Compound x fold assignment; fold 0 is the external test set.
struct FoldAssignment {
  std::vector<std::string> ids;
  std::vector<int> folds;

  std::optional<int> fold_of(std::string_view id) const;
  std::vector<std::size_t> fold_sizes(int n_folds = 5) const;
};

/// Seeded uniform shuffle, then round-robin into `n_folds`. Throws TooFewCompounds.
FoldAssignment assign_folds(const std::vector<std::string>& ids, std::uint64_t seed, int n_folds = 5);

struct DescriptorTable {
  Representation representation = Representation::Percepta;
  std::vector<std::string> ids;
  std::vector<int> folds;  // -1 when the source had no fold column
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;  // ids x features; missing cells are NaN
  std::vector<chem::Fingerprint> fingerprints;  // ECFP only, aligned with ids

  std::optional<std::size_t> row_of(std::string_view id) const;
  FoldAssignment fold_assignment() const;
};

/// Reads the published layout: an id column, a fold column, then either dense
/// named features or (ECFP) one column of space-separated active bit indices.
DescriptorTable parse_descriptors(const CsvTable& csv, Representation rep, std::string_view source = "<memory>");
DescriptorTable load_descriptors(const std::filesystem::path& path, Representation rep);
CsvTable descriptors_to_csv(const DescriptorTable& table);

/// Throws SchemaError when the feature count differs from expected_width.
void check_width(const DescriptorTable& table);

/// Rows reordered to `ids`; throws SchemaError naming the first absent id.
DescriptorTable select_rows(const DescriptorTable& table, const std::vector<std::string>& ids);

/// The 38 Percepta descriptors kept after filtering, including the two derived pKa scalars.
const std::vector<std::string>& percepta_retained_names();

/// Lower-cased, whitespace- and markup-free form used to match column names across exports.
std::string normalize_column_name(std::string_view name);

struct PerceptaOptions {
  bool use_reference_names = true;    // select exactly percepta_retained_names()
  double variance_tolerance = 1e-10;  // fallback filter when not using the reference list
};

/// Raw Percepta export -> training table. The acid/base pKa list columns become
/// "1st strongest acid pKa" (min of the acid list) and "1st strongest base pKa"
/// (max of the base list). Remaining missing cells are filled with the column mean.
DescriptorTable preprocess_percepta(const CsvTable& raw, const PerceptaOptions& options = {},
                                    std::string_view source = "<memory>");

/// Parses a pKa list cell such as "4.2;9.1" or "[4.2, 9.1]".
std::vector<double> parse_value_list(std::string_view cell);

struct NormalizationStats {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population standard deviation
};

enum class ZeroVariance { Throw, Center };

/// Column statistics over the given rows (all rows when empty), ignoring NaN cells.
/// With ZeroVariance::Center a constant column gets scale 1 instead of an error.
NormalizationStats fit_normalization(const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                                     const std::vector<std::size_t>& rows = {},
                                     ZeroVariance policy = ZeroVariance::Throw);

/// (x - mean) / scale; NaN cells map to 0 (the column mean).
Eigen::MatrixXd apply_normalization(const NormalizationStats& stats, const Eigen::MatrixXd& x);

/// Standardizes with the supplied stats, or stats fitted on the table itself.
std::pair<DescriptorTable, NormalizationStats> standardize(const DescriptorTable& table,
                                                           const std::optional<NormalizationStats>& stats = std::nullopt);

/// Reads a `*_columns.json` file: name -> {"mean": m, "std": s} or name -> [m, s].
NormalizationStats load_normalization_json(const std::filesystem::path& path);

}  // namespace qspr::data
