#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspr/membrane.hpp"
#include "qspr/tuning/tuning.hpp"

namespace qspr::analyze {

struct ImportanceMatrix {
  std::vector<std::string> targets;  // one entry per row
  std::vector<int> folds;            // validation fold of each row
  std::vector<std::string> features;
  Eigen::MatrixXd coefficients;      // rows x features, on standardized inputs
};

/// Refits each target's tuned single-task elastic net on the training part of
/// every CV split and stacks the coefficient vectors, four rows per target.
ImportanceMatrix feature_importance(const tuning::CvPlan& plan, const tuning::Dataset& dataset,
                                    const std::vector<tuning::Selection>& tuned_en);

std::string importance_csv(const ImportanceMatrix& m);
ImportanceMatrix parse_importance_csv(std::string_view text);
std::string importance_svg(const ImportanceMatrix& m);

struct Quartiles {
  std::size_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear-interpolation quantiles over the finite values.
Quartiles quartiles(std::vector<double> values);

struct PropertySummary {
  std::string property;
  Quartiles high, low;
};

struct MembraneProfile {
  Membrane membrane = Membrane::BBB;
  std::vector<std::string> high;  // best penetrating first
  std::vector<std::string> low;   // worst penetrating first
  std::vector<PropertySummary> properties;
};

/// Region counts of a three-set Venn diagram plus the pairwise intersections.
struct Overlap {
  std::array<std::string, 3> names;
  std::array<std::size_t, 3> sizes{};
  std::size_t ab = 0, ac = 0, bc = 0, abc = 0;
};

struct ProfileReport {
  std::vector<MembraneProfile> membranes;
  std::optional<Overlap> high_overlap, low_overlap;
  std::vector<std::string> missing_properties;
  std::vector<std::string> warnings;
  std::vector<std::string> trend_checks;
};

/// Named per-compound property columns (logP, TPSA, ...), NaN for missing cells.
struct PropertyTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

/// Ranks compounds by mean logPe per membrane (ties by id) and takes the k best
/// and k worst; both sets shrink to half the available compounds when needed.
ProfileReport top_bottom_profiles(const std::vector<std::string>& ids, const Eigen::MatrixXd& log_pe,
                                  const std::vector<Membrane>& membranes, std::size_t k,
                                  const PropertyTable& properties, const std::vector<std::string>& property_names);

std::string profiles_csv(const ProfileReport& r);
std::string profile_sets_csv(const ProfileReport& r);
std::string overlaps_csv(const ProfileReport& r);
std::string profiles_svg(const ProfileReport& r);

enum class ScaffoldMode { Murcko, Generic };

inline constexpr const char* kAcyclicScaffold = "Acyclic";

struct ScaffoldReport {
  std::vector<std::string> ids;
  std::vector<std::string> scaffolds;  // kAcyclicScaffold for ring-free molecules
  std::size_t unique = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
};

ScaffoldReport scaffold_report(const std::vector<std::string>& ids, const std::vector<std::string>& smiles,
                               ScaffoldMode mode = ScaffoldMode::Murcko);

std::string scaffolds_csv(const ScaffoldReport& r);
/// Members of every scaffold shared by at least two compounds.
std::string scaffold_repeats_csv(const ScaffoldReport& r);

}  // namespace qspr::analyze
