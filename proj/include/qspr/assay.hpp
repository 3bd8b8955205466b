#pragma once

#include <optional>
#include <span>
#include <string>

#include "qspr/membrane.hpp"

namespace qspr::assay {

/// Plate and well geometry of the PAMPA sandwich. Units: cm², cm³, s.
struct AssayGeometry {
  double filter_area = 0.3;
  double donor_volume = 0.15;
  double acceptor_volume = 0.3;
  double incubation_time = 4.0 * 3600.0;
  double steady_state_lag = 0.0;

  double volume_ratio() const noexcept { return donor_volume / acceptor_volume; }

  /// Throws InvalidArgument unless all quantities are positive and t > lag.
  void validate() const;
};

/// Concentrations in mol/cm³.
struct WellConcentrations {
  double donor_initial = 0.0;
  double donor_final = 0.0;
  double acceptor_final = 0.0;

  void validate() const;
};

struct PermeabilityResult {
  double membrane_retention = 0.0;
  std::optional<double> effective_permeability;  // cm/s, absent when non-penetrant
  std::optional<double> log_pe;
};

/// MR = 1 - cD(t)/CD(0) - VA·cA(t) / (VD·CD(0)).
double membrane_retention(const WellConcentrations& c, const AssayGeometry& g);

/// Effective permeability in cm/s with the base-10 logarithm paired with 2.303.
/// Throws NonPenetrant when the log argument or the result is not positive.
double effective_permeability(const WellConcentrations& c, const AssayGeometry& g, double mr);

/// Both quantities at once; non-penetrant wells come back with empty Pe/logPe.
PermeabilityResult evaluate_well(const WellConcentrations& c, const AssayGeometry& g);

/// One compound x plate x repeat row.
struct PlateRecord {
  std::string compound_id;
  int plate_number = 0;
  PerMembrane<double> mr;
  PerMembrane<double> pe;
  PerMembrane<double> log_pe;
};

/// Arithmetic mean of the available logPe repeats per membrane. Throws EmptyInput on no rows.
PerMembrane<double> aggregate_repeats(std::span<const PlateRecord> rows);

/// Same reduction applied to an arbitrary field (MR or Pe).
PerMembrane<double> aggregate_field(std::span<const PlateRecord> rows,
                                    PerMembrane<double> PlateRecord::*field);

}  // namespace qspr::assay
