#include "qspr/assay.hpp"

#include <cmath>

#include "qspr/error.hpp"

namespace qspr {

std::optional<Membrane> parse_membrane(std::string_view name) {
  for (Membrane m : kAllMembranes) {
    if (membrane_name(m) == name) return m;
  }
  return std::nullopt;
}

}  // namespace qspr

namespace qspr::assay {

namespace {

// Prefactor as printed with the PAMPA formula (approximates ln 10).
constexpr double kLn10Approx = 2.303;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, std::string(what) + " is not finite");
}

}  // namespace

void AssayGeometry::validate() const {
  if (!(filter_area > 0 && donor_volume > 0 && acceptor_volume > 0 && incubation_time > 0)) {
    throw Error(ErrorKind::InvalidArgument, "assay geometry values must be positive");
  }
  if (!(steady_state_lag >= 0) || !(incubation_time > steady_state_lag)) {
    throw Error(ErrorKind::InvalidArgument, "incubation time must exceed the steady-state lag");
  }
}

void WellConcentrations::validate() const {
  if (!(donor_initial > 0)) throw Error(ErrorKind::InvalidArgument, "donor_initial must be > 0");
  if (!(donor_final >= 0) || !(acceptor_final >= 0)) {
    throw Error(ErrorKind::InvalidArgument, "final concentrations must be >= 0");
  }
}

double membrane_retention(const WellConcentrations& c, const AssayGeometry& g) {
  require_finite(c.donor_initial, "donor_initial");
  require_finite(c.donor_final, "donor_final");
  require_finite(c.acceptor_final, "acceptor_final");
  const double mr = 1.0 - c.donor_final / c.donor_initial -
                    (g.acceptor_volume * c.acceptor_final) / (g.donor_volume * c.donor_initial);
  require_finite(mr, "membrane retention");
  return mr;
}

double effective_permeability(const WellConcentrations& c, const AssayGeometry& g, double mr) {
  require_finite(mr, "membrane retention");
  if (!(mr < 1.0)) throw Error(ErrorKind::InvalidArgument, "membrane retention must be < 1");
  const double rv = g.volume_ratio();
  const double dt = g.incubation_time - g.steady_state_lag;
  const double arg = -rv + ((1.0 + rv) / (1.0 - mr)) * (c.donor_final / c.donor_initial);
  require_finite(arg, "log argument");
  if (!(arg > 0.0)) {
    throw Error(ErrorKind::NonPenetrant, "log argument " + std::to_string(arg) + " <= 0");
  }
  const double pe = (-kLn10Approx / (g.filter_area * dt)) * (1.0 / (1.0 + rv)) * std::log10(arg);
  require_finite(pe, "effective permeability");
  if (!(pe > 0.0)) throw Error(ErrorKind::NonPenetrant, "no measurable flux");
  return pe;
}

PermeabilityResult evaluate_well(const WellConcentrations& c, const AssayGeometry& g) {
  PermeabilityResult r;
  r.membrane_retention = membrane_retention(c, g);
  try {
    const double pe = effective_permeability(c, g, r.membrane_retention);
    r.effective_permeability = pe;
    r.log_pe = std::log10(pe);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonPenetrant) throw;
  }
  return r;
}

PerMembrane<double> aggregate_field(std::span<const PlateRecord> rows,
                                    PerMembrane<double> PlateRecord::*field) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "no repeat rows to aggregate");
  PerMembrane<double> out;
  for (std::size_t m = 0; m < kMembraneCount; ++m) {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : rows) {
      const auto& v = (row.*field)[m];
      if (v && std::isfinite(*v)) {
        sum += *v;
        ++count;
      }
    }
    if (count > 0) out[m] = sum / count;
  }
  return out;
}

PerMembrane<double> aggregate_repeats(std::span<const PlateRecord> rows) {
  return aggregate_field(rows, &PlateRecord::log_pe);
}

}  // namespace qspr::assay
