#include "qspr/error.hpp"

namespace qspr {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonPenetrant: return "NonPenetrant";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::EmptyAfterDesalt: return "EmptyAfterDesalt";
    case ErrorKind::Acyclic: return "Acyclic";
    case ErrorKind::WidthMismatch: return "WidthMismatch";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::TooFewCompounds: return "TooFewCompounds";
    case ErrorKind::ConstantTarget: return "ConstantTarget";
    case ErrorKind::AllTrialsFailed: return "AllTrialsFailed";
    case ErrorKind::DegenerateTarget: return "DegenerateTarget";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace qspr
