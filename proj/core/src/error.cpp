#include "dpsurv/error.hpp"

namespace dpsurv {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::non_positive_time: return "NonPositiveTime";
    case errc::negative_count: return "NegativeCount";
    case errc::non_positive_area: return "NonPositiveArea";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::no_events: return "NoEvents";
    case errc::non_finite_lik: return "NonFiniteLik";
    case errc::degenerate_weights: return "DegenerateWeights";
    case errc::too_few_draws: return "TooFewDraws";
    case errc::zero_density: return "ZeroDensity";
    case errc::singular: return "Singular";
    case errc::too_few_values: return "TooFewValues";
    case errc::parse_error: return "ParseError";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace dpsurv
