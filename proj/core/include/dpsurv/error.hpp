#pragma once

#include <stdexcept>
#include <string>

namespace dpsurv {

// Error categories raised across the library. Cox fit non-convergence is not
// here on purpose: it is reported as a flag on the fit, not thrown.
enum class errc {
  non_positive_time,
  negative_count,
  non_positive_area,
  length_mismatch,
  no_events,
  non_finite_lik,
  degenerate_weights,
  too_few_draws,
  zero_density,
  singular,
  too_few_values,
  parse_error,
  invalid_argument,
};

const char* errc_name(errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace dpsurv
