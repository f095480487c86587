#pragma once

#include <stdexcept>
#include <string>

namespace spatialecon {

enum class ErrorKind {
  invalid_input,
  too_few_observations,
  coincident_points,
  zero_variance,
  empty_weights,
  sample_too_small,
  insufficient_draws,
  invalid_comparison,
  parse_error,
  collinearity,
  boundary_solution,
  singular_system,
  ill_conditioned_information,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::too_few_observations: return "too few observations";
    case ErrorKind::coincident_points: return "coincident points";
    case ErrorKind::zero_variance: return "zero variance";
    case ErrorKind::empty_weights: return "empty weights";
    case ErrorKind::sample_too_small: return "sample too small";
    case ErrorKind::insufficient_draws: return "insufficient draws";
    case ErrorKind::invalid_comparison: return "invalid comparison";
    case ErrorKind::parse_error: return "parse error";
    case ErrorKind::collinearity: return "collinearity";
    case ErrorKind::boundary_solution: return "boundary solution";
    case ErrorKind::singular_system: return "singular system";
    case ErrorKind::ill_conditioned_information: return "ill-conditioned information";
  }
  return "unknown";
}

/// Base of every error raised by the library. `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Problems with the data or arguments a caller supplied.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failures of a numerical procedure on otherwise valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spatialecon
