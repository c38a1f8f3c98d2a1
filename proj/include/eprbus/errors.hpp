#pragma once

#include <stdexcept>
#include <string>

namespace eprbus {

/// Rejected input: bad dimensions, out-of-range parameters, unknown modes,
/// malformed scenario files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear map whose output breaks the uncertainty relation.
class InvalidChannelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Integration did not converge, degenerate conditioning and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eprbus
