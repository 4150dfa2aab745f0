// Error taxonomy shared across modules; the CLI maps these onto its exit-code
// contract (1 io, 2 usage/config, 3 numeric, 4 inconsistency, 5 verdict).

#pragma once

#include <stdexcept>
#include <string>

namespace fbsvar {

/// Numerical failure (embedding eigenvalue, Cholesky breakdown, divergence).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parameters that match no branch of a formula, or a regime mismatch.
struct inconsistency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed configuration; carries a JSON pointer to the offending field.
struct config_error : std::runtime_error {
  std::string pointer;
  config_error(std::string ptr, const std::string& msg)
      : std::runtime_error(ptr + ": " + msg), pointer(std::move(ptr)) {}
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fbsvar
