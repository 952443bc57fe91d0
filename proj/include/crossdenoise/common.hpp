#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cdn {

// Contract violations (bad arguments, shape mismatches, index range errors).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numeric failures (NaN gradients, non-finite losses).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input parsing failures; carries a line number when one is known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg, long line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  long line_number;
};

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ContractError(msg);
}

inline void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

}  // namespace cdn
