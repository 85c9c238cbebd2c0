#pragma once

#include <stdexcept>
#include <string>

namespace panelkit {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad inputs: malformed files, out-of-range values, inconsistent tables,
// violated preconditions. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A requested statistic does not exist for the given data, e.g. a Pearson
// correlation over a constant series. Typed so callers can isolate the
// failing computation instead of propagating NaN.
class UndefinedStatError : public Error {
 public:
  using Error::Error;
};

// An internal-mixture weight sits on a community the population mixture
// gives zero mass; the chi-squared divergence is unbounded there.
class UnboundedDivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace panelkit
