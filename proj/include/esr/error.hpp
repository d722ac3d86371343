#pragma once

#include <stdexcept>
#include <string>

namespace esr {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller passed invalid parameters (bad counts, ranges, flag values).
class UsageError : public Error {
public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

/// A file or dataset is missing, malformed, or fails validation.
class DataError : public Error {
public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Input data is numerically degenerate (coincident landmarks, constant
/// features, zero-variance projections).
class DegenerateError : public DataError {
public:
  explicit DegenerateError(const std::string& msg) : DataError(msg) {}
};

/// An internal invariant was violated; indicates a bug, not bad input.
class InternalError : public Error {
public:
  explicit InternalError(const std::string& msg) : Error(msg) {}
};

}  // namespace esr
