#pragma once

#include <stdexcept>
#include <string>

namespace lio {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape mismatch in a tensor operation.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Invalid argument value (bad sizes, unknown names, conflicting options).
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

/// Non-finite value showed up where a finite one is required.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Operation called on an object in the wrong state (missing params, unloaded model).
struct StateError : Error {
  explicit StateError(const std::string& msg) : Error(msg) {}
};

/// File or directory could not be read, written, or parsed.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Neighborhood construction failed (too few points for the requested k).
struct ChartError : Error {
  explicit ChartError(const std::string& msg) : Error(msg) {}
};

}  // namespace lio
