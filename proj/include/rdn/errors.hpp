#pragma once

#include <stdexcept>
#include <string>

namespace rdn {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or size mismatch between tensors / weights.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Bad user-supplied value (file contents, CLI input, out-of-range argument).
struct InputError : Error {
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// Inconsistent or unsupported model / run configuration.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed serialized data (checkpoints, config files, image headers).
struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure (open, read, write).
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Operation called out of order (e.g. backward without a retained forward).
struct StateError : Error {
  explicit StateError(const std::string& msg) : Error(msg) {}
};

}  // namespace rdn
