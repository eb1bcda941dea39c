#pragma once

#include <stdexcept>
#include <string>

namespace hapsim {

/// Invalid scenario parameter or config-file problem. Carries a
/// human-readable message naming the offending key/value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent matrix/vector dimensions between components that were
/// supposed to be generated from the same scenario.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hapsim
