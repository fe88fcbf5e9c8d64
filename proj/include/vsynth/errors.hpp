#pragma once

#include <stdexcept>
#include <string>

namespace vsynth {

/// Invalid configuration or argument. Maps to CLI exit status 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed, missing, or inconsistent data (volumes, patches, manifests). CLI exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vsynth
