#pragma once

#include <stdexcept>
#include <string>

namespace rangejudge {

// Invalid configuration. Raised before any provider call; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data; maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A single provider call failed (network, timeout, missing label, replay miss).
// Item-level: the pipeline records it and moves on.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rangejudge
