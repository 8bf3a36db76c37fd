#pragma once

#include <stdexcept>
#include <string>

namespace smadrl {

// Malformed configuration or layout. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during a gradient update. Maps to CLI exit code 3.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing, unreadable, truncated or with a bad header. Maps to exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace smadrl
