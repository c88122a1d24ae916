#pragma once

#include <stdexcept>
#include <string>

namespace dialoglearn {

// Error taxonomy. The CLI maps these onto process exit codes:
// usage/config -> 1, parse/data -> 2, training/numeric -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dialoglearn
