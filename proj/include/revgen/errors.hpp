#ifndef REVGEN_ERRORS_HPP_
#define REVGEN_ERRORS_HPP_

#include <stdexcept>

namespace revgen {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent model or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-contract input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace revgen

#endif  // REVGEN_ERRORS_HPP_
