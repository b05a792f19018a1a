#ifndef AENR_ERRORS_H_
#define AENR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace aenr {

// Invalid configuration, shape or range. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unsupported file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aenr

#endif  // AENR_ERRORS_H_
