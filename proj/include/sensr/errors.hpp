#ifndef SENSR_ERRORS_HPP
#define SENSR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sensr {

// Bad user input: malformed config, contract violations at the API surface.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values showed up where they must not (diverged optimization,
// exploding attack). Carries no state; callers that can recover a checkpoint
// do so at the call site.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sensr

#endif
