#pragma once

#include <stdexcept>
#include <string>

namespace cbartgp {

// Invalid inputs or parameter combinations (caller error).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure, e.g. a covariance that stays non-PD after jitter escalation.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cbartgp
