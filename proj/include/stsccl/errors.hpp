#pragma once

#include <stdexcept>
#include <string>

namespace stsccl {

// Bad user-supplied configuration (rates, fractions, dimensions).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent input files.
struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs outside an operation's mathematical domain.
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Non-finite values produced during computation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stsccl
