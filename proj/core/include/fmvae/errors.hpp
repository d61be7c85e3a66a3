#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmvae {

// Root of every error thrown by the library. The CLI maps the subclasses
// below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (shape mismatch, bad argument).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Numeric argument outside the domain of a function, e.g. log of a
// non-positive value.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite values surfaced during training.
class TrainingFault : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `offset` is a byte offset or line number, depending
// on the format; -1 when unknown.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, long long offset = -1)
      : Error(offset >= 0 ? what + " (at " + std::to_string(offset) + ")" : what),
        offset_(offset) {}
  long long offset() const noexcept { return offset_; }

 private:
  long long offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Metric tensor (or a statistic built on it) is too close to singular.
class DegenerateMetric : public Error {
 public:
  using Error::Error;
};

class GraphConnectivity : public Error {
 public:
  GraphConnectivity(const std::string& what, std::size_t components)
      : Error(what), components_(components) {}
  std::size_t components() const noexcept { return components_; }

 private:
  std::size_t components_;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

}  // namespace fmvae
