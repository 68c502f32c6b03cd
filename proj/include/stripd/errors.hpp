#ifndef STRIPD_ERRORS_HPP
#define STRIPD_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stripd {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Rejected input: dimension mismatch between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// Rejected input: structurally invalid argument (bad bounds, bad partition,
// unsupported metric layout for a given prox kind, ...).
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(what) {}
};

// A matrix that was required to be symmetric positive definite is not.
class NotSpdError : public Error {
 public:
  explicit NotSpdError(const std::string& what) : Error(what) {}
};

// Bad run configuration (infeasible instance, malformed config file, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Step-size condition violated at solve setup.
class StepSizeError : public Error {
 public:
  explicit StepSizeError(const std::string& what) : Error(what) {}
};

// A solve produced a non-finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration)
      : Error(what), iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace stripd

#endif  // STRIPD_ERRORS_HPP
