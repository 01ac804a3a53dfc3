#ifndef LANSING_ERRORS_HPP
#define LANSING_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lansing {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Trait lies in a region where the requested quantity is undefined
/// (non-viable, or on the diagonal where lambda is not differentiable).
class RegionError : public std::domain_error {
 public:
  explicit RegionError(const std::string& what) : std::domain_error(what) {}
};

/// Mismatched grid or component count.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A runtime-checked invariant of a simulation was broken.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

/// Invalid or unknown configuration value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lansing

#endif  // LANSING_ERRORS_HPP
