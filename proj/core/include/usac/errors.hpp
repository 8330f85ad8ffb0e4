#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace usac {

/// Caller broke a precondition (shape mismatch, stale tape, empty batch).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration value (τ outside (0,1), unknown env id, bad κ).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function, e.g. g(κ) for |κ| >= 1.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An optimizer received a NaN/Inf gradient.
class NonFiniteGradientError : public std::runtime_error {
 public:
  NonFiniteGradientError(std::size_t layer, const std::string& what)
      : std::runtime_error(what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// Training produced a non-finite loss or objective.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace usac
