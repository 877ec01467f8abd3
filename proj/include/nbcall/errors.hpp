#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nbcall {

/// Input outside the mathematical domain of an operation (bad probability,
/// non-positive dispersion, negative strike, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A moment-matching request whose defining condition fails, e.g. mean and
/// variance matching with Var(V) <= E(V).
class InfeasibleError : public std::domain_error {
 public:
  InfeasibleError(const std::string& what, std::string condition)
      : std::domain_error(what), condition_(std::move(condition)) {}

  const std::string& condition() const noexcept { return condition_; }

 private:
  std::string condition_;
};

/// A truncated series ran out of its term budget before the tail certificate
/// reached the requested tolerance. Carries the partial sum.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double partial, double tail)
      : std::runtime_error(what), partial_(partial), tail_(tail) {}

  double partial() const noexcept { return partial_; }
  double tail() const noexcept { return tail_; }

 private:
  double partial_;
  double tail_;
};

/// Exact enumeration would exceed the supported state-space size.
class SizeLimitError : public std::length_error {
 public:
  SizeLimitError(const std::string& what, std::size_t limit)
      : std::length_error(what), limit_(limit) {}

  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t limit_;
};

/// The requested quantity is not available for the model's law type.
class UnsupportedLawError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nbcall
