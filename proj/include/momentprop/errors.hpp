/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by the moment propagation library.
 */
#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace momentprop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model file could not be parsed or violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix or vector would exceed the configured element-count limit.
class SizeLimitError : public Error {
 public:
  SizeLimitError(const std::string& what, std::size_t required, std::size_t allowed)
      : Error(what + ": requires " + std::to_string(required) + " elements, limit is " +
              std::to_string(allowed)),
        required_(required),
        allowed_(allowed) {}

  std::size_t required() const noexcept { return required_; }
  std::size_t allowed() const noexcept { return allowed_; }

 private:
  std::size_t required_;
  std::size_t allowed_;
};

/// Quadrature or another numerical routine failed to reach its tolerance.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double achieved)
      : Error(what + " (achieved tolerance " + format(achieved) + ")"), achieved_(achieved) {}

  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  double achieved_;
};

/// A propagated or simulated state became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t last_finite_step)
      : Error(what + " (last finite step " + std::to_string(last_finite_step) + ")"),
        last_finite_step_(last_finite_step) {}

  std::size_t last_finite_step() const noexcept { return last_finite_step_; }

 private:
  std::size_t last_finite_step_;
};

/// Violated precondition on an argument (index out of range, vacuous bound, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace momentprop
