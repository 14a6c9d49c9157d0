#pragma once

#include <stdexcept>
#include <string>

namespace selmut {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model function returned a non-finite value.
class ModelEvaluationError : public Error {
 public:
  ModelEvaluationError(const std::string& what, double x, double I)
      : Error(what), x_(x), I_(I) {}
  double x() const noexcept { return x_; }
  double I() const noexcept { return I_; }

 private:
  double x_;
  double I_;
};

/// The nutrient bracket does not straddle a sign change of the rate.
class RangeDerivationError : public Error {
 public:
  using Error::Error;
};

/// Initial data could not be built with the requested mass.
class InitializationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite solution or a nutrient value that left its admissible band.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double t, double x)
      : Error(what), t_(t), x_(x) {}
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

/// Kernel tail does not fall below the requested tolerance.
class KernelTruncationError : public Error {
 public:
  using Error::Error;
};

/// Too many clamped exponents in a single step of the integral solver.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a precomputed table.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

/// The constraint max u = 0 cannot be met by any nutrient value in the bracket.
class ConstraintInfeasibleError : public Error {
 public:
  ConstraintInfeasibleError(const std::string& what, double phi_lo, double phi_hi)
      : Error(what), phi_lo_(phi_lo), phi_hi_(phi_hi) {}
  double phi_lo() const noexcept { return phi_lo_; }
  double phi_hi() const noexcept { return phi_hi_; }

 private:
  double phi_lo_;
  double phi_hi_;
};

/// Argument outside the mathematical domain of a monitor.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration text; carries the offending line (0 if none).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace selmut
