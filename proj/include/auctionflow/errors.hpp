#pragma once

#include <stdexcept>
#include <string>

namespace auctionflow {

/// Input outside an operation's domain (negative rate, invalid interval, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed (non-PSD covariance, no bracket, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bracketing root solve found no sign change; carries the endpoint values.
class NoSolutionError : public NumericError {
 public:
  NoSolutionError(const std::string& what, double lo, double hi, double f_lo, double f_hi)
      : NumericError(what), lo_(lo), hi_(hi), f_lo_(f_lo), f_hi_(f_hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }

 private:
  double lo_, hi_, f_lo_, f_hi_;
};

/// Unparseable or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace auctionflow
