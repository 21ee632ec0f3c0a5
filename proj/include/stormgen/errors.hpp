#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stormgen {

/// Malformed or unusable input data. Carries the 1-based line number when the
/// problem comes from a text file.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An optimizer stopped without meeting its convergence criteria, or the
/// problem is degenerate. `best` holds the best iterate found, if any.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> best = {}, double best_value = 0.0)
      : std::runtime_error(what), best_(std::move(best)), best_value_(best_value) {}
  const std::vector<double>& best() const noexcept { return best_; }
  double best_value() const noexcept { return best_value_; }

 private:
  std::vector<double> best_;
  double best_value_;
};

/// Fewer than two consecutive defined barycenters in a tracking window.
class NoVelocityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariance matrix could not be factorized even after maximal jitter.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stormgen
