#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stormgen {

/// Objective to minimize. Non-finite values are treated as +inf.
using Objective = std::function<double(std::span<const double>)>;

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::string message;
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  double ftol_abs = 1e-10;
  double ftol_rel = 1e-12;
  double xtol = 1e-8;
  int max_evaluations = 20000;
  /// Number of restarts from the best vertex after the first convergence.
  int restarts = 2;
};

/// Nelder-Mead simplex with the standard coefficients (1, 2, 0.5, 0.5).
/// Fully deterministic.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {});

struct BfgsOptions {
  double fd_step = 1e-5;
  double gtol = 1e-6;
  double ftol_rel = 1e-12;
  int max_iterations = 500;
};

/// Central finite-difference gradient.
std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double step);

/// Quasi-Newton BFGS with central-difference gradients and a backtracking
/// Armijo line search.
OptimResult bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opt = {});

}  // namespace stormgen
