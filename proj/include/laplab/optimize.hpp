#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace laplab {

/// Concave objective to be maximized. `evaluate` writes the gradient into its
/// second argument and returns the value.
struct Objective {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>, std::span<double>)> evaluate;
  std::string tag;
  /// Optional: negative Hessian (dimension x dimension, row-major).
  std::function<std::vector<double>(std::span<const double>)> information;
};

struct OptConfig {
  double grad_tol = 1e-8;  // infinity norm
  int max_iters = 5000;
  int memory = 10;
  double sufficient_increase = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Objectives with an information matrix up to this dimension take Newton
  /// directions; 0 disables them.
  std::size_t newton_max_dim = 256;
  /// Called with the objective value after every accepted step.
  std::function<void(int iteration, double value)> observer;
};

struct OptReport {
  int iterations = 0;
  int evaluations = 0;
  double grad_norm = 0.0;
  double value = 0.0;
  bool converged = false;
};

struct OptResult {
  std::vector<double> x;
  OptReport report;
};

/// Limited-memory BFGS ascent with backtracking on the sufficient-increase
/// condition, or Newton directions when the information matrix is available,
/// small and positive definite. Steps whose far end still has a nonnegative directional
/// derivative are also accepted, which for concave objectives keeps every
/// accepted step non-decreasing even below the resolution of the value. Hitting max_iters
/// returns converged = false; a NaN or infinite value/gradient throws
/// NonFiniteError.
OptResult maximize(const Objective& obj, std::vector<double> init, const OptConfig& cfg = {});

/// Max over coordinates of |central difference - gradient| / max(1, |gradient|).
double check_gradient(const Objective& obj, std::span<const double> at, double h = 1e-5);

/// Adds -strength/2 * ||x||^2 to the objective.
Objective with_ridge(Objective obj, double strength);

}  // namespace laplab
