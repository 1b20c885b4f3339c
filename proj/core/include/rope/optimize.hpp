#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rope {

/// Objective to minimise over an unconstrained real vector.
using Objective = std::function<double(std::span<const double>)>;

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double initial_step = 0.5;
  double size_tolerance = 1e-6;
  int max_iterations = 4000;
};

struct QuasiNewtonOptions {
  double gradient_tolerance = 1e-6;
  double difference_step = 1e-6;  ///< relative central-difference step
  int max_iterations = 200;
  int max_evaluations = 5000;
  /// Stop after stall_iterations iterations that each improve the best value
  /// by at most stall_tolerance * (1 + |best|).
  double stall_tolerance = 1e-10;
  int stall_iterations = 5;
};

/// Nelder-Mead simplex search. The returned point is the best one evaluated.
MinimizeResult simplex_minimize(const Objective& f, std::vector<double> start,
                                const SimplexOptions& options = {});

/// BFGS with central finite-difference gradients. The returned point is the
/// best one evaluated, so a failed line search never makes the start worse.
MinimizeResult quasi_newton_minimize(const Objective& f, std::vector<double> start,
                                     const QuasiNewtonOptions& options = {});

/// Central finite-difference gradient with step h * max(1, |x_k|).
std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x,
                                     double relative_step);

}  // namespace rope
