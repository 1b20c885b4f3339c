#include "rope/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "rope/error.hpp"

namespace rope {
namespace {

struct GslVector {
  explicit GslVector(std::span<const double> values) : v(gsl_vector_alloc(values.size())) {
    for (std::size_t k = 0; k < values.size(); ++k) gsl_vector_set(v, k, values[k]);
  }
  ~GslVector() { gsl_vector_free(v); }
  GslVector(const GslVector&) = delete;
  GslVector& operator=(const GslVector&) = delete;
  gsl_vector* v;
};

// Keeps track of the best point seen; GSL reports only its current iterate.
struct Tracker {
  const Objective* f = nullptr;
  double relative_step = 1e-6;
  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  int evaluations = 0;

  double operator()(std::span<const double> x) {
    ++evaluations;
    double value = (*f)(x);
    if (!std::isfinite(value)) value = std::numeric_limits<double>::max() / 4;
    if (value < best_value) {
      best_value = value;
      best.assign(x.begin(), x.end());
    }
    return value;
  }
};

std::span<const double> view(const gsl_vector* x) { return {x->data, x->size}; }

double f_trampoline(const gsl_vector* x, void* params) {
  return (*static_cast<Tracker*>(params))(view(x));
}

void df_trampoline(const gsl_vector* x, void* params, gsl_vector* g) {
  auto* tracker = static_cast<Tracker*>(params);
  Objective counted = [tracker](std::span<const double> y) { return (*tracker)(y); };
  const auto grad = numeric_gradient(counted, view(x), tracker->relative_step);
  for (std::size_t k = 0; k < grad.size(); ++k) gsl_vector_set(g, k, grad[k]);
}

void fdf_trampoline(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
  *f = f_trampoline(x, params);
  df_trampoline(x, params, g);
}

struct ErrorHandlerGuard {
  ErrorHandlerGuard() : previous(gsl_set_error_handler_off()) {}
  ~ErrorHandlerGuard() { gsl_set_error_handler(previous); }
  gsl_error_handler_t* previous;
};

}  // namespace

std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x,
                                     double relative_step) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = relative_step * std::max(1.0, std::abs(x[k]));
    point[k] = x[k] + h;
    const double up = f(point);
    point[k] = x[k] - h;
    const double down = f(point);
    point[k] = x[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

MinimizeResult simplex_minimize(const Objective& f, std::vector<double> start,
                                const SimplexOptions& options) {
  require(!start.empty(), "simplex_minimize: empty start point");
  ErrorHandlerGuard guard;
  Tracker tracker;
  tracker.f = &f;
  const std::size_t n = start.size();
  gsl_multimin_function fn{&f_trampoline, n, &tracker};

  GslVector x0(start);
  GslVector steps(std::vector<double>(n, options.initial_step));
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(solver.get(), &fn, x0.v, steps.v);

  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(solver.get());
    if (gsl_multimin_test_size(size, options.size_tolerance) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  return {tracker.best, tracker.best_value, tracker.evaluations, converged};
}

MinimizeResult quasi_newton_minimize(const Objective& f, std::vector<double> start,
                                     const QuasiNewtonOptions& options) {
  require(!start.empty(), "quasi_newton_minimize: empty start point");
  ErrorHandlerGuard guard;
  Tracker tracker;
  tracker.f = &f;
  tracker.relative_step = options.difference_step;
  const std::size_t n = start.size();
  gsl_multimin_function_fdf fn{&f_trampoline, &df_trampoline, &fdf_trampoline, n, &tracker};

  GslVector x0(start);
  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> solver(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
      &gsl_multimin_fdfminimizer_free);
  gsl_multimin_fdfminimizer_set(solver.get(), &fn, x0.v, 0.1, 0.1);

  bool converged = false;
  double last_best = tracker.best_value;
  int stalled = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (gsl_multimin_fdfminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    if (tracker.evaluations >= options.max_evaluations) break;
    // Line searches along a penalty wall make no progress but never fail.
    const double gain = last_best - tracker.best_value;
    stalled = gain <= options.stall_tolerance * (1.0 + std::abs(tracker.best_value)) ? stalled + 1 : 0;
    last_best = tracker.best_value;
    if (stalled >= options.stall_iterations) break;
    if (gsl_multimin_test_gradient(gsl_multimin_fdfminimizer_gradient(solver.get()),
                                   options.gradient_tolerance) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  return {tracker.best, tracker.best_value, tracker.evaluations, converged};
}

}  // namespace rope
