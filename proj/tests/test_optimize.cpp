#include <doctest.h>

#include <cmath>

#include "rope/optimize.hpp"

using namespace rope;

namespace {

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

double shifted_quadratic(std::span<const double> x) {
  const double a = x[0] - 3.0, b = x[1] + 1.0, c = x[2] - 0.5;
  return 2.0 * a * a + b * b + 0.5 * c * c + 0.3 * a * b;
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("simplex search finds the Rosenbrock minimum") {
  const auto r = simplex_minimize(rosenbrock, {-1.2, 1.0}, {0.5, 1e-10, 20000});
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.value < 1e-6);
  CHECK(r.evaluations > 0);
}

TEST_CASE("quasi-Newton minimises a quadratic to high accuracy") {
  const auto r = quasi_newton_minimize(shifted_quadratic, {0.0, 0.0, 0.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(r.x[2] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("quasi-Newton never returns a worse point than its start") {
  const auto start = std::vector<double>{1.0, 1.0};
  const auto r = quasi_newton_minimize(rosenbrock, start);
  CHECK(r.value <= rosenbrock(start));
  const auto r2 = quasi_newton_minimize(rosenbrock, {-1.2, 1.0}, {1e-8, 1e-6, 500});
  CHECK(r2.value < rosenbrock(std::vector<double>{-1.2, 1.0}));
}

TEST_CASE("central differences match analytic gradients") {
  const std::vector<double> x{0.3, -0.7};
  const auto g = numeric_gradient(rosenbrock, x, 1e-6);
  const double dx = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
  const double dy = 200.0 * (x[1] - x[0] * x[0]);
  CHECK(g[0] == doctest::Approx(dx).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(dy).epsilon(1e-6));
}

}  // TEST_SUITE
