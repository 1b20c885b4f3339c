#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rope/rng.hpp"

namespace rope {

struct LassoOptions {
  double tolerance = 1e-7;  ///< stop when the largest coefficient change is below this
  int max_sweeps = 100000;
};

/// Centres each column and scales it to unit (1/n) standard deviation in
/// place. Returns, per column, whether it had non-zero variance; zero-variance
/// columns are left as zeros.
std::vector<bool> standardize(Eigen::MatrixXd& x);

/// Coordinate-descent lasso over a fixed standardized design, working from
/// the Gram matrix G = X'X / n so every node regression of a neighbourhood
/// selection shares one factorisation-free precomputation.
///
/// Objective for response column j:
///   (1/2n) ||x_j - X beta||^2 + lambda * sum_k penalty_k |beta_k|,  beta_j = 0.
class GramLasso {
 public:
  explicit GramLasso(const Eigen::MatrixXd& standardized,
                     std::vector<bool> usable = {}, LassoOptions options = {});

  int dimension() const { return static_cast<int>(gram_.rows()); }
  bool usable(int k) const { return usable_[static_cast<std::size_t>(k)]; }
  const Eigen::MatrixXd& gram() const { return gram_; }

  /// Fits in place: `beta` is the warm start on entry and the solution on
  /// exit. Returns the number of sweeps used. Throws NumericalError when
  /// max_sweeps is exhausted.
  int fit(int response, double lambda, std::span<const double> penalty,
          Eigen::VectorXd& beta) const;

  /// Smallest lambda for which the all-zero solution is optimal.
  double lambda_max(int response, std::span<const double> penalty) const;

 private:
  Eigen::MatrixXd gram_;
  std::vector<bool> usable_;
  LassoOptions options_;
};

/// Weighted lasso of column `response` on all other columns of an already
/// standardized design. Returns a length-d vector with entry `response`
/// fixed at zero.
Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& standardized, int response, double lambda,
                          std::span<const double> penalty, const LassoOptions& options = {});

/// Randomized-lasso weights: each entry is `weakness` or 1 with probability
/// one half. weakness == 1 yields all ones without consuming randomness.
std::vector<double> randomized_weights(int d, double weakness, Rng& rng);

}  // namespace rope
