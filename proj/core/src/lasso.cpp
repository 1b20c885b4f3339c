#include "rope/lasso.hpp"

#include <cmath>
#include <string>

#include "rope/error.hpp"

namespace rope {
namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

std::vector<bool> standardize(Eigen::MatrixXd& x) {
  const auto n = static_cast<double>(x.rows());
  std::vector<bool> usable(static_cast<std::size_t>(x.cols()), false);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / n);
    // Relative test: a constant column leaves only rounding noise after centring.
    if (sd > 1e-12 && std::isfinite(sd)) {
      col /= sd;
      usable[static_cast<std::size_t>(c)] = true;
    } else {
      col.setZero();
    }
  }
  return usable;
}

GramLasso::GramLasso(const Eigen::MatrixXd& standardized, std::vector<bool> usable,
                     LassoOptions options)
    : usable_(std::move(usable)), options_(options) {
  const auto n = static_cast<double>(standardized.rows());
  require(standardized.rows() >= 1, "GramLasso: empty design");
  gram_ = Eigen::MatrixXd::Zero(standardized.cols(), standardized.cols());
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(standardized.transpose(), 1.0 / n);
  gram_ = gram_.selfadjointView<Eigen::Lower>();
  if (usable_.empty()) usable_.assign(static_cast<std::size_t>(standardized.cols()), true);
  require(usable_.size() == static_cast<std::size_t>(standardized.cols()),
          "GramLasso: usable mask has wrong length");
}

double GramLasso::lambda_max(int response, std::span<const double> penalty) const {
  double lmax = 0.0;
  for (int k = 0; k < dimension(); ++k) {
    if (k == response || !usable(k)) continue;
    lmax = std::max(lmax, std::abs(gram_(k, response)) / penalty[static_cast<std::size_t>(k)]);
  }
  return lmax;
}

int GramLasso::fit(int response, double lambda, std::span<const double> penalty,
                   Eigen::VectorXd& beta) const {
  const int d = dimension();
  require(response >= 0 && response < d, "lasso: response index out of range");
  require(lambda > 0.0, "lasso: lambda must be positive");
  require(penalty.size() == static_cast<std::size_t>(d), "lasso: penalty has wrong length");
  if (beta.size() != d) beta = Eigen::VectorXd::Zero(d);
  beta(response) = 0.0;
  if (!usable(response)) {
    beta.setZero();
    return 0;
  }

  // grad_k = x_k' r / n with r = x_response - X beta.
  Eigen::VectorXd grad = gram_.col(response) - gram_ * beta;

  std::vector<int> active;
  auto update = [&](int k) {
    const double old = beta(k);
    const double gkk = gram_(k, k);
    const double next =
        soft_threshold(grad(k) + gkk * old, lambda * penalty[static_cast<std::size_t>(k)]) / gkk;
    const double delta = next - old;
    if (delta != 0.0) {
      grad.noalias() -= delta * gram_.col(k);
      beta(k) = next;
    }
    return std::abs(delta);
  };

  int sweeps = 0;
  while (sweeps < options_.max_sweeps) {
    ++sweeps;
    double max_change = 0.0;
    active.clear();
    for (int k = 0; k < d; ++k) {
      if (k == response || !usable(k)) continue;
      max_change = std::max(max_change, update(k));
      if (beta(k) != 0.0) active.push_back(k);
    }
    if (max_change < options_.tolerance) return sweeps;

    // Iterate on the active set until it settles, then re-check everything.
    while (sweeps < options_.max_sweeps) {
      ++sweeps;
      double inner = 0.0;
      for (int k : active) inner = std::max(inner, update(k));
      if (inner < options_.tolerance) break;
    }
  }
  throw NumericalError("lasso: no convergence within " + std::to_string(options_.max_sweeps) +
                       " sweeps (response " + std::to_string(response) + ")");
}

Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& standardized, int response, double lambda,
                          std::span<const double> penalty, const LassoOptions& options) {
  for (double w : penalty) require(w > 0.0 && std::isfinite(w), "lasso: penalty weights must be positive");
  GramLasso solver(standardized, {}, options);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(standardized.cols());
  solver.fit(response, lambda, penalty, beta);
  return beta;
}

std::vector<double> randomized_weights(int d, double weakness, Rng& rng) {
  require(weakness > 0.0 && weakness <= 1.0, "randomized_weights: weakness must be in (0, 1]");
  require(d >= 0, "randomized_weights: negative dimension");
  std::vector<double> w(static_cast<std::size_t>(d), 1.0);
  if (weakness == 1.0) return w;
  std::bernoulli_distribution coin(0.5);
  for (auto& v : w) v = coin(rng) ? weakness : 1.0;
  return w;
}

}  // namespace rope
