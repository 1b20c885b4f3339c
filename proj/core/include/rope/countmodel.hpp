#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rope/histogram.hpp"

namespace rope {

// Beta-binomial components are parameterised by mean mu and dispersion
// sigma: alpha = mu / sigma, beta = (1 - mu) / sigma.

/// Beta-binomial pmf at w via log-beta functions.
double beta_binomial_pmf(int w, int B, double mu, double sigma);

/// The whole beta-binomial pmf over {0..B} as log probabilities.
std::vector<double> beta_binomial_log_pmf(int B, double mu, double sigma);

/// Powered null: f_BB^gamma renormalised over {0..B}.
double null_pmf(int w, int B, double mu1, double sigma1, double gamma);
std::vector<double> null_pmf_vector(int B, double mu1, double sigma1, double gamma);

/// Alternative: (f_BB(w) - f_BB(c))_+ renormalised, with sigma = mu2. Zero on
/// {0..c}. Throws InvalidArgument when no mass survives the truncation.
double alt_pmf(int w, int B, double mu2, int c);
std::vector<double> alt_pmf_vector(int B, double mu2, int c);

/// Full per-lambda mixture parameters.
struct MixtureParams {
  double pi = 0.0;      ///< alternative proportion
  double mu1 = 0.05;    ///< null mean
  double sigma1 = 0.1;  ///< null dispersion
  double gamma = 1.0;   ///< null power
  double mu2 = 0.9;     ///< alternative mean (dispersion equals mu2)
  double tau1 = 0.0;    ///< uniform inflation of the null on {0..c}
  double tau2 = 0.0;    ///< point mass of the alternative at B
  int c = 0;            ///< inflation cutoff

  void validate(int B) const;
};

/// Null component f1 = tau1 * U{0..c} + (1 - tau1) * f_null.
std::vector<double> null_component(const MixtureParams& params, int B);
/// Alternative component f2 = tau2 * 1{w = B} + (1 - tau2) * f_alt.
std::vector<double> alt_component(const MixtureParams& params, int B);

double mixture_pmf(int w, const MixtureParams& params, int B);
std::vector<double> mixture_pmf_vector(const MixtureParams& params, int B);

/// p * sum_w (pi f2(w) - (1 - pi) f1(w))_+ : the model's net count of
/// correctly over incorrectly selectable edges.
double separation(const MixtureParams& params, int B, std::int64_t p);
/// Same quantity for arbitrary component pmfs f1, f2.
double separation(std::span<const double> f1, std::span<const double> f2, double pi, std::int64_t p);

/// Smallest c whose cumulative edge fraction reaches `fraction`.
int choose_cutoff(const CountHistogram& h, double fraction = 0.75);

struct UShapeOptions {
  double top_fraction = 0.1;   ///< top part of the count range, w >= ceil((1 - f) B)
  int smoothing_window = 5;    ///< moving-average width over the valley
  double min_ratio = 2.0;      ///< top mean / valley minimum must exceed this
  std::int64_t min_top_count = 10;
};

/// Heuristic U-shape test. The valley is the count range strictly between the
/// inflation cutoff and B; the histogram is U-shaped when the mean bin height
/// over the top part exceeds min_ratio times the smallest moving-average
/// height over the valley and the top part holds at least min_top_count edges.
bool is_u_shaped(const CountHistogram& h, double inflation_fraction = 0.75,
                 const UShapeOptions& options = {});

/// Parameters of the likelihood over the fitting window {c+1..B-1}.
struct WindowParams {
  double pi_within = 0.2;  ///< alternative share inside the window
  double mu1 = 0.1;
  double sigma1 = 0.1;
  double gamma = 1.0;
  double mu2 = 0.9;
};

enum class WindowLikelihood {
  conditional,   ///< mixture renormalised over the window
  unnormalised,  ///< mixture densities normalised over {0..B}
};

/// Log-likelihood of the window counts under (1 - pi') f_null + pi' f_alt.
/// Empty bins contribute nothing. Returns -inf for parameter values with zero
/// probability on an occupied bin.
double window_log_likelihood(const CountHistogram& h, int c, const WindowParams& theta,
                             WindowLikelihood kind = WindowLikelihood::conditional);

/// Recovers pi, tau1 and tau2 from window parameters and the histogram by
/// matching expected and observed mass in the window, on {0..c} and at B.
MixtureParams recover_mixture(const CountHistogram& h, int c, const WindowParams& theta);

struct FitOptions {
  double inflation_fraction = 0.75;
  std::optional<double> pi_max;      ///< constrain the recovered pi to <= pi_max
  int restarts = 8;                  ///< deterministic start points tried
  std::uint64_t seed = 0;            ///< 0: unjittered starts
  std::optional<WindowParams> warm_start;  ///< tried before the restart points
  UShapeOptions u_shape;
  WindowLikelihood likelihood = WindowLikelihood::conditional;
  /// Reject parameters whose components predict more mass on {0..c} or at B
  /// than observed (tau1 or tau2 outside [0, 1]).
  bool mass_constraint = true;
};

struct LambdaFit {
  double lambda = 0.0;
  int B = 0;
  MixtureParams params;
  WindowParams window;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double separation = 0.0;
  bool u_shaped = false;
  bool fitted = false;
};

/// Constrained maximum-likelihood fit of the mixture to one histogram.
/// Throws NotFittable when the histogram is not U-shaped, the window is
/// empty, B < 10, or no start point satisfies the pi constraint.
LambdaFit fit_lambda(const CountHistogram& h, const FitOptions& options = {}, double lambda = 0.0);

/// Map between window parameters and the unconstrained optimisation space.
std::vector<double> to_unconstrained(const WindowParams& theta);
WindowParams from_unconstrained(const std::vector<double>& u);

}  // namespace rope
