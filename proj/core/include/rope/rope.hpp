#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rope/countmodel.hpp"
#include "rope/netgen.hpp"
#include "rope/select.hpp"

namespace rope {

/// Two-sided standard normal quantile used for q-value upper bounds.
inline constexpr double kZ975 = 1.959964;

double separation(const LambdaFit& fit, std::int64_t p);

struct RopeConfig {
  int n_boot = 100;
  double ci_level = 0.95;
  FitOptions fit;              ///< options for the full-data fits
  int boot_restarts = 1;       ///< extra start points per bootstrap refit
  bool reuse_first_pass_ci = false;  ///< take lambda_b from the first-pass CI
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Confidence interval for the location of max_lambda g(lambda).
struct ArgmaxCI {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  std::size_t index_lo = 0;
  std::size_t index_hi = 0;
  std::vector<double> argmax_lambdas;  ///< one per successful replicate
  int failed_replicates = 0;
};

/// Index of the largest separation among fitted entries; ties go to the
/// smallest lambda. Returns nullopt when nothing is fitted.
std::optional<std::size_t> argmax_separation(const std::vector<LambdaFit>& fits);

/// Fits every lambda column of W (columns that are not U-shaped, or fail,
/// are returned with fitted == false).
std::vector<LambdaFit> fit_all(const CountMatrix& counts, const FitOptions& options, int threads = 1);

/// Bootstrap CI for the argmax of g: edges (rows of W, including the implicit
/// zero rows) are resampled with replacement, every lambda that was fitted in
/// `reference` is refitted on the replicate (warm-started from the reference
/// fit), and the empirical (1 - level)/2 and (1 + level)/2 quantiles of the
/// per-replicate argmax locations are returned.
ArgmaxCI argmax_ci(const CountMatrix& counts, const std::vector<LambdaFit>& reference,
                   const RopeConfig& config, std::optional<double> pi_max);

/// Convenience overload that computes the first-pass reference fits.
ArgmaxCI argmax_ci(const CountMatrix& counts, const RopeConfig& config,
                   std::optional<double> pi_max = std::nullopt);

/// FDR estimate for thresholding counts at t, clamped to [0, 1].
double fdr_at_threshold(const LambdaFit& fit, const CountHistogram& h, int t);

/// fdr + z sqrt(fdr (1 - fdr) / tail), clamped to [0, 1].
double fdr_confidence_bound(double fdr, std::int64_t tail);

/// Upper confidence bound FDR(t) + z sqrt(FDR(t)(1 - FDR(t)) / tail(t)),
/// clamped to [0, 1]; nullopt when the empirical tail at t is empty.
std::optional<double> fdr_upper_bound(const LambdaFit& fit, const CountHistogram& h, int t);

/// Running minimum of the upper bound over thresholds t <= w.
double qvalue(const LambdaFit& fit, const CountHistogram& h, int w);

/// q(w) for every w in {0..B}.
std::vector<double> qvalue_table(const LambdaFit& fit, const CountHistogram& h);

struct EdgeQValue {
  Edge edge;
  int count = 0;
  double qvalue = 1.0;
};

struct RopeResult {
  int d = 0;
  int B = 0;
  std::vector<double> lambdas;
  std::vector<LambdaFit> fits;              ///< first pass, one per lambda
  std::vector<LambdaFit> constrained_fits;  ///< second pass, pi <= pi_star
  ArgmaxCI first_ci;
  ArgmaxCI second_ci;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double pi_star = 0.0;
  LambdaFit final_fit;
  CountHistogram final_histogram;
  /// Edges with a nonzero count at lambda_b, sorted by ascending q-value.
  std::vector<EdgeQValue> qvalues;
  double qvalue_zero_count = 1.0;  ///< q-value shared by all zero-count edges
  std::vector<std::string> notes;
};

/// Joint procedure: first-pass fits, lambda_a from the upper CI end of the
/// g argmax, pi* = pi(lambda_a), constrained refits with pi <= pi*, lambda_b
/// from the lower CI end over the constrained fits, and q-values from the
/// constrained fit at lambda_b. Throws NotFittable when no column is
/// U-shaped.
RopeResult run_rope(const CountMatrix& counts, const RopeConfig& config = {});

/// Edges with q-value strictly below target_fdr.
EdgeSet select_edges(const RopeResult& result, double target_fdr);

/// Edges selected by q-values computed from a single fit at lambda index k
/// (no joint constraint); used to compare against the joint procedure.
EdgeSet select_from_fit(const CountMatrix& counts, std::size_t k, const LambdaFit& fit,
                        double target_fdr);

}  // namespace rope
