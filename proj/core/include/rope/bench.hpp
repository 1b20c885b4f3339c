#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rope/netgen.hpp"
#include "rope/rope.hpp"
#include "rope/select.hpp"

namespace rope {

/// Contiguous lambda-index range [first, last] of a penalty grid.
struct LambdaWindow {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
};

/// Every contiguous sub-grid of length >= 2 plus every singleton.
std::vector<LambdaWindow> all_windows(std::size_t n_lambdas);

struct StabSelConfig {
  std::vector<int> thresholds;          ///< empty: floor(B/2)+1 .. B
  std::vector<LambdaWindow> windows;    ///< empty: all_windows
  double target_fdr = 0.1;
};

/// Bound on the expected number of false selections,
/// q^2 / ((2 t / B - 1) p), with q the mean number of edges selected per
/// (lambda, resample) over the window.
double stabsel_bound(const CountMatrix& counts, const LambdaWindow& window, int t);

/// Same bound from its ingredients.
double stabsel_bound(double q, int t, int B, std::size_t p);

struct SelectionOutcome {
  EdgeSet selected;
  std::optional<EdgeSet> truth;
  std::optional<double> fdr;
  std::optional<double> tpr;
  /// Chosen window and threshold; unset when nothing qualified.
  std::optional<LambdaWindow> window;
  std::optional<int> threshold;
  double fdr_bound = 0.0;
};

/// Searches (window, t) for the largest selection {j : max_window W_j > t}
/// whose bound / #selected is at most the target. Ties favour larger t.
SelectionOutcome stabsel_select(const CountMatrix& counts, const StabSelConfig& config);

struct Confusion {
  double fdr = 0.0;
  double tpr = 0.0;
};

/// fdr = |selected \ truth| / |selected| (0 when nothing is selected),
/// tpr = |selected & truth| / |truth|.
Confusion confusion(const EdgeSet& selected, const EdgeSet& truth);

/// F1 variant that keeps decreasing in fdr once fdr exceeds the target.
double modified_f1(double fdr, double tpr, double target_fdr);

/// Fleiss' kappa from an items x categories table of rating counts; every
/// row must sum to the same number of raters (>= 2). Returns 1 when both the
/// observed and chance agreement are 1; throws InvalidArgument when only the
/// chance agreement is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& ratings);

/// Two-category kappa over a raters x items selection matrix.
double fleiss_kappa_binary(const std::vector<std::vector<bool>>& selections);

struct Scenario {
  Topology topology = Topology::scale_free;
  std::optional<std::size_t> target_edges;
  SignalLevel signal = SignalLevel::strong();
  std::string signal_name = "strong";
  StrengthPattern pattern = StrengthPattern::covariance;
  int d = 100;
  int n = 200;
  int B = 100;
  int steps = 10;
  double lambda_min = 0.02;
  double lambda_max = 0.3;
  double weakness = 0.8;
  ResampleKind rope_resampling = ResampleKind::bootstrap;
  /// When false, stability selection gets its own subsampled counts at
  /// floor(n / 2) instead of sharing the ROPE counts.
  bool stabsel_shares_counts = true;
  std::vector<double> targets{0.05, 0.1, 0.15};
  int replicates = 20;
  std::uint64_t seed = 1;
  RopeConfig rope;
  bool include_first_pass = true;  ///< also report the single-lambda first-pass fit
  int threads = 1;
};

struct ReportRow {
  std::string method;
  std::string topology;
  std::string signal;
  int n = 0;
  int B = 0;
  int steps = 0;
  double weakness = 0.0;
  double target_fdr = 0.0;
  int replicate = 0;
  double achieved_fdr = 0.0;
  double tpr = 0.0;
  double f1m = 0.0;
  std::size_t n_selected = 0;
  std::uint64_t seed = 0;
};

/// Seed used for replicate r of a scenario.
std::uint64_t replicate_seed(std::uint64_t master, int replicate);

/// Simulates, counts, and scores ROPE and stability selection (and optionally
/// the first-pass single-lambda fit) for every replicate and target.
/// A method that cannot fit contributes an empty selection.
std::vector<ReportRow> run_comparison(const Scenario& scenario);

/// One replicate of run_comparison.
std::vector<ReportRow> run_replicate(const Scenario& scenario, int replicate);

struct KappaConfig {
  int subsamples = 20;
  int subsample_size = 400;
  std::vector<double> targets{0.05, 0.1, 0.15};
  std::uint64_t seed = 1;
  RopeConfig rope;
  int threads = 1;
};

struct KappaRow {
  std::string method;
  double target_fdr = 0.0;
  std::optional<double> kappa;  ///< unset when every subsample selected nothing
  int n_subsamples = 0;
};

/// Subsamples the resamples without replacement, recomputes W on each
/// subsample, runs ROPE and stability selection, and measures agreement of
/// the selections across subsamples.
std::vector<KappaRow> kappa_analysis(const ResampleSelections& selections, const KappaConfig& config);

}  // namespace rope
