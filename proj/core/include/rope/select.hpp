#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rope/histogram.hpp"
#include "rope/lasso.hpp"
#include "rope/netgen.hpp"

namespace rope {

/// Strictly increasing positive penalization levels.
class PenaltyGrid {
 public:
  PenaltyGrid() = default;
  explicit PenaltyGrid(std::vector<double> lambdas);

  /// `steps` levels equally spaced on the log scale, endpoints included.
  static PenaltyGrid log_spaced(double lambda_min, double lambda_max, int steps);

  std::size_t size() const { return lambdas_.size(); }
  double operator[](std::size_t k) const { return lambdas_[k]; }
  const std::vector<double>& values() const { return lambdas_; }

  friend bool operator==(const PenaltyGrid&, const PenaltyGrid&) = default;

 private:
  std::vector<double> lambdas_;
};

enum class ResampleKind { bootstrap, subsample };

ResampleKind parse_resample_kind(std::string_view name);
std::string_view to_string(ResampleKind kind);

struct ResamplePlan {
  ResampleKind kind = ResampleKind::bootstrap;
  int B = 500;
  int subsample_size = 0;  ///< 0 selects floor(n / 2)
  double weakness = 0.8;
  std::uint64_t seed = 1;

  /// Rows drawn per resample for a data set with n observations.
  int rows_per_resample(int n) const;
  void validate(int n) const;

  friend bool operator==(const ResamplePlan&, const ResamplePlan&) = default;
};

/// OR-rule neighbourhood selection on an already standardized design: every
/// node is lasso-regressed on all others with fresh randomized penalties
/// lambda / W_k, W_k drawn by randomized_weights from `rng`.
EdgeSet neighborhood_edges(const Eigen::MatrixXd& standardized, double lambda, double weakness,
                           Rng& rng, const LassoOptions& options = {});

struct CountRow {
  Edge edge;
  std::vector<int> counts;  ///< one entry per lambda

  friend bool operator==(const CountRow&, const CountRow&) = default;
};

/// Edge-presence counts W: rows for edges selected at least once at some
/// lambda; every other edge has count 0 everywhere.
struct CountMatrix {
  int d = 0;
  int n = 0;
  PenaltyGrid grid;
  ResamplePlan plan;
  std::vector<CountRow> rows;  ///< sorted by edge
  std::vector<std::string> warnings;

  std::size_t p() const { return pair_count(d); }
  int B() const { return plan.B; }
  std::size_t n_lambdas() const { return grid.size(); }

  /// Counts of the stored rows at lambda index k, in row order.
  std::vector<int> column(std::size_t k) const;
  CountHistogram histogram(std::size_t k) const;
  int count(const Edge& edge, std::size_t k) const;

  /// Checks 0 <= count <= B, row ordering and shape.
  void validate() const;
};

/// Per-resample selected edge sets, kept for subsample-agreement analyses.
struct ResampleSelections {
  int d = 0;
  int n = 0;
  PenaltyGrid grid;
  ResamplePlan plan;
  /// [resample][lambda] -> sorted pair indices (see pair_index).
  std::vector<std::vector<std::vector<std::uint32_t>>> selected;

  /// Counts over the given resamples only; the result's plan.B equals
  /// resamples.size().
  CountMatrix counts(std::span<const std::size_t> resamples) const;
  CountMatrix counts() const;
};

/// Edge-presence counts over plan.B resamples. Each resample derives its own
/// random streams from (plan.seed, resample index[, node]) and fits the whole
/// grid with warm starts from the largest lambda down, so the result does not
/// depend on `threads`.
CountMatrix compute_counts(const DataMatrix& data, const PenaltyGrid& grid,
                           const ResamplePlan& plan, int threads = 1,
                           const LassoOptions& options = {});

ResampleSelections compute_selections(const DataMatrix& data, const PenaltyGrid& grid,
                                      const ResamplePlan& plan, int threads = 1,
                                      const LassoOptions& options = {});

}  // namespace rope
