#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rope {

/// Unordered node pair, stored with i < j.
struct Edge {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Number of potential edges p = d(d-1)/2 among d nodes.
constexpr std::size_t pair_count(int d) {
  return d < 2 ? 0 : static_cast<std::size_t>(d) * static_cast<std::size_t>(d - 1) / 2;
}

/// Row-major index of (i, j), i < j, in the strict upper triangle.
constexpr std::size_t pair_index(int i, int j, int d) {
  const auto ii = static_cast<std::size_t>(i);
  const auto dd = static_cast<std::size_t>(d);
  return ii * dd - ii * (ii + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

Edge pair_from_index(std::size_t index, int d);

/// A set of undirected edges over n_nodes nodes. Edges are kept sorted and
/// unique; construction validates the no-self-loop and range invariants.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(int n_nodes);
  EdgeSet(int n_nodes, std::vector<Edge> edges);

  int n_nodes() const { return n_nodes_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const std::vector<Edge>& edges() const { return edges_; }
  bool contains(int i, int j) const;

  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  std::vector<int> degrees() const;

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  int n_nodes_ = 0;
  std::vector<Edge> edges_;
};

enum class Topology { scale_free, hubby, chain };

Topology parse_topology(std::string_view name);
std::string_view to_string(Topology kind);

/// Generates a ground-truth network.
///
/// chain: a single path 0-1-...-(n-1).
/// scale_free: Barabasi-Albert preferential attachment, then random
///   preferential edge addition or degree-preserving removal until exactly
///   target_edges edges exist (default n_nodes - 1). Targets below
///   n_nodes - 1 build the tree on target_edges + 1 randomly chosen nodes and
///   leave the rest isolated.
/// hubby: round(20 * n_nodes / 500) hubs (at least 1); hub k gets a degree
///   drawn log-uniformly from the k-th of equal log-scale slices of [4, 92]
///   (capped by the number of non-hub nodes)
///   and is attached to that many distinct non-hub nodes.
EdgeSet gen_topology(Topology kind, int n_nodes, std::optional<std::size_t> target_edges,
                     std::uint64_t seed);

/// gen_topology(hubby, ...) that also reports the hub nodes.
EdgeSet gen_hubby(int n_nodes, std::uint64_t seed, std::vector<int>* hub_nodes);

struct SignalLevel {
  double mean = 0.32;
  double sd = 0.13;

  static SignalLevel strong() { return {0.32, 0.13}; }
  static SignalLevel weak() { return {0.25, 0.09}; }
};

SignalLevel parse_signal(std::string_view name);

/// Where the drawn edge strengths are placed before positive-definite repair.
enum class StrengthPattern {
  covariance,  ///< directly on covariance entries of connected pairs
  precision,   ///< as negated precision entries (partial correlations)
};

struct CovarianceOptions {
  StrengthPattern pattern = StrengthPattern::covariance;
  double eigen_floor = 1e-6;     ///< target smallest eigenvalue for the shift
  double accept_floor = 1e-8;    ///< repaired matrix must exceed this
  int max_repairs = 100;
};

/// Connected-pair strengths in edge order, drawn from Normal(mean, sd^2).
/// build_covariance uses exactly these values for the same seed.
std::vector<double> draw_edge_strengths(const EdgeSet& edges, const SignalLevel& signal,
                                        std::uint64_t seed);

/// Symmetric, strictly positive definite, unit-diagonal matrix.
Eigen::MatrixXd build_covariance(const EdgeSet& edges, const SignalLevel& signal,
                                 std::uint64_t seed, const CovarianceOptions& options = {});

/// Observations in rows, variables in columns.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index d() const { return values.cols(); }
};

/// n i.i.d. rows from N(0, cov). Deterministic in (cov, n, seed).
DataMatrix sample_gaussian(const Eigen::MatrixXd& cov, int n, std::uint64_t seed);

/// Keeps the ceil(keep_fraction * d) columns with the largest median absolute
/// deviation, preserving column order.
DataMatrix mad_filter(const DataMatrix& data, double keep_fraction);

/// Rescales each column to median absolute deviation 1. Columns with zero
/// MAD are left unscaled.
DataMatrix mad_scale(const DataMatrix& data);

}  // namespace rope
