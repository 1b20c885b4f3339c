#include "rope/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rope/error.hpp"
#include "rope/rng.hpp"

namespace rope {

Edge pair_from_index(std::size_t index, int d) {
  // Walk rows; d is small enough (<= tens of thousands) for this to be cheap.
  int i = 0;
  std::size_t row_start = 0;
  while (true) {
    const std::size_t row_len = static_cast<std::size_t>(d - i - 1);
    if (index < row_start + row_len) {
      return {i, i + 1 + static_cast<int>(index - row_start)};
    }
    row_start += row_len;
    ++i;
    if (i >= d) throw InvalidArgument("pair index out of range");
  }
}

EdgeSet::EdgeSet(int n_nodes) : n_nodes_(n_nodes) {
  require(n_nodes >= 0, "EdgeSet: negative node count");
}

EdgeSet::EdgeSet(int n_nodes, std::vector<Edge> edges)
    : n_nodes_(n_nodes), edges_(std::move(edges)) {
  require(n_nodes >= 0, "EdgeSet: negative node count");
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    require(e.i != e.j, "EdgeSet: self-loop (" + std::to_string(e.i) + ")");
    require(e.i >= 0 && e.j < n_nodes_, "EdgeSet: node index out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool EdgeSet::contains(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

std::vector<int> EdgeSet::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(n_nodes_), 0);
  for (const auto& e : edges_) {
    ++deg[static_cast<std::size_t>(e.i)];
    ++deg[static_cast<std::size_t>(e.j)];
  }
  return deg;
}

Topology parse_topology(std::string_view name) {
  if (name == "scale_free" || name == "scale-free" || name == "scalefree") return Topology::scale_free;
  if (name == "hubby") return Topology::hubby;
  if (name == "chain") return Topology::chain;
  throw InvalidArgument("unknown topology '" + std::string(name) + "'");
}

std::string_view to_string(Topology kind) {
  switch (kind) {
    case Topology::scale_free: return "scale_free";
    case Topology::hubby: return "hubby";
    case Topology::chain: return "chain";
  }
  return "?";
}

SignalLevel parse_signal(std::string_view name) {
  if (name == "strong") return SignalLevel::strong();
  if (name == "weak") return SignalLevel::weak();
  throw InvalidArgument("unknown signal level '" + std::string(name) + "'");
}

namespace {

EdgeSet chain(int n) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return EdgeSet(n, std::move(edges));
}

class EdgeBuilder {
 public:
  explicit EdgeBuilder(int n) : n_(n), deg_(static_cast<std::size_t>(n), 0) {}

  bool add(int a, int b) {
    if (a == b) return false;
    const Edge e{std::min(a, b), std::max(a, b)};
    if (!set_.insert(e).second) return false;
    endpoints_.push_back(a);
    endpoints_.push_back(b);
    ++deg_[static_cast<std::size_t>(a)];
    ++deg_[static_cast<std::size_t>(b)];
    return true;
  }

  void remove(const Edge& e) {
    set_.erase(e);
    --deg_[static_cast<std::size_t>(e.i)];
    --deg_[static_cast<std::size_t>(e.j)];
    // Endpoint list is rebuilt lazily; removal only happens in the final trim.
    endpoints_.clear();
  }

  // Node drawn with probability proportional to its degree.
  int preferential(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, endpoints_.size() - 1);
    return endpoints_[pick(rng)];
  }

  std::size_t size() const { return set_.size(); }
  int degree(int v) const { return deg_[static_cast<std::size_t>(v)]; }
  const std::set<Edge>& edges() const { return set_; }

  EdgeSet finish() const { return EdgeSet(n_, {set_.begin(), set_.end()}); }

 private:
  int n_;
  std::vector<int> deg_;
  std::set<Edge> set_;
  std::vector<int> endpoints_;
};

EdgeSet scale_free(int n, std::size_t target, Rng& rng) {
  const std::size_t max_edges = pair_count(n);
  require(target >= 1 && target <= max_edges,
          "scale_free: target_edges " + std::to_string(target) + " infeasible for " +
              std::to_string(n) + " nodes");

  std::vector<int> nodes(static_cast<std::size_t>(n));
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const int active = target + 1 >= static_cast<std::size_t>(n) ? n : static_cast<int>(target) + 1;
  nodes.resize(static_cast<std::size_t>(active));

  const int m = std::max(1, static_cast<int>(std::lround(static_cast<double>(target) /
                                                         static_cast<double>(active - 1))));
  EdgeBuilder g(n);
  const int seed_size = std::min(m + 1, active);
  for (int a = 0; a < seed_size; ++a)
    for (int b = a + 1; b < seed_size; ++b) g.add(nodes[a], nodes[b]);

  for (int t = seed_size; t < active; ++t) {
    const int links = std::min(m, t);
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < links) chosen.insert(g.preferential(rng));
    for (int v : chosen) g.add(nodes[static_cast<std::size_t>(t)], v);
  }

  std::uniform_int_distribution<int> uniform_active(0, active - 1);
  std::size_t attempts = 0;
  while (g.size() < target) {
    if (++attempts > 50 * max_edges) {
      // Dense targets: fall back to uniform choice among remaining pairs.
      std::vector<Edge> missing;
      for (int a = 0; a < active; ++a)
        for (int b = a + 1; b < active; ++b) {
          const Edge e{std::min(nodes[a], nodes[b]), std::max(nodes[a], nodes[b])};
          if (!g.edges().contains(e)) missing.push_back(e);
        }
      std::shuffle(missing.begin(), missing.end(), rng);
      for (std::size_t k = 0; g.size() < target; ++k) g.add(missing[k].i, missing[k].j);
      break;
    }
    g.add(g.preferential(rng), nodes[static_cast<std::size_t>(uniform_active(rng))]);
  }

  while (g.size() > target) {
    std::vector<Edge> removable;
    for (const auto& e : g.edges())
      if (g.degree(e.i) > 1 && g.degree(e.j) > 1) removable.push_back(e);
    if (removable.empty()) removable.assign(g.edges().begin(), g.edges().end());
    std::uniform_int_distribution<std::size_t> pick(0, removable.size() - 1);
    g.remove(removable[pick(rng)]);
  }
  return g.finish();
}

Rng topology_stream(std::uint64_t seed) { return make_stream(seed, 0x70706f6cULL); }

EdgeSet hubby(int n, Rng& rng, std::vector<int>* hub_nodes) {
  const int hubs = std::clamp(static_cast<int>(std::lround(20.0 * n / 500.0)), 1, n - 1);
  const int others = n - hubs;
  std::vector<int> nodes(static_cast<std::size_t>(n));
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const std::vector<int> hub_ids(nodes.begin(), nodes.begin() + hubs);
  const std::vector<int> pool(nodes.begin() + hubs, nodes.end());
  if (hub_nodes) *hub_nodes = hub_ids;

  const double lo = std::log(4.0);
  const double hi = std::log(92.0);
  // Stratified log-uniform degrees: hub k draws from the k-th of `hubs`
  // equal slices of [log 4, log 92], so even a few hubs span the range.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EdgeBuilder g(n);
  for (int k = 0; k < hubs; ++k) {
    const int h = hub_ids[static_cast<std::size_t>(k)];
    const double slice = (static_cast<double>(k) + unit(rng)) / static_cast<double>(hubs);
    int degree = static_cast<int>(std::lround(std::exp(lo + slice * (hi - lo))));
    degree = std::clamp(degree, std::min(4, others), std::min(92, others));
    std::vector<int> picked;
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), degree, rng);
    for (int v : picked) g.add(h, v);
  }
  return g.finish();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue decomposition failed");
  return solver.eigenvalues()(0);
}

void unit_diagonal(Eigen::MatrixXd& m) {
  const Eigen::VectorXd s = m.diagonal().cwiseSqrt().cwiseInverse();
  m = s.asDiagonal() * m * s.asDiagonal();
  m = 0.5 * (m + m.transpose());
  m.diagonal().setOnes();
}

// Adds eps * I with eps = floor - lambda_min until the unit-diagonal
// rescaling is positive definite above accept_floor.
void repair(Eigen::MatrixXd& m, const CovarianceOptions& opt) {
  for (int it = 0; it < opt.max_repairs; ++it) {
    unit_diagonal(m);
    const double lmin = min_eigenvalue(m);
    if (lmin > opt.accept_floor) return;
    m.diagonal().array() += std::max(0.0, opt.eigen_floor - lmin);
  }
  throw NumericalError("build_covariance: positive-definite repair did not converge in " +
                       std::to_string(opt.max_repairs) + " iterations");
}

}  // namespace

EdgeSet gen_topology(Topology kind, int n_nodes, std::optional<std::size_t> target_edges,
                     std::uint64_t seed) {
  require(n_nodes >= 2, "gen_topology: n_nodes must be >= 2");
  Rng rng = topology_stream(seed);
  switch (kind) {
    case Topology::chain: return chain(n_nodes);
    case Topology::scale_free:
      return scale_free(n_nodes, target_edges.value_or(static_cast<std::size_t>(n_nodes - 1)), rng);
    case Topology::hubby: return hubby(n_nodes, rng, nullptr);
  }
  throw InvalidArgument("gen_topology: unknown kind");
}

EdgeSet gen_hubby(int n_nodes, std::uint64_t seed, std::vector<int>* hub_nodes) {
  require(n_nodes >= 2, "gen_topology: n_nodes must be >= 2");
  Rng rng = topology_stream(seed);
  return hubby(n_nodes, rng, hub_nodes);
}

std::vector<double> draw_edge_strengths(const EdgeSet& edges, const SignalLevel& signal,
                                        std::uint64_t seed) {
  require(signal.mean > 0.0 && signal.sd >= 0.0, "signal: need mean > 0 and sd >= 0");
  Rng rng = make_stream(seed, 0x636f76ULL);
  std::normal_distribution<double> draw(signal.mean, signal.sd);
  std::vector<double> values;
  values.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k)
    values.push_back(signal.sd > 0.0 ? draw(rng) : signal.mean);
  return values;
}

Eigen::MatrixXd build_covariance(const EdgeSet& edges, const SignalLevel& signal,
                                 std::uint64_t seed, const CovarianceOptions& options) {
  const int d = edges.n_nodes();
  require(d >= 1, "build_covariance: empty node set");
  const auto strengths = draw_edge_strengths(edges, signal, seed);
  const double sign = options.pattern == StrengthPattern::precision ? -1.0 : 1.0;

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges.edges()[k];
    m(e.i, e.j) = m(e.j, e.i) = sign * strengths[k];
  }
  if (edges.empty()) return m;

  repair(m, options);
  if (options.pattern == StrengthPattern::precision) {
    m = m.llt().solve(Eigen::MatrixXd::Identity(d, d));
    unit_diagonal(m);
    if (min_eigenvalue(m) <= options.accept_floor)
      throw NumericalError("build_covariance: inverted precision is not positive definite");
  }
  return m;
}

DataMatrix sample_gaussian(const Eigen::MatrixXd& cov, int n, std::uint64_t seed) {
  require(n >= 1, "sample_gaussian: n must be >= 1");
  require(cov.rows() == cov.cols() && cov.rows() >= 1, "sample_gaussian: covariance not square");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_gaussian: Cholesky factorisation failed (covariance not PD)");

  const Eigen::Index d = cov.rows();
  Rng rng = make_stream(seed, 0x73616d70ULL);
  std::normal_distribution<double> z;
  Eigen::MatrixXd standard(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) standard(r, c) = z(rng);

  DataMatrix out;
  out.values = standard * llt.matrixL().transpose();
  out.column_names.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) out.column_names.push_back("x" + std::to_string(c));
  return out;
}

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double column_mad(const Eigen::MatrixXd& x, Eigen::Index c) {
  std::vector<double> col(x.col(c).data(), x.col(c).data() + x.rows());
  const double med = median(col);
  for (auto& v : col) v = std::abs(v - med);
  return median(std::move(col));
}

}  // namespace

DataMatrix mad_filter(const DataMatrix& data, double keep_fraction) {
  require(keep_fraction > 0.0 && keep_fraction <= 1.0, "mad_filter: keep_fraction in (0, 1]");
  require(data.n() >= 1, "mad_filter: empty data");
  const Eigen::Index d = data.d();
  std::vector<double> mad(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) mad[static_cast<std::size_t>(c)] = column_mad(data.values, c);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return mad[static_cast<std::size_t>(a)] > mad[static_cast<std::size_t>(b)];
  });
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(d)));
  order.resize(keep);
  std::sort(order.begin(), order.end());

  DataMatrix out;
  out.values.resize(data.n(), static_cast<Eigen::Index>(keep));
  for (std::size_t k = 0; k < keep; ++k) {
    out.values.col(static_cast<Eigen::Index>(k)) = data.values.col(order[k]);
    if (!data.column_names.empty())
      out.column_names.push_back(data.column_names[static_cast<std::size_t>(order[k])]);
  }
  return out;
}

DataMatrix mad_scale(const DataMatrix& data) {
  DataMatrix out = data;
  for (Eigen::Index c = 0; c < out.d(); ++c) {
    const double mad = column_mad(out.values, c);
    if (mad > 0.0) out.values.col(c) /= mad;
  }
  return out;
}

}  // namespace rope
