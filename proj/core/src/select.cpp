#include "rope/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rope/error.hpp"
#include "rope/parallel.hpp"
#include "rope/rng.hpp"

namespace rope {

CountHistogram::CountHistogram(int B_, std::vector<std::int64_t> bins_)
    : B(B_), bins(std::move(bins_)) {
  require(B >= 0 && bins.size() == static_cast<std::size_t>(B) + 1,
          "CountHistogram: need B + 1 bins");
  for (auto v : bins) require(v >= 0, "CountHistogram: negative bin");
}

CountHistogram CountHistogram::from_counts(std::span<const int> counts, int B, std::size_t p) {
  require(counts.size() <= p, "CountHistogram: more counts than potential edges");
  std::vector<std::int64_t> bins(static_cast<std::size_t>(B) + 1, 0);
  for (int w : counts) {
    require(w >= 0 && w <= B, "CountHistogram: count outside [0, B]");
    ++bins[static_cast<std::size_t>(w)];
  }
  bins[0] += static_cast<std::int64_t>(p - counts.size());
  return CountHistogram(B, std::move(bins));
}

std::int64_t CountHistogram::p() const {
  return std::accumulate(bins.begin(), bins.end(), std::int64_t{0});
}

std::int64_t CountHistogram::tail(int t) const {
  if (t > B) return 0;
  return std::accumulate(bins.begin() + std::max(t, 0), bins.end(), std::int64_t{0});
}

PenaltyGrid::PenaltyGrid(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  require(!lambdas_.empty(), "PenaltyGrid: need at least one lambda");
  for (std::size_t k = 0; k < lambdas_.size(); ++k) {
    require(lambdas_[k] > 0.0 && std::isfinite(lambdas_[k]), "PenaltyGrid: lambdas must be positive");
    require(k == 0 || lambdas_[k] > lambdas_[k - 1], "PenaltyGrid: lambdas must be strictly increasing");
  }
}

PenaltyGrid PenaltyGrid::log_spaced(double lambda_min, double lambda_max, int steps) {
  require(lambda_min > 0.0 && lambda_min < lambda_max, "PenaltyGrid: need 0 < lambda_min < lambda_max");
  require(steps >= 2, "PenaltyGrid: need at least 2 steps");
  std::vector<double> values(static_cast<std::size_t>(steps));
  const double lo = std::log(lambda_min);
  const double step = (std::log(lambda_max) - lo) / (steps - 1);
  for (int k = 0; k < steps; ++k) values[static_cast<std::size_t>(k)] = std::exp(lo + step * k);
  values.front() = lambda_min;
  values.back() = lambda_max;
  return PenaltyGrid(std::move(values));
}

ResampleKind parse_resample_kind(std::string_view name) {
  if (name == "bootstrap") return ResampleKind::bootstrap;
  if (name == "subsample") return ResampleKind::subsample;
  throw InvalidArgument("unknown resampling kind '" + std::string(name) + "'");
}

std::string_view to_string(ResampleKind kind) {
  return kind == ResampleKind::bootstrap ? "bootstrap" : "subsample";
}

int ResamplePlan::rows_per_resample(int n) const {
  if (kind == ResampleKind::bootstrap) return n;
  return subsample_size > 0 ? subsample_size : n / 2;
}

void ResamplePlan::validate(int n) const {
  require(B >= 1, "ResamplePlan: B must be >= 1");
  require(weakness > 0.0 && weakness <= 1.0, "ResamplePlan: weakness must be in (0, 1]");
  if (kind == ResampleKind::subsample) {
    const int m = rows_per_resample(n);
    require(m >= 2 && m < n, "ResamplePlan: subsample size must be in [2, n)");
  }
}

namespace {

std::vector<double> inverse(const std::vector<double>& w) {
  std::vector<double> out(w.size());
  std::transform(w.begin(), w.end(), out.begin(), [](double v) { return 1.0 / v; });
  return out;
}

// Nonzero coefficients of every node regression, merged by the OR rule.
template <class Sink>
void select_path(const GramLasso& solver, const std::vector<double>& descending,
                 double weakness, std::uint64_t seed, std::uint64_t resample, Sink&& sink) {
  const int d = solver.dimension();
  std::vector<std::vector<std::uint32_t>> per_lambda(descending.size());
  Eigen::VectorXd beta(d);
  for (int j = 0; j < d; ++j) {
    if (!solver.usable(j)) continue;
    Rng rng = make_stream(seed, resample, 1 + static_cast<std::uint64_t>(j));
    const auto penalty = inverse(randomized_weights(d, weakness, rng));
    beta.setZero();
    for (std::size_t k = 0; k < descending.size(); ++k) {
      solver.fit(j, descending[k], penalty, beta);
      for (int m = 0; m < d; ++m) {
        if (beta(m) == 0.0) continue;
        const int a = std::min(j, m);
        const int b = std::max(j, m);
        per_lambda[k].push_back(static_cast<std::uint32_t>(pair_index(a, b, d)));
      }
    }
  }
  for (std::size_t k = 0; k < per_lambda.size(); ++k) {
    auto& ids = per_lambda[k];
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    sink(k, ids);
  }
}

Eigen::MatrixXd draw_resample(const Eigen::MatrixXd& x, const ResamplePlan& plan,
                              std::uint64_t resample) {
  const int n = static_cast<int>(x.rows());
  const int m = plan.rows_per_resample(n);
  Rng rng = make_stream(plan.seed, resample, 0);
  std::vector<int> rows(static_cast<std::size_t>(m));
  if (plan.kind == ResampleKind::bootstrap) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (auto& r : rows) r = pick(rng);
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < m; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(pick(rng))]);
    }
    std::copy_n(all.begin(), m, rows.begin());
  }
  Eigen::MatrixXd out(m, x.cols());
  for (int r = 0; r < m; ++r) out.row(r) = x.row(rows[static_cast<std::size_t>(r)]);
  return out;
}

void check_inputs(const DataMatrix& data, const PenaltyGrid& grid, const ResamplePlan& plan) {
  require(data.n() >= 10, "compute_counts: need at least 10 observations");
  require(data.d() >= 2, "compute_counts: need at least 2 variables");
  require(grid.size() >= 1, "compute_counts: empty penalty grid");
  require(data.values.allFinite(), "compute_counts: data contain non-finite values");
  plan.validate(static_cast<int>(data.n()));
}

// Runs one resample and reports (lambda index in increasing order, ids).
template <class Sink>
void run_resample(const DataMatrix& data, const PenaltyGrid& grid, const ResamplePlan& plan,
                  const LassoOptions& options, std::size_t b, std::vector<std::string>& warnings,
                  Sink&& sink) {
  Eigen::MatrixXd x = draw_resample(data.values, plan, b);
  auto usable = standardize(x);
  for (std::size_t c = 0; c < usable.size(); ++c) {
    if (!usable[c])
      warnings.push_back("resample " + std::to_string(b) + ": column " + std::to_string(c) +
                         " has zero variance and was dropped");
  }
  GramLasso solver(x, std::move(usable), options);
  std::vector<double> descending(grid.values().rbegin(), grid.values().rend());
  const std::size_t K = grid.size();
  select_path(solver, descending, plan.weakness, plan.seed, b,
              [&](std::size_t k_desc, const std::vector<std::uint32_t>& ids) {
                sink(K - 1 - k_desc, ids);
              });
}

}  // namespace

EdgeSet neighborhood_edges(const Eigen::MatrixXd& standardized, double lambda, double weakness,
                           Rng& rng, const LassoOptions& options) {
  require(lambda > 0.0, "neighborhood_edges: lambda must be positive");
  const int d = static_cast<int>(standardized.cols());
  GramLasso solver(standardized, {}, options);
  std::vector<Edge> edges;
  Eigen::VectorXd beta(d);
  for (int j = 0; j < d; ++j) {
    const auto penalty = inverse(randomized_weights(d, weakness, rng));
    beta.setZero();
    solver.fit(j, lambda, penalty, beta);
    for (int m = 0; m < d; ++m)
      if (beta(m) != 0.0) edges.push_back({std::min(j, m), std::max(j, m)});
  }
  return EdgeSet(d, std::move(edges));
}

std::vector<int> CountMatrix::column(std::size_t k) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.counts[k]);
  return out;
}

CountHistogram CountMatrix::histogram(std::size_t k) const {
  require(k < n_lambdas(), "CountMatrix: lambda index out of range");
  const auto col = column(k);
  return CountHistogram::from_counts(col, B(), p());
}

int CountMatrix::count(const Edge& edge, std::size_t k) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), edge,
                             [](const CountRow& r, const Edge& e) { return r.edge < e; });
  if (it == rows.end() || it->edge != edge) return 0;
  return it->counts[k];
}

void CountMatrix::validate() const {
  require(d >= 2, "CountMatrix: need d >= 2");
  require(B() >= 1, "CountMatrix: need B >= 1");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require(row.edge.i >= 0 && row.edge.i < row.edge.j && row.edge.j < d,
            "CountMatrix: invalid edge in row " + std::to_string(r));
    require(r == 0 || rows[r - 1].edge < row.edge, "CountMatrix: rows not sorted/unique");
    require(row.counts.size() == n_lambdas(), "CountMatrix: row width != number of lambdas");
    for (int c : row.counts) require(c >= 0 && c <= B(), "CountMatrix: count outside [0, B]");
  }
}

namespace {

CountMatrix from_dense(int d, int n, const PenaltyGrid& grid, const ResamplePlan& plan,
                       const std::vector<int>& dense) {
  CountMatrix out;
  out.d = d;
  out.n = n;
  out.grid = grid;
  out.plan = plan;
  const std::size_t K = grid.size();
  const std::size_t p = pair_count(d);
  int i = 0;
  int j = 1;
  for (std::size_t e = 0; e < p; ++e) {
    const int* row = dense.data() + e * K;
    if (std::any_of(row, row + K, [](int v) { return v != 0; }))
      out.rows.push_back({{i, j}, std::vector<int>(row, row + K)});
    if (++j == d) {
      ++i;
      j = i + 1;
    }
  }
  return out;
}

}  // namespace

CountMatrix compute_counts(const DataMatrix& data, const PenaltyGrid& grid,
                           const ResamplePlan& plan, int threads, const LassoOptions& options) {
  check_inputs(data, grid, plan);
  const int d = static_cast<int>(data.d());
  const std::size_t K = grid.size();
  const std::size_t p = pair_count(d);
  const auto B = static_cast<std::size_t>(plan.B);
  const std::size_t chunks = std::min<std::size_t>(B, static_cast<std::size_t>(std::max(threads, 1)));

  std::vector<std::vector<int>> partial(chunks);
  std::vector<std::vector<std::string>> warnings(B);
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.assign(p * K, 0);
    for (std::size_t b = c; b < B; b += chunks) {
      run_resample(data, grid, plan, options, b, warnings[b],
                   [&](std::size_t k, const std::vector<std::uint32_t>& ids) {
                     for (auto id : ids) ++acc[static_cast<std::size_t>(id) * K + k];
                   });
    }
  });
  for (std::size_t c = 1; c < chunks; ++c)
    for (std::size_t x = 0; x < p * K; ++x) partial[0][x] += partial[c][x];

  CountMatrix out = from_dense(d, static_cast<int>(data.n()), grid, plan, partial[0]);
  for (auto& w : warnings) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
  return out;
}

ResampleSelections compute_selections(const DataMatrix& data, const PenaltyGrid& grid,
                                      const ResamplePlan& plan, int threads,
                                      const LassoOptions& options) {
  check_inputs(data, grid, plan);
  ResampleSelections out;
  out.d = static_cast<int>(data.d());
  out.n = static_cast<int>(data.n());
  out.grid = grid;
  out.plan = plan;
  out.selected.assign(static_cast<std::size_t>(plan.B),
                      std::vector<std::vector<std::uint32_t>>(grid.size()));
  parallel_for(static_cast<std::size_t>(plan.B), threads, [&](std::size_t b) {
    std::vector<std::string> ignored;
    run_resample(data, grid, plan, options, b, ignored,
                 [&](std::size_t k, const std::vector<std::uint32_t>& ids) {
                   out.selected[b][k] = ids;
                 });
  });
  return out;
}

CountMatrix ResampleSelections::counts(std::span<const std::size_t> resamples) const {
  const std::size_t K = grid.size();
  std::vector<int> dense(pair_count(d) * K, 0);
  for (std::size_t b : resamples) {
    require(b < selected.size(), "ResampleSelections: resample index out of range");
    for (std::size_t k = 0; k < K; ++k)
      for (auto id : selected[b][k]) ++dense[static_cast<std::size_t>(id) * K + k];
  }
  ResamplePlan sub = plan;
  sub.B = static_cast<int>(resamples.size());
  return from_dense(d, n, grid, sub, dense);
}

CountMatrix ResampleSelections::counts() const {
  std::vector<std::size_t> all(selected.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return counts(all);
}

}  // namespace rope
