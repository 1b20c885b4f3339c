#include "rope/rope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rope/error.hpp"
#include "rope/parallel.hpp"
#include "rope/rng.hpp"

namespace rope {

double separation(const LambdaFit& fit, std::int64_t p) {
  if (!fit.fitted) return 0.0;
  return separation(fit.params, fit.B, p);
}

std::optional<std::size_t> argmax_separation(const std::vector<LambdaFit>& fits) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!fits[k].fitted) continue;
    // Strict comparison keeps the smallest lambda among ties (fits are in
    // increasing lambda order).
    if (!best || fits[k].separation > fits[*best].separation) best = k;
  }
  return best;
}

std::vector<LambdaFit> fit_all(const CountMatrix& counts, const FitOptions& options, int threads) {
  std::vector<LambdaFit> fits(counts.n_lambdas());
  parallel_for(fits.size(), threads, [&](std::size_t k) {
    const auto h = counts.histogram(k);
    try {
      fits[k] = fit_lambda(h, options, counts.grid[k]);
    } catch (const NotFittable&) {
      fits[k].lambda = counts.grid[k];
      fits[k].B = h.B;
      fits[k].u_shaped = is_u_shaped(h, options.inflation_fraction, options.u_shape);
    }
  });
  return fits;
}

namespace {

// Type-1 (inverse empirical CDF) quantile of sorted values.
double empirical_quantile(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::size_t index_of(const PenaltyGrid& grid, double lambda) {
  const auto& v = grid.values();
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), lambda) - v.begin());
}

// Histograms of one edge-row bootstrap replicate, one per lambda.
std::vector<CountHistogram> replicate_histograms(const CountMatrix& counts, std::uint64_t seed,
                                                 std::size_t replicate) {
  const std::size_t p = counts.p();
  const std::size_t nnz = counts.rows.size();
  Rng rng = make_stream(seed, 0x626f6f74ULL, replicate);
  std::uniform_int_distribution<std::size_t> pick(0, p - 1);
  std::vector<std::int64_t> multiplicity(nnz, 0);
  std::int64_t zeros = 0;
  for (std::size_t draw = 0; draw < p; ++draw) {
    const std::size_t row = pick(rng);
    if (row < nnz) ++multiplicity[row];
    else ++zeros;
  }
  std::vector<CountHistogram> out;
  out.reserve(counts.n_lambdas());
  for (std::size_t k = 0; k < counts.n_lambdas(); ++k) {
    std::vector<std::int64_t> bins(static_cast<std::size_t>(counts.B()) + 1, 0);
    bins[0] = zeros;
    for (std::size_t r = 0; r < nnz; ++r)
      bins[static_cast<std::size_t>(counts.rows[r].counts[k])] += multiplicity[r];
    out.emplace_back(counts.B(), std::move(bins));
  }
  return out;
}

}  // namespace

ArgmaxCI argmax_ci(const CountMatrix& counts, const std::vector<LambdaFit>& reference,
                   const RopeConfig& config, std::optional<double> pi_max) {
  require(reference.size() == counts.n_lambdas(), "argmax_ci: one reference fit per lambda required");
  require(config.n_boot >= 50, "argmax_ci: n_boot must be >= 50");
  require(config.ci_level > 0.0 && config.ci_level < 1.0, "argmax_ci: level must be in (0, 1)");
  std::vector<std::size_t> fitted;
  for (std::size_t k = 0; k < reference.size(); ++k)
    if (reference[k].fitted) fitted.push_back(k);
  if (fitted.size() < 2)
    throw NotFittable("argmax_ci: need at least 2 fitted lambda columns for a CI");

  const auto n_boot = static_cast<std::size_t>(config.n_boot);
  std::vector<std::optional<std::size_t>> winners(n_boot);
  parallel_for(n_boot, config.threads, [&](std::size_t r) {
    const auto hists = replicate_histograms(counts, config.seed, r);
    std::optional<std::size_t> best;
    double best_g = -1.0;
    for (std::size_t k : fitted) {
      FitOptions opt = config.fit;
      opt.pi_max = pi_max;
      opt.warm_start = reference[k].window;
      opt.restarts = config.boot_restarts;
      // Same jitter at every lambda, so identical columns refit identically.
      opt.seed = derive_seed(config.seed, r);
      try {
        const auto fit = fit_lambda(hists[k], opt, counts.grid[k]);
        if (!best || fit.separation > best_g) {
          best = k;
          best_g = fit.separation;
        }
      } catch (const NotFittable&) {
      }
    }
    winners[r] = best;
  });

  ArgmaxCI ci;
  for (const auto& w : winners) {
    if (w) ci.argmax_lambdas.push_back(counts.grid[*w]);
    else ++ci.failed_replicates;
  }
  if (ci.argmax_lambdas.empty()) throw NotFittable("argmax_ci: every bootstrap replicate failed to fit");
  auto sorted = ci.argmax_lambdas;
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - config.ci_level) / 2.0;
  ci.lambda_lo = empirical_quantile(sorted, tail);
  ci.lambda_hi = empirical_quantile(sorted, 1.0 - tail);
  ci.index_lo = index_of(counts.grid, ci.lambda_lo);
  ci.index_hi = index_of(counts.grid, ci.lambda_hi);
  return ci;
}

ArgmaxCI argmax_ci(const CountMatrix& counts, const RopeConfig& config, std::optional<double> pi_max) {
  FitOptions opt = config.fit;
  opt.pi_max = pi_max;
  return argmax_ci(counts, fit_all(counts, opt, config.threads), config, pi_max);
}

double fdr_at_threshold(const LambdaFit& fit, const CountHistogram& h, int t) {
  require(fit.fitted, "fdr_at_threshold: fit is not usable");
  require(t >= 0 && t <= h.B, "fdr_at_threshold: threshold outside [0, B]");
  require(fit.B == h.B, "fdr_at_threshold: histogram and fit disagree on B");
  const std::int64_t tail = h.tail(t);
  require(tail > 0, "fdr_at_threshold: no edges with count >= " + std::to_string(t));
  const auto f1 = null_component(fit.params, h.B);
  double null_tail = 0.0;
  for (int w = t; w <= h.B; ++w) null_tail += f1[static_cast<std::size_t>(w)];
  const double fdr =
      static_cast<double>(h.p()) * (1.0 - fit.params.pi) * null_tail / static_cast<double>(tail);
  return std::clamp(fdr, 0.0, 1.0);
}

double fdr_confidence_bound(double fdr, std::int64_t tail) {
  require(tail > 0, "fdr_confidence_bound: empty tail");
  const double bound = fdr + kZ975 * std::sqrt(fdr * (1.0 - fdr) / static_cast<double>(tail));
  return std::clamp(bound, 0.0, 1.0);
}

std::optional<double> fdr_upper_bound(const LambdaFit& fit, const CountHistogram& h, int t) {
  const std::int64_t tail = h.tail(t);
  if (tail == 0) return std::nullopt;
  return fdr_confidence_bound(fdr_at_threshold(fit, h, t), tail);
}

std::vector<double> qvalue_table(const LambdaFit& fit, const CountHistogram& h) {
  require(fit.fitted, "qvalue: fit is not usable");
  require(fit.B == h.B, "qvalue: histogram and fit disagree on B");
  const auto f1 = null_component(fit.params, h.B);
  const auto p = static_cast<double>(h.p());
  std::vector<double> table(static_cast<std::size_t>(h.B) + 1, 1.0);
  double running = 1.0;
  // Suffix sums over w >= t, accumulated from the top.
  std::vector<double> null_tail(table.size() + 1, 0.0);
  std::vector<std::int64_t> tail(table.size() + 1, 0);
  for (int w = h.B; w >= 0; --w) {
    const auto k = static_cast<std::size_t>(w);
    null_tail[k] = null_tail[k + 1] + f1[k];
    tail[k] = tail[k + 1] + h[w];
  }
  for (int t = 0; t <= h.B; ++t) {
    const auto k = static_cast<std::size_t>(t);
    if (tail[k] > 0) {
      const double fdr =
          std::clamp(p * (1.0 - fit.params.pi) * null_tail[k] / static_cast<double>(tail[k]), 0.0, 1.0);
      running = std::min(running, fdr_confidence_bound(fdr, tail[k]));
    }
    table[k] = running;
  }
  return table;
}

double qvalue(const LambdaFit& fit, const CountHistogram& h, int w) {
  require(w >= 0 && w <= h.B, "qvalue: count outside [0, B]");
  return qvalue_table(fit, h)[static_cast<std::size_t>(w)];
}

namespace {

std::size_t nearest_fitted(const std::vector<LambdaFit>& fits, std::size_t k) {
  for (std::size_t step = 0; step < fits.size(); ++step) {
    if (k + step < fits.size() && fits[k + step].fitted) return k + step;
    if (step <= k && fits[k - step].fitted) return k - step;
  }
  throw NotFittable("no fitted lambda available");
}

ArgmaxCI degenerate_ci(const PenaltyGrid& grid, std::size_t k) {
  ArgmaxCI ci;
  ci.index_lo = ci.index_hi = k;
  ci.lambda_lo = ci.lambda_hi = grid[k];
  return ci;
}

}  // namespace

RopeResult run_rope(const CountMatrix& counts, const RopeConfig& config) {
  counts.validate();
  RopeResult result;
  result.d = counts.d;
  result.B = counts.B();
  result.lambdas = counts.grid.values();

  FitOptions first = config.fit;
  first.pi_max.reset();
  result.fits = fit_all(counts, first, config.threads);
  const auto n_fitted = std::count_if(result.fits.begin(), result.fits.end(),
                                      [](const LambdaFit& f) { return f.fitted; });
  if (n_fitted == 0)
    throw NotFittable("no selection: the selection count histograms are not U-shaped at any lambda");

  if (n_fitted >= 2) {
    result.first_ci = argmax_ci(counts, result.fits, config, std::nullopt);
  } else {
    result.first_ci = degenerate_ci(counts.grid, *argmax_separation(result.fits));
    result.notes.push_back("single fitted lambda: first-pass CI is degenerate");
  }
  result.index_a = result.first_ci.index_hi;
  result.lambda_a = result.first_ci.lambda_hi;
  if (result.fits[result.index_a].fitted) {
    result.pi_star = result.fits[result.index_a].params.pi;
  } else {
    double fallback = 0.0;
    for (std::size_t k = result.first_ci.index_lo; k <= result.first_ci.index_hi; ++k)
      if (result.fits[k].fitted) fallback = std::max(fallback, result.fits[k].params.pi);
    result.pi_star = fallback;
    result.notes.push_back("fit at lambda_a unavailable: pi* is the largest pi over the CI range");
  }

  // Second pass: refit with pi <= pi*. A first-pass optimum that already
  // satisfies the constraint is also the constrained optimum.
  result.constrained_fits.resize(counts.n_lambdas());
  parallel_for(counts.n_lambdas(), config.threads, [&](std::size_t k) {
    const auto& f = result.fits[k];
    auto& out = result.constrained_fits[k];
    if (!f.fitted) {
      out = f;
      return;
    }
    if (f.params.pi <= result.pi_star) {
      out = f;
      return;
    }
    FitOptions opt = config.fit;
    opt.pi_max = result.pi_star;
    opt.warm_start = f.window;
    try {
      out = fit_lambda(counts.histogram(k), opt, counts.grid[k]);
    } catch (const NotFittable&) {
      out = f;
      out.fitted = false;
      out.loglik = std::numeric_limits<double>::quiet_NaN();
      out.separation = 0.0;
    }
  });
  const auto n_constrained = std::count_if(result.constrained_fits.begin(), result.constrained_fits.end(),
                                           [](const LambdaFit& f) { return f.fitted; });
  if (n_constrained == 0) throw NotFittable("no lambda admits a fit with pi <= pi*");

  if (config.reuse_first_pass_ci) {
    result.second_ci = result.first_ci;
  } else if (n_constrained >= 2) {
    result.second_ci = argmax_ci(counts, result.constrained_fits, config, result.pi_star);
  } else {
    result.second_ci = degenerate_ci(counts.grid, *argmax_separation(result.constrained_fits));
    result.notes.push_back("single constrained fit: second-pass CI is degenerate");
  }
  result.index_b = result.second_ci.index_lo;
  if (!result.constrained_fits[result.index_b].fitted) {
    result.index_b = nearest_fitted(result.constrained_fits, result.index_b);
    result.notes.push_back("constrained fit at the lower CI end unavailable; using nearest fitted lambda");
  }
  result.lambda_b = counts.grid[result.index_b];
  result.final_fit = result.constrained_fits[result.index_b];
  result.final_histogram = counts.histogram(result.index_b);

  const auto table = qvalue_table(result.final_fit, result.final_histogram);
  result.qvalue_zero_count = table[0];
  for (const auto& row : counts.rows) {
    const int w = row.counts[result.index_b];
    if (w == 0) continue;
    result.qvalues.push_back({row.edge, w, table[static_cast<std::size_t>(w)]});
  }
  std::stable_sort(result.qvalues.begin(), result.qvalues.end(),
                   [](const EdgeQValue& a, const EdgeQValue& b) { return a.qvalue < b.qvalue; });
  return result;
}

EdgeSet select_edges(const RopeResult& result, double target_fdr) {
  require(target_fdr > 0.0 && target_fdr <= 1.0, "select_edges: target must be in (0, 1]");
  std::vector<Edge> edges;
  for (const auto& q : result.qvalues)
    if (q.qvalue < target_fdr) edges.push_back(q.edge);
  if (result.qvalue_zero_count < target_fdr) {
    // Every zero-count edge qualifies as well.
    std::vector<Edge> listed;
    for (const auto& q : result.qvalues) listed.push_back(q.edge);
    std::sort(listed.begin(), listed.end());
    for (int i = 0; i < result.d; ++i)
      for (int j = i + 1; j < result.d; ++j)
        if (!std::binary_search(listed.begin(), listed.end(), Edge{i, j})) edges.push_back({i, j});
  }
  return EdgeSet(result.d, std::move(edges));
}

EdgeSet select_from_fit(const CountMatrix& counts, std::size_t k, const LambdaFit& fit,
                        double target_fdr) {
  require(k < counts.n_lambdas(), "select_from_fit: lambda index out of range");
  const auto table = qvalue_table(fit, counts.histogram(k));
  std::vector<Edge> edges;
  for (const auto& row : counts.rows)
    if (row.counts[k] > 0 && table[static_cast<std::size_t>(row.counts[k])] < target_fdr)
      edges.push_back(row.edge);
  return EdgeSet(counts.d, std::move(edges));
}

}  // namespace rope
