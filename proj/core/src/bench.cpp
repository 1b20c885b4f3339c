#include "rope/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rope/error.hpp"
#include "rope/parallel.hpp"
#include "rope/rng.hpp"

namespace rope {

std::vector<LambdaWindow> all_windows(std::size_t n_lambdas) {
  std::vector<LambdaWindow> out;
  for (std::size_t first = 0; first < n_lambdas; ++first)
    for (std::size_t last = first; last < n_lambdas; ++last) out.push_back({first, last});
  return out;
}

double stabsel_bound(double q, int t, int B, std::size_t p) {
  require(B >= 1, "stabsel_bound: B must be >= 1");
  require(2 * t > B, "stabsel_bound: threshold must exceed B / 2");
  require(p > 0, "stabsel_bound: p must be positive");
  return q * q / ((2.0 * t / B - 1.0) * static_cast<double>(p));
}

namespace {

double mean_selected(const CountMatrix& counts, const LambdaWindow& window) {
  require(window.first <= window.last && window.last < counts.n_lambdas(),
          "stabsel: window outside the penalty grid");
  double total = 0.0;
  for (const auto& row : counts.rows)
    for (std::size_t k = window.first; k <= window.last; ++k) total += row.counts[k];
  return total / (static_cast<double>(window.size()) * counts.B());
}

}  // namespace

double stabsel_bound(const CountMatrix& counts, const LambdaWindow& window, int t) {
  return stabsel_bound(mean_selected(counts, window), t, counts.B(), counts.p());
}

SelectionOutcome stabsel_select(const CountMatrix& counts, const StabSelConfig& config) {
  const int B = counts.B();
  auto thresholds = config.thresholds;
  if (thresholds.empty())
    for (int t = B / 2 + 1; t <= B; ++t) thresholds.push_back(t);
  for (int t : thresholds) require(2 * t > B, "stabsel_select: every threshold must exceed B / 2");
  const auto windows = config.windows.empty() ? all_windows(counts.n_lambdas()) : config.windows;

  SelectionOutcome out;
  out.selected = EdgeSet(counts.d);
  std::size_t best_count = 0;
  int best_t = -1;

  std::vector<std::int64_t> above(static_cast<std::size_t>(B) + 2);
  for (const auto& window : windows) {
    const double q = mean_selected(counts, window);
    // above[t] = #edges whose max count over the window exceeds t.
    std::fill(above.begin(), above.end(), 0);
    for (const auto& row : counts.rows) {
      int m = 0;
      for (std::size_t k = window.first; k <= window.last; ++k) m = std::max(m, row.counts[k]);
      if (m > 0) ++above[static_cast<std::size_t>(m) - 1];
    }
    for (int t = B - 1; t >= 0; --t) above[static_cast<std::size_t>(t)] += above[static_cast<std::size_t>(t) + 1];

    for (int t : thresholds) {
      const auto selected = static_cast<std::size_t>(above[static_cast<std::size_t>(t)]);
      if (selected == 0) continue;
      const double bound = stabsel_bound(q, t, B, counts.p()) / static_cast<double>(selected);
      if (bound > config.target_fdr) continue;
      if (selected > best_count || (selected == best_count && t > best_t)) {
        best_count = selected;
        best_t = t;
        out.window = window;
        out.threshold = t;
        out.fdr_bound = bound;
      }
    }
  }
  if (!out.window) return out;

  std::vector<Edge> edges;
  for (const auto& row : counts.rows) {
    int m = 0;
    for (std::size_t k = out.window->first; k <= out.window->last; ++k) m = std::max(m, row.counts[k]);
    if (m > *out.threshold) edges.push_back(row.edge);
  }
  out.selected = EdgeSet(counts.d, std::move(edges));
  return out;
}

Confusion confusion(const EdgeSet& selected, const EdgeSet& truth) {
  require(!truth.empty(), "confusion: empty truth set");
  require(selected.n_nodes() == truth.n_nodes(), "confusion: node counts differ");
  std::size_t hits = 0;
  for (const auto& e : selected)
    if (truth.contains(e.i, e.j)) ++hits;
  Confusion c;
  c.fdr = selected.empty() ? 0.0
                           : static_cast<double>(selected.size() - hits) / static_cast<double>(selected.size());
  c.tpr = static_cast<double>(hits) / static_cast<double>(truth.size());
  return c;
}

double modified_f1(double fdr, double tpr, double target_fdr) {
  require(fdr >= 0.0 && fdr <= 1.0 && tpr >= 0.0 && tpr <= 1.0, "modified_f1: rates must be in [0, 1]");
  require(target_fdr > 0.0 && target_fdr < 1.0, "modified_f1: target must be in (0, 1)");
  const double m = fdr <= target_fdr ? 1.0 - fdr : fdr / target_fdr - target_fdr;
  const double denominator = m + tpr;
  if (denominator == 0.0) return 0.0;
  return 2.0 * (1.0 - fdr) * tpr / denominator;
}

namespace {

// Kappa from per-item category counts; `raters` per item.
double kappa_from_table(const std::vector<std::vector<int>>& ratings, int raters) {
  const std::size_t categories = ratings.front().size();
  std::vector<double> category_total(categories, 0.0);
  double agreement = 0.0;
  for (const auto& row : ratings) {
    require(row.size() == categories, "fleiss_kappa: ragged rating table");
    int row_sum = 0;
    double squares = 0.0;
    for (std::size_t j = 0; j < categories; ++j) {
      require(row[j] >= 0, "fleiss_kappa: negative rating count");
      row_sum += row[j];
      squares += static_cast<double>(row[j]) * row[j];
      category_total[j] += row[j];
    }
    require(row_sum == raters, "fleiss_kappa: every item needs the same number of raters");
    agreement += (squares - raters) / (static_cast<double>(raters) * (raters - 1));
  }
  const auto items = static_cast<double>(ratings.size());
  const double observed = agreement / items;
  double chance = 0.0;
  for (double t : category_total) {
    const double share = t / (items * raters);
    chance += share * share;
  }
  if (std::abs(1.0 - chance) < 1e-15) {
    if (std::abs(1.0 - observed) < 1e-15) return 1.0;
    throw InvalidArgument("fleiss_kappa: undefined (chance agreement is 1)");
  }
  return (observed - chance) / (1.0 - chance);
}

}  // namespace

double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
  require(!ratings.empty(), "fleiss_kappa: need at least one item");
  require(ratings.front().size() >= 1, "fleiss_kappa: need at least one category");
  const int raters = std::accumulate(ratings.front().begin(), ratings.front().end(), 0);
  require(raters >= 2, "fleiss_kappa: need at least 2 raters");
  return kappa_from_table(ratings, raters);
}

double fleiss_kappa_binary(const std::vector<std::vector<bool>>& selections) {
  require(selections.size() >= 2, "fleiss_kappa: need at least 2 raters");
  const std::size_t items = selections.front().size();
  require(items >= 1, "fleiss_kappa: need at least one item");
  const int raters = static_cast<int>(selections.size());
  std::vector<std::vector<int>> table(items, std::vector<int>{0, 0});
  for (const auto& rater : selections) {
    require(rater.size() == items, "fleiss_kappa: raters disagree on the item count");
    for (std::size_t i = 0; i < items; ++i) ++table[i][rater[i] ? 1 : 0];
  }
  return kappa_from_table(table, raters);
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return derive_seed(master, 0x7265706cULL, static_cast<std::uint64_t>(replicate));
}

namespace {

ReportRow score(const Scenario& s, const std::string& method, double target, int replicate,
                std::uint64_t seed, const EdgeSet& selected, const EdgeSet& truth) {
  const auto c = confusion(selected, truth);
  ReportRow row;
  row.method = method;
  row.topology = std::string(to_string(s.topology));
  row.signal = s.signal_name;
  row.n = s.n;
  row.B = s.B;
  row.steps = s.steps;
  row.weakness = s.weakness;
  row.target_fdr = target;
  row.replicate = replicate;
  row.achieved_fdr = c.fdr;
  row.tpr = c.tpr;
  row.f1m = modified_f1(c.fdr, c.tpr, target);
  row.n_selected = selected.size();
  row.seed = seed;
  return row;
}

}  // namespace

std::vector<ReportRow> run_replicate(const Scenario& s, int replicate) {
  const std::uint64_t seed = replicate_seed(s.seed, replicate);
  const EdgeSet truth = gen_topology(s.topology, s.d, s.target_edges, derive_seed(seed, 1));
  CovarianceOptions cov_options;
  cov_options.pattern = s.pattern;
  const auto cov = build_covariance(truth, s.signal, derive_seed(seed, 2), cov_options);
  const DataMatrix data = sample_gaussian(cov, s.n, derive_seed(seed, 3));
  const auto grid = PenaltyGrid::log_spaced(s.lambda_min, s.lambda_max, s.steps);

  ResamplePlan plan;
  plan.kind = s.rope_resampling;
  plan.B = s.B;
  plan.weakness = s.weakness;
  plan.seed = derive_seed(seed, 4);
  const CountMatrix counts = compute_counts(data, grid, plan, 1);

  RopeConfig config = s.rope;
  config.seed = derive_seed(seed, 5);
  config.threads = 1;
  std::optional<RopeResult> result;
  try {
    result = run_rope(counts, config);
  } catch (const NotFittable&) {
  }

  std::optional<CountMatrix> own_counts;
  if (!s.stabsel_shares_counts) {
    ResamplePlan sub = plan;
    sub.kind = ResampleKind::subsample;
    sub.subsample_size = 0;
    sub.seed = derive_seed(seed, 6);
    own_counts = compute_counts(data, grid, sub, 1);
  }
  const CountMatrix& stab_counts = own_counts ? *own_counts : counts;

  std::vector<ReportRow> rows;
  const EdgeSet empty(s.d);
  for (double target : s.targets) {
    rows.push_back(score(s, "rope", target, replicate, seed,
                         result ? select_edges(*result, target) : empty, truth));
    if (s.include_first_pass) {
      EdgeSet single = empty;
      if (result) {
        const auto k = argmax_separation(result->fits);
        if (k) single = select_from_fit(counts, *k, result->fits[*k], target);
      }
      rows.push_back(score(s, "rope_first_pass", target, replicate, seed, single, truth));
    }
    StabSelConfig sc;
    sc.target_fdr = target;
    rows.push_back(score(s, "stabsel", target, replicate, seed,
                         stabsel_select(stab_counts, sc).selected, truth));
  }
  return rows;
}

std::vector<ReportRow> run_comparison(const Scenario& s) {
  require(s.replicates >= 0, "run_comparison: negative replicate count");
  std::vector<std::vector<ReportRow>> per(static_cast<std::size_t>(s.replicates));
  parallel_for(per.size(), s.threads,
               [&](std::size_t r) { per[r] = run_replicate(s, static_cast<int>(r)); });
  std::vector<ReportRow> rows;
  for (auto& block : per) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

std::vector<KappaRow> kappa_analysis(const ResampleSelections& selections, const KappaConfig& config) {
  const auto total = selections.selected.size();
  require(config.subsamples >= 2, "kappa: need at least 2 subsamples");
  require(config.subsample_size >= 1 && static_cast<std::size_t>(config.subsample_size) <= total,
          "kappa: subsample size must be in [1, number of resamples]");
  const std::size_t p = pair_count(selections.d);
  const auto S = static_cast<std::size_t>(config.subsamples);
  const std::size_t T = config.targets.size();

  // [subsample][target] selections per method.
  std::vector<std::vector<EdgeSet>> rope_sel(S), stab_sel(S);
  parallel_for(S, config.threads, [&](std::size_t s) {
    Rng rng = make_stream(config.seed, 0x6b617070ULL, s);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < static_cast<std::size_t>(config.subsample_size); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, total - 1);
      std::swap(order[k], order[pick(rng)]);
    }
    order.resize(static_cast<std::size_t>(config.subsample_size));
    std::sort(order.begin(), order.end());
    const CountMatrix counts = selections.counts(order);

    RopeConfig rc = config.rope;
    // One ROPE seed for all subsamples, so identical subsamples agree exactly.
    rc.seed = derive_seed(config.seed, 0x726f7065ULL);
    rc.threads = 1;
    std::optional<RopeResult> result;
    try {
      result = run_rope(counts, rc);
    } catch (const NotFittable&) {
    }
    for (double target : config.targets) {
      rope_sel[s].push_back(result ? select_edges(*result, target) : EdgeSet(selections.d));
      StabSelConfig sc;
      sc.target_fdr = target;
      stab_sel[s].push_back(stabsel_select(counts, sc).selected);
    }
  });

  auto agreement = [&](const std::vector<std::vector<EdgeSet>>& sel, std::size_t t) -> std::optional<double> {
    std::vector<int> yes(p, 0);
    bool any = false;
    for (std::size_t s = 0; s < S; ++s)
      for (const auto& e : sel[s][t]) {
        ++yes[pair_index(e.i, e.j, selections.d)];
        any = true;
      }
    if (!any) return std::nullopt;
    std::vector<std::vector<int>> table(p, std::vector<int>(2));
    for (std::size_t i = 0; i < p; ++i) table[i] = {static_cast<int>(S) - yes[i], yes[i]};
    return fleiss_kappa(table);
  };

  std::vector<KappaRow> rows;
  for (std::size_t t = 0; t < T; ++t) {
    rows.push_back({"rope", config.targets[t], agreement(rope_sel, t), config.subsamples});
    rows.push_back({"stabsel", config.targets[t], agreement(stab_sel, t), config.subsamples});
  }
  return rows;
}

}  // namespace rope
