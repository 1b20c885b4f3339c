#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rope/error.hpp"
#include "rope/netgen.hpp"
#include "rope/rope.hpp"
#include "synthetic_counts.hpp"

using namespace rope;
using rope::testing::synthetic_counts;

namespace {

const PenaltyGrid kGrid = PenaltyGrid::log_spaced(0.02, 0.3, 6);

RopeConfig quick_config(std::uint64_t seed = 1) {
  RopeConfig config;
  config.n_boot = 50;
  config.boot_restarts = 0;
  config.seed = seed;
  return config;
}

// A hand-made fit with a known null component.
LambdaFit fixed_fit(int B, double pi) {
  LambdaFit fit;
  fit.B = B;
  fit.fitted = true;
  fit.params = {pi, 0.1, 0.1, 1.0, 0.9, 0.5, 0.2, 2};
  return fit;
}

CountMatrix relabel(const CountMatrix& w, const std::vector<int>& perm) {
  CountMatrix out = w;
  for (auto& row : out.rows) {
    const int a = perm[static_cast<std::size_t>(row.edge.i)], b = perm[static_cast<std::size_t>(row.edge.j)];
    row.edge = {std::min(a, b), std::max(a, b)};
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const CountRow& x, const CountRow& y) { return x.edge < y.edge; });
  return out;
}

}  // namespace

TEST_SUITE("rope") {

TEST_CASE("estimated FDR at threshold zero is one minus pi") {
  const CountHistogram h(20, {500, 40, 20, 10, 5, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 3, 4, 6, 20});
  for (double pi : {0.0, 0.03, 0.4}) CHECK(std::abs(fdr_at_threshold(fixed_fit(20, pi), h, 0) - (1.0 - pi)) < 1e-12);
}

TEST_CASE("estimated FDR at the top count follows the direct formula") {
  const CountHistogram h(20, {500, 40, 20, 10, 5, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 3, 4, 6, 20});
  const auto fit = fixed_fit(20, 0.05);
  const double f1_top = null_component(fit.params, 20)[20];
  const double expected = static_cast<double>(h.p()) * 0.95 * f1_top / 20.0;
  CHECK(fdr_at_threshold(fit, h, 20) == doctest::Approx(expected).epsilon(1e-12));
  const CountHistogram gap(20, {600, 10, 5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(fdr_at_threshold(fit, gap, 3), InvalidArgument);
  CHECK_FALSE(fdr_upper_bound(fit, gap, 3).has_value());
}

TEST_CASE("confidence bound arithmetic") {
  CHECK(fdr_confidence_bound(0.1, 100) == doctest::Approx(0.1 + 1.959964 * 0.03).epsilon(1e-12));
  CHECK(fdr_confidence_bound(0.1, 100) == doctest::Approx(0.1588).epsilon(1e-3));
  CHECK(fdr_confidence_bound(0.0, 7) == 0.0);
  CHECK(fdr_confidence_bound(0.9, 1) == 1.0);
  CHECK_THROWS_AS(fdr_confidence_bound(0.1, 0), InvalidArgument);
}

TEST_CASE("q-values are non-increasing in the count and vanish without null mass") {
  const CountHistogram h(20, {500, 40, 20, 10, 5, 3, 2, 1, 1, 0, 1, 1, 0, 1, 1, 2, 2, 3, 4, 6, 20});
  const auto table = qvalue_table(fixed_fit(20, 0.05), h);
  for (std::size_t w = 1; w < table.size(); ++w) CHECK(table[w] <= table[w - 1]);
  for (double q : table) {
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
  }
  CHECK(qvalue(fixed_fit(20, 0.05), h, 17) == table[17]);
  const auto all_alt = qvalue_table(fixed_fit(20, 1.0), h);
  for (double q : all_alt) CHECK(q == 0.0);
}

TEST_CASE("argmax CI preconditions") {
  auto sc = synthetic_counts(60, 59, 40, kGrid, 3);
  auto fits = fit_all(sc.counts, FitOptions{});
  auto config = quick_config();
  config.n_boot = 49;
  CHECK_THROWS_AS(argmax_ci(sc.counts, fits, config, std::nullopt), InvalidArgument);
  config.n_boot = 50;
  // Only one usable column.
  for (std::size_t k = 1; k < fits.size(); ++k) fits[k].fitted = false;
  CHECK_THROWS_AS(argmax_ci(sc.counts, fits, config, std::nullopt), NotFittable);
}

TEST_CASE("identical columns give a degenerate CI at the smallest lambda") {
  auto sc = synthetic_counts(80, 79, 40, kGrid, 5);
  CountMatrix w = sc.counts;
  w.grid = PenaltyGrid({0.1, 0.2, 0.3});
  for (auto& row : w.rows) row.counts = {row.counts[0], row.counts[0], row.counts[0]};
  w.rows.erase(std::remove_if(w.rows.begin(), w.rows.end(), [](const CountRow& r) { return r.counts[0] == 0; }),
               w.rows.end());
  RopeConfig config = quick_config();
  config.boot_restarts = 1;
  const auto ci = argmax_ci(w, config);
  CHECK(ci.index_lo == 0);
  CHECK(ci.index_hi == 0);
  CHECK(ci.lambda_lo == 0.1);
  CHECK(ci.lambda_hi == 0.1);
}

TEST_CASE("separation depends only on the histograms") {
  const auto sc = synthetic_counts(50, 49, 40, kGrid, 8);
  std::vector<int> perm(50);
  for (int i = 0; i < 50; ++i) perm[static_cast<std::size_t>(i)] = (i * 17 + 5) % 50;
  const auto shuffled = relabel(sc.counts, perm);
  const auto a = fit_all(sc.counts, FitOptions{});
  const auto b = fit_all(shuffled, FitOptions{});
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].fitted == b[k].fitted);
    CHECK(a[k].separation == b[k].separation);
    if (a[k].fitted) CHECK(separation(a[k], 1225) == doctest::Approx(a[k].separation).epsilon(1e-12));
  }
  CHECK(separation(LambdaFit{}, 1225) == 0.0);
}

TEST_CASE("argmax of the separation curve breaks ties towards small lambda") {
  std::vector<LambdaFit> fits(4);
  for (auto& f : fits) f.fitted = true;
  fits[0].separation = 3.0;
  fits[1].separation = 5.0;
  fits[2].separation = 5.0;
  fits[3].fitted = false;
  fits[3].separation = 9.0;
  CHECK(argmax_separation(fits) == 1u);
  for (auto& f : fits) f.fitted = false;
  CHECK_FALSE(argmax_separation(fits).has_value());
}

TEST_CASE("joint procedure invariants on synthetic counts") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto sc = synthetic_counts(80, 79, 40, kGrid, seed);
    const auto result = run_rope(sc.counts, quick_config(seed));
    CHECK(result.final_fit.fitted);
    CHECK(result.final_fit.params.pi <= result.pi_star + 1e-12);
    CHECK(result.index_a == result.first_ci.index_hi);
    if (result.fits[result.index_a].fitted) CHECK(result.pi_star == result.fits[result.index_a].params.pi);
    for (const auto& f : result.constrained_fits)
      if (f.fitted) CHECK(f.params.pi <= result.pi_star + 1e-12);
    CHECK(result.lambda_b == kGrid[result.index_b]);
    for (std::size_t r = 1; r < result.qvalues.size(); ++r)
      CHECK(result.qvalues[r - 1].qvalue <= result.qvalues[r].qvalue);
    // Larger counts never get larger q-values.
    for (const auto& a : result.qvalues)
      for (const auto& b : result.qvalues)
        if (a.count > b.count) CHECK(a.qvalue <= b.qvalue);

    std::size_t previous = 0;
    for (double target : {0.01, 0.05, 0.1, 0.2, 0.5}) {
      const auto sel = select_edges(result, target);
      CHECK(sel.size() >= previous);
      for (const auto& e : select_edges(result, target / 2)) CHECK(sel.contains(e.i, e.j));
      previous = sel.size();
    }
    CHECK(select_edges(result, 0.1).size() > 0);
  }
}

TEST_CASE("selection equals thresholding counts at the smallest admissible threshold") {
  const auto sc = synthetic_counts(80, 79, 40, kGrid, 4);
  const auto result = run_rope(sc.counts, quick_config(4));
  const auto& h = result.final_histogram;
  for (double target : {0.05, 0.1, 0.2}) {
    // Smallest t whose running-minimum upper bound is below the target.
    std::optional<int> t_star;
    double running = 1.0;
    for (int t = 0; t <= h.B && !t_star; ++t) {
      if (const auto ub = fdr_upper_bound(result.final_fit, h, t)) running = std::min(running, *ub);
      if (running < target) t_star = t;
    }
    std::vector<Edge> expected;
    if (t_star && *t_star > 0)
      for (const auto& row : sc.counts.rows)
        if (row.counts[result.index_b] >= *t_star) expected.push_back(row.edge);
    CHECK(select_edges(result, target) == EdgeSet(80, expected));
  }
}

TEST_CASE("joint procedure is deterministic and thread independent") {
  const auto sc = synthetic_counts(70, 69, 40, kGrid, 6);
  auto config = quick_config(9);
  const auto a = run_rope(sc.counts, config);
  config.threads = 3;
  const auto b = run_rope(sc.counts, config);
  CHECK(a.first_ci.argmax_lambdas == b.first_ci.argmax_lambdas);
  CHECK(a.second_ci.argmax_lambdas == b.second_ci.argmax_lambdas);
  CHECK(a.pi_star == b.pi_star);
  CHECK(a.lambda_b == b.lambda_b);
  REQUIRE(a.qvalues.size() == b.qvalues.size());
  for (std::size_t r = 0; r < a.qvalues.size(); ++r) {
    CHECK(a.qvalues[r].edge == b.qvalues[r].edge);
    CHECK(a.qvalues[r].qvalue == b.qvalues[r].qvalue);
  }
}

TEST_CASE("monotone decreasing histograms are not fittable") {
  CountMatrix w;
  w.d = 40;
  w.grid = PenaltyGrid({0.1, 0.2});
  w.plan.B = 30;
  const double p = static_cast<double>(pair_count(40));
  for (std::size_t idx = 0; idx < pair_count(40); ++idx) {
    // Mass piles up at zero and thins out towards B.
    const auto c = static_cast<int>(30.0 * std::pow(1.0 - std::sqrt(static_cast<double>(idx) / p), 3));
    if (c > 0) w.rows.push_back({pair_from_index(idx, 40), {c, c / 2}});
  }
  for (std::size_t k = 0; k < 2; ++k) REQUIRE_FALSE(is_u_shaped(w.histogram(k)));
  CHECK_THROWS_AS(run_rope(w, quick_config()), NotFittable);
}

TEST_CASE("bootstrap CI contains the first-pass argmax") {
  const PenaltyGrid grid = PenaltyGrid::log_spaced(0.02, 0.3, 5);
  int contained = 0, runs = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto sc = synthetic_counts(60, 59, 30, grid, 1000 + seed);
    const auto fits = fit_all(sc.counts, FitOptions{});
    const auto k = argmax_separation(fits);
    REQUIRE(k.has_value());
    ++runs;
    try {
      const auto ci = argmax_ci(sc.counts, fits, quick_config(seed), std::nullopt);
      contained += ci.index_lo <= *k && *k <= ci.index_hi;
    } catch (const NotFittable&) {
      // Single U-shaped column: the degenerate CI at that column contains it.
      ++contained;
    }
  }
  CHECK(contained >= 90 * runs / 100);
}

TEST_CASE("first-pass pi at the smallest fitted lambda is not below pi at the argmax") {
  const PenaltyGrid grid = PenaltyGrid::log_spaced(0.02, 0.3, 8);
  int agree = 0, usable = 0;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto truth = gen_topology(Topology::scale_free, 60, 59, derive_seed(seed, 1));
    const auto cov = build_covariance(truth, SignalLevel::strong(), derive_seed(seed, 2));
    const auto data = sample_gaussian(cov, 150, derive_seed(seed, 3));
    ResamplePlan plan;
    plan.B = 50;
    plan.seed = derive_seed(seed, 4);
    const auto fits = fit_all(compute_counts(data, grid, plan), FitOptions{});
    const auto k = argmax_separation(fits);
    if (!k) continue;
    const auto first = std::find_if(fits.begin(), fits.end(), [](const LambdaFit& f) { return f.fitted; });
    ++usable;
    agree += first->params.pi >= fits[*k].params.pi;
  }
  REQUIRE(usable >= 10);
  CHECK(agree >= 0.8 * usable);
}

}  // TEST_SUITE
