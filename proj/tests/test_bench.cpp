#include <doctest.h>

#include <cmath>

#include "rope/bench.hpp"
#include "rope/error.hpp"
#include "synthetic_counts.hpp"

using namespace rope;
using rope::testing::synthetic_counts;

namespace {

CountMatrix small_counts() {
  CountMatrix w;
  w.d = 5;  // p = 10
  w.grid = PenaltyGrid({0.1, 0.2});
  w.plan.B = 10;
  w.rows = {{{0, 1}, {10, 9}}, {{0, 2}, {9, 8}}, {{1, 2}, {7, 2}}, {{2, 3}, {3, 1}}, {{3, 4}, {1, 0}}};
  return w;
}

EdgeSet permuted(const EdgeSet& g, const std::vector<int>& perm) {
  std::vector<Edge> edges;
  for (const auto& e : g) edges.push_back({perm[static_cast<std::size_t>(e.i)], perm[static_cast<std::size_t>(e.j)]});
  return EdgeSet(g.n_nodes(), edges);
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("stability bound arithmetic") {
  CHECK(std::abs(stabsel_bound(10.0, 90, 100, 1000) - 0.125) < 1e-12);
  CHECK(stabsel_bound(0.0, 60, 100, 1000) == 0.0);
  CHECK_THROWS_AS(stabsel_bound(10.0, 50, 100, 1000), InvalidArgument);
  CHECK_THROWS_AS(stabsel_bound(10.0, 60, 100, 0), InvalidArgument);
}

TEST_CASE("bound from counts uses the mean selections per fit") {
  const auto w = small_counts();
  // Window {0}: 30 selections over B = 10 resamples -> q = 3.
  CHECK(stabsel_bound(w, {0, 0}, 8) == doctest::Approx(9.0 / (0.6 * 10.0)).epsilon(1e-12));
  // Window {0, 1}: (30 + 20) / (2 * 10) = 2.5.
  CHECK(stabsel_bound(w, {0, 1}, 8) == doctest::Approx(6.25 / 6.0).epsilon(1e-12));
}

TEST_CASE("windows enumerate all contiguous sub-grids") {
  CHECK(all_windows(1).size() == 1);
  CHECK(all_windows(4).size() == 10);
  for (const auto& win : all_windows(5)) CHECK(win.first <= win.last);
}

TEST_CASE("stability selection worked examples") {
  const auto w = small_counts();
  StabSelConfig config;
  config.target_fdr = 1.0;
  // Window {0}: q = 3; t = 6 keeps 3 edges with bound 9 / 2 / 3 = 1.5, over target.
  // Window {1}: q = 2; t = 7 keeps {01, 02} with bound 4 / 4 / 2 = 0.5.
  auto out = stabsel_select(w, config);
  REQUIRE(out.threshold.has_value());
  CHECK(out.selected.size() == 2);
  CHECK(out.selected.contains(0, 1));
  CHECK(out.selected.contains(0, 2));

  config.target_fdr = 1e-3;
  out = stabsel_select(w, config);
  CHECK(out.selected.empty());
  CHECK_FALSE(out.threshold.has_value());

  CountMatrix zeros = w;
  zeros.rows.clear();
  config.target_fdr = 0.5;
  CHECK(stabsel_select(zeros, config).selected.empty());

  config.thresholds = {5};
  CHECK_THROWS_AS(stabsel_select(w, config), InvalidArgument);
}

TEST_CASE("stability selection prefers the larger threshold among ties") {
  CountMatrix w;
  w.d = 40;
  w.grid = PenaltyGrid({0.1});
  w.plan.B = 10;
  w.rows = {{{0, 1}, {10}}, {{0, 2}, {10}}};
  StabSelConfig config;
  config.target_fdr = 0.5;
  const auto out = stabsel_select(w, config);
  CHECK(out.selected.size() == 2);
  CHECK(out.threshold == 9);
}

TEST_CASE("stability selection grows with the target") {
  const auto sc = synthetic_counts(60, 59, 40, PenaltyGrid::log_spaced(0.02, 0.3, 5), 2);
  std::size_t previous = 0;
  for (double target : {0.01, 0.02, 0.05, 0.1, 0.2, 0.4}) {
    StabSelConfig config;
    config.target_fdr = target;
    const auto out = stabsel_select(sc.counts, config);
    CHECK(out.selected.size() >= previous);
    if (out.threshold) CHECK(out.fdr_bound <= target);
    previous = out.selected.size();
  }
}

TEST_CASE("confusion worked examples") {
  const EdgeSet truth(30, [] {
    std::vector<Edge> e;
    for (int i = 0; i < 20; ++i) e.push_back({i, i + 1});
    return e;
  }());
  std::vector<Edge> picked;
  for (int i = 0; i < 8; ++i) picked.push_back({i, i + 1});
  picked.push_back({0, 25});
  picked.push_back({1, 25});
  const auto c = confusion(EdgeSet(30, picked), truth);
  CHECK(c.fdr == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(c.tpr == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(confusion(truth, truth).fdr == 0.0);
  CHECK(confusion(truth, truth).tpr == 1.0);
  const auto disjoint = confusion(EdgeSet(30, {{25, 26}, {27, 28}}), truth);
  CHECK(disjoint.fdr == 1.0);
  CHECK(disjoint.tpr == 0.0);
  CHECK(confusion(EdgeSet(30), truth).fdr == 0.0);
  CHECK_THROWS_AS(confusion(truth, EdgeSet(30)), InvalidArgument);
  CHECK_THROWS_AS(confusion(EdgeSet(31), truth), InvalidArgument);
}

TEST_CASE("confusion is invariant to relabelling nodes") {
  const EdgeSet truth = gen_topology(Topology::scale_free, 30, 40, 5);
  const EdgeSet sel = gen_topology(Topology::scale_free, 30, 35, 6);
  std::vector<int> perm(30);
  for (int i = 0; i < 30; ++i) perm[static_cast<std::size_t>(i)] = (i * 7 + 3) % 30;
  const auto a = confusion(sel, truth);
  const auto b = confusion(permuted(sel, perm), permuted(truth, perm));
  CHECK(a.fdr == b.fdr);
  CHECK(a.tpr == b.tpr);
  std::size_t hits = 0;
  for (const auto& e : sel) hits += truth.contains(e.i, e.j);
  CHECK(a.fdr + static_cast<double>(hits) / static_cast<double>(sel.size()) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("modified F1 worked example and properties") {
  CHECK(modified_f1(0.2, 0.5, 0.1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Below the target it is the ordinary F1 with precision 1 - fdr.
  const double precision = 0.95, recall = 0.6;
  CHECK(modified_f1(0.05, recall, 0.1) ==
        doctest::Approx(2 * precision * recall / (precision + recall)).epsilon(1e-15));
  CHECK(modified_f1(0.3, 0.0, 0.1) == 0.0);
  CHECK(modified_f1(1.0, 0.0, 0.5) == 0.0);
  for (double tpr : {0.1, 0.5, 1.0}) {
    double previous = modified_f1(0.1, tpr, 0.1);
    for (double fdr = 0.11; fdr <= 1.0; fdr += 0.01) {
      const double score = modified_f1(fdr, tpr, 0.1);
      CHECK(score <= previous + 1e-15);
      previous = score;
    }
  }
  CHECK_THROWS_AS(modified_f1(0.1, 0.5, 0.0), InvalidArgument);
}

TEST_CASE("Fleiss kappa reproduces the published worked example") {
  // Ten items rated by fourteen raters into five categories.
  const std::vector<std::vector<int>> table{
      {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
      {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
  CHECK(std::abs(fleiss_kappa(table) - 0.210) < 1e-3);
}

TEST_CASE("Fleiss kappa limits and symmetry") {
  const std::vector<std::vector<bool>> same(5, {true, false, true, true, false});
  CHECK(fleiss_kappa_binary(same) == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<std::vector<bool>> all_no(4, std::vector<bool>(6, false));
  CHECK(fleiss_kappa_binary(all_no) == 1.0);
  CHECK_THROWS_AS(fleiss_kappa({{3, 0}, {2, 1}, {3, 1}}), InvalidArgument);
  CHECK_THROWS_AS(fleiss_kappa_binary({{true, false}}), InvalidArgument);

  Rng rng(4);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<bool>> random(20, std::vector<bool>(2000));
  for (auto& rater : random)
    for (std::size_t i = 0; i < rater.size(); ++i) rater[i] = coin(rng);
  const double k = fleiss_kappa_binary(random);
  CHECK(std::abs(k) < 0.05);

  std::vector<std::vector<bool>> mixed(6, std::vector<bool>(50));
  std::bernoulli_distribution skewed(0.3);
  for (auto& rater : mixed)
    for (std::size_t i = 0; i < rater.size(); ++i) rater[i] = i % 3 == 0 ? true : skewed(rng);
  auto flipped = mixed;
  for (auto& rater : flipped) rater.flip();
  CHECK(fleiss_kappa_binary(mixed) == doctest::Approx(fleiss_kappa_binary(flipped)).epsilon(1e-12));
}

TEST_CASE("comparison harness") {
  Scenario s;
  s.d = 20;
  s.target_edges = 19;
  s.n = 60;
  s.B = 20;
  s.steps = 4;
  s.replicates = 0;
  CHECK(run_comparison(s).empty());

  s.replicates = 2;
  s.rope.n_boot = 50;
  s.rope.boot_restarts = 0;
  const auto a = run_comparison(s);
  // Two replicates, three targets, three methods.
  REQUIRE(a.size() == 18);
  s.threads = 2;
  const auto b = run_comparison(s);
  REQUIRE(b.size() == a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].method == b[r].method);
    CHECK(a[r].achieved_fdr == b[r].achieved_fdr);
    CHECK(a[r].tpr == b[r].tpr);
    CHECK(a[r].n_selected == b[r].n_selected);
    CHECK(a[r].seed == replicate_seed(1, a[r].replicate));
    CHECK(a[r].f1m == modified_f1(a[r].achieved_fdr, a[r].tpr, a[r].target_fdr));
  }
  CHECK(a[0].seed != a[9].seed);
}

TEST_CASE("agreement analysis") {
  const auto data = sample_gaussian(build_covariance(gen_topology(Topology::chain, 12, std::nullopt, 1),
                                                     SignalLevel::strong(), 2),
                                    80, 3);
  ResamplePlan plan;
  plan.B = 30;
  plan.kind = ResampleKind::subsample;
  const auto sel = compute_selections(data, PenaltyGrid::log_spaced(0.05, 0.4, 4), plan);

  KappaConfig config;
  config.subsamples = 3;
  config.subsample_size = 30;  // every subsample is the full set
  config.rope.n_boot = 50;
  config.rope.boot_restarts = 0;
  config.targets = {0.1, 0.5};
  const auto rows = kappa_analysis(sel, config);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.n_subsamples == 3);
    if (row.kappa) CHECK(*row.kappa == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Stability selection on a strong chain picks something at a loose target.
  CHECK(rows[3].method == "stabsel");
  CHECK(rows[3].target_fdr == 0.5);
  CHECK(rows[3].kappa.has_value());

  // A grid that admits no selection yields an undefined agreement.
  ResamplePlan none = plan;
  const auto empty = compute_selections(data, PenaltyGrid({5.0, 6.0}), none);
  for (const auto& row : kappa_analysis(empty, config)) CHECK_FALSE(row.kappa.has_value());

  config.subsample_size = 31;
  CHECK_THROWS_AS(kappa_analysis(sel, config), InvalidArgument);
}

}  // TEST_SUITE
