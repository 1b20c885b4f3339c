#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "rope/error.hpp"
#include "rope/netgen.hpp"
#include "rope/rng.hpp"

using namespace rope;

namespace {

void check_edge_invariants(const EdgeSet& g) {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g) {
    CHECK(e.i >= 0);
    CHECK(e.i < e.j);
    CHECK(e.j < g.n_nodes());
    CHECK(seen.insert({e.i, e.j}).second);
  }
  CHECK(g.size() <= pair_count(g.n_nodes()));
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_SUITE("netgen") {

TEST_CASE("pair indices enumerate the strict upper triangle") {
  const int d = 7;
  std::size_t expected = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      CHECK(pair_index(i, j, d) == expected);
      const Edge e = pair_from_index(expected, d);
      CHECK(e.i == i);
      CHECK(e.j == j);
      ++expected;
    }
  CHECK(expected == pair_count(d));
}

TEST_CASE("EdgeSet normalises order, removes duplicates, rejects bad pairs") {
  const EdgeSet g(4, {{2, 1}, {1, 2}, {0, 3}});
  CHECK(g.size() == 2);
  CHECK(g.contains(1, 2));
  CHECK(g.contains(3, 0));
  CHECK_THROWS_AS(EdgeSet(3, {{1, 1}}), InvalidArgument);
  CHECK_THROWS_AS(EdgeSet(3, {{0, 3}}), InvalidArgument);
}

TEST_CASE("chain on three nodes is a path") {
  const EdgeSet g = gen_topology(Topology::chain, 3, std::nullopt, 1);
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
}

TEST_CASE("chain has n - 1 edges for every size") {
  for (int n = 2; n <= 300; ++n) {
    const EdgeSet g = gen_topology(Topology::chain, n, std::nullopt, 5);
    CHECK(g.size() == static_cast<std::size_t>(n - 1));
  }
}

TEST_CASE("scale-free graphs hit the requested edge counts") {
  for (std::size_t target : {495u, 49u, 990u}) {
    const EdgeSet g = gen_topology(Topology::scale_free, 500, target, 11);
    CHECK(g.size() == target);
    check_edge_invariants(g);
  }
  const EdgeSet g = gen_topology(Topology::scale_free, 500, 495, 3);
  const auto deg = g.degrees();
  // Preferential attachment produces hubs far above the mean degree of ~2.
  CHECK(*std::max_element(deg.begin(), deg.end()) >= 10);
}

TEST_CASE("scale-free default target is n - 1 and infeasible targets throw") {
  CHECK(gen_topology(Topology::scale_free, 40, std::nullopt, 2).size() == 39);
  CHECK_THROWS_AS(gen_topology(Topology::scale_free, 5, 11, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_topology(Topology::scale_free, 5, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_topology(Topology::chain, 1, std::nullopt, 1), InvalidArgument);
}

TEST_CASE("hubby on 500 nodes has 20 hubs with degrees in [4, 92]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    std::vector<int> hubs;
    const EdgeSet g = gen_hubby(500, seed, &hubs);
    CHECK(g == gen_topology(Topology::hubby, 500, std::nullopt, seed));
    REQUIRE(hubs.size() == 20);
    const std::set<int> hub_set(hubs.begin(), hubs.end());
    const auto deg = g.degrees();
    int lowest = 1000, highest = 0;
    for (int h : hubs) {
      CHECK(deg[static_cast<std::size_t>(h)] >= 4);
      CHECK(deg[static_cast<std::size_t>(h)] <= 92);
      lowest = std::min(lowest, deg[static_cast<std::size_t>(h)]);
      highest = std::max(highest, deg[static_cast<std::size_t>(h)]);
    }
    CHECK(highest - lowest >= 20);
    for (const auto& e : g) CHECK(hub_set.contains(e.i) != hub_set.contains(e.j));
  }
}

TEST_CASE("hubby scales the hub count with the node count") {
  std::vector<int> hubs;
  gen_hubby(100, 1, &hubs);
  CHECK(hubs.size() == 4);
  gen_hubby(10, 1, &hubs);
  CHECK(hubs.size() == 1);
}

TEST_CASE("random topologies satisfy the EdgeSet invariants") {
  Rng rng(2024);
  std::uniform_int_distribution<int> size(2, 60);
  std::uniform_int_distribution<int> kind(0, 2);
  for (int draw = 0; draw < 1000; ++draw) {
    const int n = size(rng);
    const auto k = static_cast<Topology>(kind(rng));
    std::optional<std::size_t> target;
    if (k == Topology::scale_free) {
      std::uniform_int_distribution<std::size_t> t(static_cast<std::size_t>(n - 1), pair_count(n));
      target = t(rng);
    }
    const EdgeSet g = gen_topology(k, n, target, rng());
    CHECK(g.n_nodes() == n);
    check_edge_invariants(g);
    if (target) CHECK(g.size() == *target);
  }
}

TEST_CASE("topology generation is deterministic in the seed") {
  CHECK(gen_topology(Topology::scale_free, 100, 150, 9) == gen_topology(Topology::scale_free, 100, 150, 9));
  CHECK(gen_topology(Topology::hubby, 100, std::nullopt, 9) == gen_topology(Topology::hubby, 100, std::nullopt, 9));
}

TEST_CASE("names parse and print") {
  for (auto k : {Topology::scale_free, Topology::hubby, Topology::chain})
    CHECK(parse_topology(to_string(k)) == k);
  CHECK_THROWS_AS(parse_topology("lattice"), InvalidArgument);
  CHECK(parse_signal("weak").mean == 0.25);
  CHECK_THROWS_AS(parse_signal("medium"), InvalidArgument);
}

TEST_CASE("empty edge set gives the identity covariance") {
  const auto cov = build_covariance(EdgeSet(6), SignalLevel::strong(), 1);
  CHECK((cov - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single edge gives a positive definite 2x2 block") {
  const EdgeSet g(2, {{0, 1}});
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double s = draw_edge_strengths(g, SignalLevel::strong(), seed).front();
    if (s <= 0.0 || s >= 1.0) continue;
    ++checked;
    const auto cov = build_covariance(g, SignalLevel::strong(), seed);
    // [[1, s], [s, 1]] is already positive definite with eigenvalues 1 - s and 1 + s.
    CHECK(cov(0, 1) == s);
    CHECK(cov(1, 0) == s);
    CHECK(min_eigenvalue(cov) == doctest::Approx(1.0 - s).epsilon(1e-12));
  }
  CHECK(checked >= 15);
}

TEST_CASE("connected-pair strengths follow the signal level") {
  const EdgeSet g = gen_topology(Topology::scale_free, 500, 495, 4);
  for (const auto& [signal, tol_mean, tol_sd] :
       {std::tuple{SignalLevel::strong(), 0.03, 0.02}, std::tuple{SignalLevel::weak(), 0.03, 0.02}}) {
    const auto s = draw_edge_strengths(g, signal, 17);
    REQUIRE(s.size() == 495);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size() - 1));
    CHECK(std::abs(mean - signal.mean) < tol_mean);
    CHECK(std::abs(sd - signal.sd) < tol_sd);
  }
}

TEST_CASE("covariances are symmetric, unit-diagonal and positive definite") {
  for (auto pattern : {StrengthPattern::covariance, StrengthPattern::precision}) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const auto kind = static_cast<Topology>(seed % 3);
      const EdgeSet g = gen_topology(kind, 80, kind == Topology::scale_free ? std::optional<std::size_t>(160)
                                                                            : std::nullopt,
                                     seed);
      CovarianceOptions opt;
      opt.pattern = pattern;
      const auto cov = build_covariance(g, seed % 2 ? SignalLevel::strong() : SignalLevel::weak(), seed, opt);
      CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((cov.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(min_eigenvalue(cov) > 1e-8);
      // Only connected pairs carry covariance in the direct placement.
      if (pattern == StrengthPattern::covariance)
        for (int i = 0; i < 80; ++i)
          for (int j = i + 1; j < 80; ++j)
            if (!g.contains(i, j)) CHECK(cov(i, j) == 0.0);
    }
  }
}

TEST_CASE("Gaussian samples match the identity covariance") {
  const auto data = sample_gaussian(Eigen::MatrixXd::Identity(10, 10), 100000, 8);
  REQUIRE(data.n() == 100000);
  REQUIRE(data.d() == 10);
  const Eigen::RowVectorXd mean = data.values.colwise().mean();
  const Eigen::MatrixXd centred = data.values.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / (data.n() - 1.0);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
  CHECK((cov - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("Gaussian samples are deterministic and sized as requested") {
  const EdgeSet g = gen_topology(Topology::chain, 5, std::nullopt, 1);
  const auto cov = build_covariance(g, SignalLevel::strong(), 3);
  const auto a = sample_gaussian(cov, 50, 77);
  const auto b = sample_gaussian(cov, 50, 77);
  CHECK(a.values == b.values);
  CHECK(a.column_names == std::vector<std::string>{"x0", "x1", "x2", "x3", "x4"});
  CHECK(sample_gaussian(cov, 1, 1).n() == 1);
  CHECK_THROWS_AS(sample_gaussian(cov, 0, 1), InvalidArgument);
}

TEST_CASE("MAD filtering keeps the most variable columns in order") {
  DataMatrix data;
  data.values.resize(5, 3);
  data.values << 1, 10, 0, 2, 20, 0, 3, 30, 1, 4, 40, 0, 5, 50, 0;
  data.column_names = {"a", "b", "c"};
  const auto kept = mad_filter(data, 0.5);
  CHECK(kept.column_names == std::vector<std::string>{"a", "b"});
  const auto top = mad_filter(data, 0.2);
  CHECK(top.column_names == std::vector<std::string>{"b"});
  const auto scaled = mad_scale(data);
  // Column a: median 3, absolute deviations {2,1,0,1,2} -> MAD 1; b has MAD 10.
  CHECK(scaled.values(0, 0) == 1.0);
  CHECK(scaled.values(4, 1) == 5.0);
  CHECK(scaled.values(2, 2) == 1.0);  // zero-MAD column unchanged
}

}  // TEST_SUITE
