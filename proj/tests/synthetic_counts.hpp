#pragma once

// Cheap parametric stand-in for resampled lasso counts: each true edge is
// selected with a probability that falls slowly with the penalty index, each
// null edge with a small edge-specific probability that falls quickly.

#include <algorithm>
#include <cmath>
#include <random>

#include "rope/netgen.hpp"
#include "rope/rng.hpp"
#include "rope/select.hpp"

namespace rope::testing {

struct SyntheticCounts {
  CountMatrix counts;
  EdgeSet truth;
};

inline SyntheticCounts synthetic_counts(int d, std::size_t n_true, int B, const PenaltyGrid& grid,
                                        std::uint64_t seed) {
  Rng rng = make_stream(seed, 0x73796e74ULL);
  SyntheticCounts out;
  out.truth = gen_topology(Topology::scale_free, d, n_true, rng());
  const std::size_t p = pair_count(d);
  std::normal_distribution<double> strength(2.5, 1.2);
  std::normal_distribution<double> null_level(-4.0, 1.3);
  const auto K = grid.size();

  auto& w = out.counts;
  w.d = d;
  w.n = 200;
  w.grid = grid;
  w.plan.B = B;
  w.plan.seed = seed;
  for (std::size_t idx = 0; idx < p; ++idx) {
    const Edge e = pair_from_index(idx, d);
    const bool alt = out.truth.contains(e.i, e.j);
    const double level = alt ? strength(rng) : null_level(rng);
    std::vector<int> row(K);
    bool any = false;
    for (std::size_t k = 0; k < K; ++k) {
      const double slope = alt ? 0.6 : 0.9;
      const double prob = 1.0 / (1.0 + std::exp(-(level - slope * static_cast<double>(k))));
      row[k] = std::binomial_distribution<int>(B, prob)(rng);
      any = any || row[k] > 0;
    }
    if (any) w.rows.push_back({e, std::move(row)});
  }
  return out;
}

}  // namespace rope::testing
