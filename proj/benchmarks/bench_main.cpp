#include <benchmark/benchmark.h>

#include <random>

#include "rope/countmodel.hpp"
#include "rope/lasso.hpp"
#include "rope/netgen.hpp"
#include "rope/rng.hpp"
#include "rope/select.hpp"

using namespace rope;

namespace {

DataMatrix scale_free_data(int d, int n) {
  const auto truth = gen_topology(Topology::scale_free, d, static_cast<std::size_t>(d - 1), 1);
  return sample_gaussian(build_covariance(truth, SignalLevel::strong(), 2), n, 3);
}

void BM_LassoPath(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Eigen::MatrixXd x = scale_free_data(d, 200).values;
  standardize(x);
  const GramLasso lasso(x);
  const std::vector<double> penalty(static_cast<std::size_t>(d), 1.0);
  const auto grid = PenaltyGrid::log_spaced(0.02, 0.3, 10);
  for (auto _ : state) {
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
      for (std::size_t k = grid.size(); k-- > 0;) lasso.fit(j, grid[k], penalty, beta);
      benchmark::DoNotOptimize(beta.data());
    }
  }
}
BENCHMARK(BM_LassoPath)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitLambda(benchmark::State& state) {
  const int B = 100;
  MixtureParams m{0.02, 0.05, 0.1, 1.2, 0.9, 0.6, 0.3, 2};
  const auto f = mixture_pmf_vector(m, B);
  Rng rng(7);
  std::discrete_distribution<int> dist(f.begin(), f.end());
  std::vector<std::int64_t> bins(B + 1);
  for (int i = 0; i < 100000; ++i) ++bins[static_cast<std::size_t>(dist(rng))];
  const CountHistogram h(B, bins);
  for (auto _ : state) benchmark::DoNotOptimize(fit_lambda(h));
}
BENCHMARK(BM_FitLambda)->Unit(benchmark::kMillisecond);

void BM_ComputeCounts(benchmark::State& state) {
  const auto data = scale_free_data(30, 100);
  const auto grid = PenaltyGrid::log_spaced(0.02, 0.3, 5);
  ResamplePlan plan;
  plan.B = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compute_counts(data, grid, plan));
}
BENCHMARK(BM_ComputeCounts)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
