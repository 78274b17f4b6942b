#include <benchmark/benchmark.h>

#include <vector>

#include "selectest/estimators.hpp"
#include "selectest/montecarlo.hpp"
#include "selectest/quantreg.hpp"

using namespace selectest;

static void BM_WeightedQuantile(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PolynomialBasis basis(1, 3);
  RngStream rng(1, 0);
  std::vector<double> design, y, w, z(basis.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> u{rng.uniform() - 0.5};
    basis.evaluate(u, z);
    design.insert(design.end(), z.begin(), z.end());
    y.push_back(u[0] + rng.normal());
    w.push_back(rng.uniform());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_weighted_quantile(design, basis.size(), y, w, 0.3));
  }
}
BENCHMARK(BM_WeightedQuantile)->Arg(50)->Arg(200)->Arg(800);

static void BM_QuantileResiduals(benchmark::State& state) {
  DgpConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  const auto sample = generate_dgp(cfg, RngStream(2, 0));
  const std::vector<double> taus{0.3, 0.5, 0.7}, h{0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantile_residuals(sample.data, taus, h, 3));
  }
}
BENCHMARK(BM_QuantileResiduals)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);
