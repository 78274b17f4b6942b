#include <benchmark/benchmark.h>

#include <vector>

#include "selectest/grid.hpp"
#include "selectest/meantest.hpp"
#include "selectest/montecarlo.hpp"

using namespace selectest;

static void BM_BoxSweep(benchmark::State& state) {
  DgpConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  const auto sample = generate_dgp(cfg, RngStream(3, 0));
  const Dataset& d = sample.data;
  const std::vector<double> taus{0.5};
  const GridSpec grid = build_default_grid(d, sample.oracle_p, taus);
  const auto rows = d.selected_indices();
  const BoxSweep sweep(grid, d.x, rows);
  const std::size_t L = grid.p_cutpoints.size();
  RngStream rng(4, 0);
  std::vector<std::int64_t> a(rows.size() * L);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::int64_t q = rng.uniform() < 0.5 ? -1 : 1;
    for (std::size_t l = 0; l < L; ++l) a[r * L + l] = sample.oracle_p[rows[r]] < grid.p_cutpoints[l] ? q : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(sweep.sup(a));
}
BENCHMARK(BM_BoxSweep)->Arg(1000)->Arg(4000);

static void BM_MeanBootstrapDraw(benchmark::State& state) {
  DgpConfig cfg;
  cfg.n = 1000;
  cfg.outcome = OutcomeKind::QuadraticMean;
  const auto sample = generate_dgp(cfg, RngStream(5, 0));
  MeanTestConfig c;
  c.propensity.oracle_p = sample.oracle_p;
  const MeanTestProblem problem(sample.data, c, RngStream(6, 0));
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(problem.bootstrap_draw(RngStream(7, k++)));
}
BENCHMARK(BM_MeanBootstrapDraw)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
