#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "naive.hpp"
#include "selectest/errors.hpp"
#include "selectest/grid.hpp"
#include "selectest/meantest.hpp"
#include "selectest/report.hpp"
#include "selectest/test1.hpp"

using namespace selectest;
namespace st = selectest::testing;

namespace {

std::vector<double> uniform_phat(RngStream& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& v : p) v = std::round(rng.uniform() * 20.0) / 20.0;
  return p;
}

}  // namespace

TEST_CASE("atom positions") {
  const std::vector<double> c{0.0, 1.0, 2.0};
  CHECK(atom_of(c, -0.5) == -1);
  CHECK(atom_of(c, 0.0) == 0);
  CHECK(atom_of(c, 0.5) == 1);
  CHECK(atom_of(c, 1.0) == 2);
  CHECK(atom_of(c, 2.0) == 4);
  CHECK(atom_of(c, 2.5) == -1);
}

TEST_CASE("default cutpoints and grid sizes") {
  std::vector<double> v(101);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto c = default_cutpoints(v);
  REQUIRE(c.size() == 11);
  CHECK(c.front() < 0.0);
  CHECK(c.back() > 100.0);
  CHECK(c[1] == doctest::Approx(10.0));
  CHECK(c[5] == doctest::Approx(50.0));
  CHECK(std::is_sorted(c.begin(), c.end()));

  const auto ties = default_cutpoints({1, 1, 1, 1, 2});
  CHECK(std::adjacent_find(ties.begin(), ties.end()) == ties.end());
  const auto single = default_cutpoints({3, 3, 3});
  REQUIRE(single.size() == 2);
  CHECK((single[0] < 3.0 && single[1] > 3.0));

  GridSpec g;
  g.tau_grid = {0.5};
  g.x_cutpoints = {std::vector<double>(10), std::vector<double>(10)};
  g.p_cutpoints = std::vector<double>(10);
  CHECK(g.n_boxes() == 45 * 45);
  CHECK(g.n_intervals() == 45);
  CHECK(g.n_cells() == 45 * 45 * 45);
  g.marginal = true;
  CHECK(g.n_boxes() == 90);
  CHECK_THROWS_AS(g.validate(), ConfigError);

  RngStream rng(31, 0);
  Dataset d = st::random_dataset(rng, 300, 2);
  const auto phat = uniform_phat(rng, d.n());
  const std::vector<double> taus{0.5};
  const auto full = build_default_grid(d, phat, taus);
  CHECK_FALSE(full.marginal);
  CHECK(full.x_cutpoints[0].size() == 11);
  const auto small = build_default_grid(d, phat, taus, 1000);
  CHECK(small.marginal);
}

TEST_CASE("fixed point sums are exact") {
  const auto fp = FixedPoint::for_bound(0.9);
  int128_t s = 0;
  for (int k = 0; k < 1000; ++k) s += fp.quantize(0.1);
  int128_t t = 0;
  for (int k = 0; k < 1000; ++k) t += fp.quantize(k % 2 ? 0.1 : 0.1);
  CHECK(s == t);
  CHECK(fp.to_double(fp.quantize(0.75)) == 0.75);
  CHECK(std::abs(fp.to_double(s) - 100.0) < 1e-10);
  CHECK_THROWS_AS(FixedPoint::for_bound(std::numeric_limits<double>::infinity()), DataError);
}

TEST_CASE("sweep equals the triple loop") {
  RngStream rng(32, 0);
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t dx = 1 + inst % 2;
    const std::size_t n = 20 + rng.below(180);
    Dataset d = st::random_dataset(rng, n, dx);
    auto phat = uniform_phat(rng, n);
    if (inst % 5 == 0) phat[2] = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> taus{0.25, 0.5, 0.75};
    GridSpec grid = st::random_grid(rng, d, phat, taus, 3 + rng.below(5));
    grid.marginal = dx == 2 && inst % 4 == 1;
    const auto fits = st::random_fits(rng, d, taus);
    const auto fast = statistic_z1(d, fits, phat, grid);
    const auto slow = st::naive_z1(d, fits, phat, grid);
    CAPTURE(inst);
    REQUIRE(fast.per_tau.size() == slow.per_tau.size());
    for (std::size_t t = 0; t < taus.size(); ++t) CHECK(fast.per_tau[t].value == slow.per_tau[t]);
    CHECK(fast.statistic == slow.statistic);

    std::vector<double> mhat(n, std::numeric_limits<double>::quiet_NaN()), fhat = mhat;
    for (std::size_t i = 0; i < n; ++i) {
      if (!d.s[i]) continue;
      mhat[i] = d.y[i] + 0.3 * rng.normal();
      fhat[i] = 0.5 + rng.uniform();
    }
    CHECK(statistic_z1m(d, mhat, fhat, phat, grid).statistic ==
          st::naive_z1m(d, mhat, fhat, phat, grid));
  }
}

TEST_CASE("two-row hand value") {
  Dataset d;
  d.x = Matrix(2, 1);
  d.x(0, 0) = 0.2;
  d.x(1, 0) = 0.7;
  d.y = {1.0, 2.0};
  d.s = {1, 1};
  d.x_names = {"x"};
  const std::vector<double> phat{0.3, 0.6};
  GridSpec g;
  g.tau_grid = {0.5};
  g.x_cutpoints = {{0.0, 1.0}};
  g.p_cutpoints = {0.0, 1.0};
  QuantileFit f;
  f.tau = 0.5;
  f.below = {1.0, 1.0};
  const std::vector<QuantileFit> fits{f};
  const auto z = statistic_z1(d, fits, phat, g);
  CHECK(z.statistic == doctest::Approx(std::sqrt(2.0) / 2.0));
  REQUIRE(z.argmax.has_value());
  CHECK(z.argmax->p_lower == 0.0);

  // Opposite signs cancel in the full cell but not in a sub-interval.
  std::vector<QuantileFit> mixed{f};
  mixed[0].below = {1.0, 0.0};
  g.p_cutpoints = {0.0, 0.5, 1.0};
  CHECK(statistic_z1(d, mixed, phat, g).statistic == doctest::Approx(0.5 / std::sqrt(2.0)));
  g.p_cutpoints = {0.0, 1.0};
  CHECK(statistic_z1(d, mixed, phat, g).statistic == 0.0);

  // An interval holding no propensity carries nothing; a finer grid cannot lower the sup.
  g.p_cutpoints = {0.7, 0.9};
  CHECK(statistic_z1(d, fits, phat, g).statistic == 0.0);
  g.p_cutpoints = {0.0, 0.4, 1.0};
  const double coarse = statistic_z1(d, mixed, phat, g).statistic;
  g.p_cutpoints = {0.0, 0.4, 0.5, 1.0};
  CHECK(statistic_z1(d, mixed, phat, g).statistic >= coarse);
}

TEST_CASE("wild indicators are coherent in tau") {
  RngStream rng(33, 0);
  const auto U = draw_uniforms(RngStream(5, 1), 500);
  const std::vector<double> taus{0.1, 0.3, 0.5, 0.9};
  const auto B = wild_indicators(U, taus);
  for (std::size_t i = 0; i < U.size(); ++i) {
    for (std::size_t t = 1; t < taus.size(); ++t) CHECK(B[t][i] >= B[t - 1][i]);
  }
  double mean = 0.0;
  for (auto b : B[1]) mean += b;
  CHECK(std::abs(mean / 500.0 - 0.3) < 0.07);
}

TEST_CASE("bootstrap draws") {
  RngStream rng(34, 0);
  Dataset d = st::random_dataset(rng, 150, 1);
  const auto phat = uniform_phat(rng, d.n());
  const std::vector<double> taus{0.3, 0.7};
  const GridSpec grid = st::random_grid(rng, d, phat, taus, 5);
  std::vector<CondCdfTable> cdf;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    CondCdfTable tab;
    tab.n = d.n();
    tab.cutpoints = grid.p_cutpoints;
    tab.values.assign(d.n() * grid.p_cutpoints.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < d.n(); ++i) {
      for (std::size_t l = 0; l < tab.cutpoints.size(); ++l) {
        tab.values[i * tab.cutpoints.size() + l] = phat[i] < tab.cutpoints[l] ? 1.0 : 0.0;
      }
    }
    cdf.push_back(tab);
  }
  // A CDF equal to the indicator centres every term at zero.
  const auto U = draw_uniforms(RngStream(1, 0), d.n());
  CHECK(bootstrap_z1_draw(d, phat, grid, cdf, U) == 0.0);

  for (auto& tab : cdf) std::fill(tab.values.begin(), tab.values.end(),
                                  std::numeric_limits<double>::quiet_NaN());
  const auto a = bootstrap_z1(d, phat, grid, cdf, 20, RngStream(9, 0));
  const auto b = bootstrap_z1(d, phat, grid, cdf, 20, RngStream(9, 0), 3);
  CHECK(a == b);
  CHECK(a[4] == bootstrap_z1_draw(d, phat, grid, cdf, draw_uniforms(RngStream(9, 0).child(4), d.n())));
  CHECK(std::all_of(a.begin(), a.end(), [](double v) { return v > 0.0; }));
}

TEST_CASE("p-values and critical values") {
  const std::vector<double> draws{5, 1, 4, 2, 3, 6, 8, 7, 10, 9};
  CHECK(bootstrap_p_value(draws, 8.5) == doctest::Approx(3.0 / 11.0));
  CHECK(bootstrap_p_value(draws, 8.0) == doctest::Approx(4.0 / 11.0));
  CHECK(bootstrap_p_value(draws, 11.0) == doctest::Approx(1.0 / 11.0));
  CHECK(bootstrap_critical_value(draws, 0.10) == 9.0);
  CHECK(bootstrap_critical_value(draws, 0.05) == 10.0);
  CHECK(bootstrap_critical_value(draws, 0.5) == 5.0);

  TestReport r;
  r.statistic = 9.5;
  r.boot_draws = draws;
  const std::vector<double> alphas{0.05, 0.10};
  finalize_report(r, alphas);
  CHECK(r.critical_values.at(0.10) == 9.0);
  CHECK(r.p_value == doctest::Approx(2.0 / 11.0));
  CHECK(r.rejects(0.2));
  CHECK_FALSE(r.rejects(0.05));
}
