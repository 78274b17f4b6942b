#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "naive.hpp"
#include "selectest/errors.hpp"
#include "selectest/meantest.hpp"
#include "selectest/montecarlo.hpp"

using namespace selectest;
namespace st = selectest::testing;

TEST_CASE("mean statistic hand value") {
  Dataset d;
  d.x = Matrix(2, 1);
  d.x(0, 0) = 0.2;
  d.x(1, 0) = 0.7;
  d.y = {1.0, 2.0};
  d.s = {1, 1};
  d.x_names = {"x"};
  const std::vector<double> mhat{0.5, 2.0}, fhat{2.0, 1.0}, phat{0.3, 0.6};
  GridSpec g;
  g.x_cutpoints = {{0.0, 1.0}};
  g.p_cutpoints = {0.3, 0.6};
  // Closed interval: both endpoints count.
  CHECK(statistic_z1m(d, mhat, fhat, phat, g).statistic == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(statistic_z1m(d, mhat, fhat, phat, g).statistic == st::naive_z1m(d, mhat, fhat, phat, g));
}

TEST_CASE("multiplier moments") {
  for (auto kind : {Multiplier::Rademacher, Multiplier::Mammen}) {
    const auto v = draw_multipliers(RngStream(51, 0), 100000, kind);
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    for (double e : v) {
      m1 += e;
      m2 += e * e;
      m3 += e * e * e;
    }
    m1 /= v.size();
    m2 /= v.size();
    m3 /= v.size();
    CHECK(std::abs(m1) < 0.015);
    CHECK(std::abs(m2 - 1.0) < 0.03);
    CHECK(std::abs(m3 - (kind == Multiplier::Mammen ? 1.0 : 0.0)) < 0.06);
  }
  CHECK(multiplier_from_string("mammen") == Multiplier::Mammen);
  CHECK(to_string(Multiplier::Rademacher) == "rademacher");
  CHECK(residual_scaling_from_string("none") == ResidualScaling::None);
  CHECK(to_string(ResidualScaling::Leverage) == "leverage");
  CHECK_THROWS_AS(residual_scaling_from_string("hc3"), ConfigError);
}

TEST_CASE("bootstrap draw equals a refit from scratch") {
  RngStream rng(52, 0);
  for (auto scaling : {ResidualScaling::None, ResidualScaling::Leverage}) {
    Dataset d = st::random_dataset(rng, 120, 2);
    std::vector<double> phat(d.n());
    for (auto& p : phat) p = rng.uniform();
    const std::vector<double> h{0.3, 0.4};
    const NwSmoother sm(d, h);
    const auto m = sm.fit(d.y);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> mhat(d.n(), nan);
    for (std::size_t k = 0; k < sm.rows().size(); ++k) mhat[sm.rows()[k]] = m[k];
    const std::vector<double> none;
    const GridSpec grid = st::random_grid(rng, d, phat, none, 4);
    const auto v = draw_multipliers(RngStream(8, 0), d.n(), Multiplier::Mammen);

    Dataset star = d;
    for (std::size_t k = 0; k < sm.rows().size(); ++k) {
      const std::size_t i = sm.rows()[k];
      double e = d.y[i] - mhat[i];
      if (scaling == ResidualScaling::Leverage) e /= sm.residual_scale()[k];
      star.y[i] = mhat[i] + v[i] * e;
    }
    std::vector<double> mstar(d.n(), nan), fstar(d.n(), nan);
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (!d.s[i]) continue;
      const auto e = st::naive_nw(star, star.x.row(i), h);
      mstar[i] = e.mhat;
      fstar[i] = e.fhat;
    }
    const double ref = st::naive_z1m(star, mstar, fstar, phat, grid);
    CHECK(bootstrap_z1m_draw(d, sm, mhat, phat, grid, v, scaling) ==
          doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("mean test is invariant to affine outcome maps") {
  DgpConfig dgp;
  dgp.n = 300;
  dgp.outcome = OutcomeKind::QuadraticMean;
  dgp.rho = 0.5;
  const auto sample = generate_dgp(dgp, RngStream(53, 0));
  MeanTestConfig cfg;
  cfg.R = 99;
  cfg.propensity.oracle_p = sample.oracle_p;
  const auto a = run_meantest(sample.data, cfg, RngStream(2, 0));
  Dataset shifted = sample.data;
  for (std::size_t i = 0; i < shifted.n(); ++i) {
    if (shifted.s[i]) shifted.y[i] = 2.0 * shifted.y[i] + 3.0;
  }
  const auto b = run_meantest(shifted, cfg, RngStream(2, 0));
  CHECK(b.statistic == doctest::Approx(2.0 * a.statistic).epsilon(1e-9));
  CHECK(b.p_value == a.p_value);
  CHECK(a.config_echo.at("residual_scaling") == "leverage");

  cfg.residual_scaling = ResidualScaling::None;
  cfg.threads = 2;
  const auto c = run_meantest(sample.data, cfg, RngStream(2, 0));
  CHECK(c.statistic == a.statistic);
  CHECK(c.config_echo.at("residual_scaling") == "none");
  CHECK(c.boot_draws != a.boot_draws);
}
