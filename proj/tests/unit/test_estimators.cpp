#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "lp_oracle.hpp"
#include "naive.hpp"
#include "selectest/bandwidth.hpp"
#include "selectest/errors.hpp"
#include "selectest/estimators.hpp"
#include "selectest/montecarlo.hpp"
#include "selectest/quantreg.hpp"

using namespace selectest;
namespace st = selectest::testing;

namespace {

Dataset line_data(std::vector<double> x, std::vector<double> y, std::vector<std::uint8_t> s) {
  Dataset d;
  const std::size_t n = x.size();
  d.x = Matrix(n, 1);
  d.zc = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) = x[i];
    d.zc(i, 0) = x[i];
  }
  d.y = std::move(y);
  d.s = std::move(s);
  d.x_names = {"x"};
  d.zc_names = {"z"};
  return d;
}

}  // namespace

TEST_CASE("propensity hand sums") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Dataset d = line_data({0, 1, 2}, {1, nan, 1}, {1, 0, 1});
  const std::vector<double> h{1.5};
  const auto fit = fit_propensity(d, h, {});
  const double side = 0.75 * (1.0 - 1.0 / 2.25);
  CHECK(fit.phat[1] == doctest::Approx(2.0 * side / (2.0 * side + 0.75)));
  CHECK(fit.n_undefined == 0);

  const std::vector<double> tiny{1e-6};
  const auto sharp = fit_propensity(d, tiny, {});
  CHECK(sharp.phat[0] == 1.0);
  CHECK(sharp.phat[1] == 0.0);
  const auto loo = fit_propensity(d, tiny, {}, true);
  CHECK(std::isnan(loo.phat[0]));
  CHECK(loo.n_undefined == 3);
}

TEST_CASE("propensity equals direct sums with mixed instruments") {
  RngStream rng(21, 0);
  Dataset d = st::random_dataset(rng, 80, 1);
  d.zd = CategoryMatrix(d.n(), 1);
  d.zd_names = {"k"};
  for (std::size_t i = 0; i < d.n(); ++i) d.zd(i, 0) = static_cast<int>(rng.below(3));
  const std::vector<double> h{0.7}, lam{0.4};
  for (bool loo : {false, true}) {
    const auto fit = fit_propensity(d, h, DiscreteKernelSpec{lam}, loo);
    for (std::size_t i = 0; i < d.n(); ++i) {
      const double ref = st::naive_propensity(d, i, h, lam, loo);
      CHECK(fit.phat[i] == doctest::Approx(ref).epsilon(1e-12));
      CHECK((fit.phat[i] >= 0.0 && fit.phat[i] <= 1.0));
    }
  }
  // All selected: p = 1 wherever weights exist.
  for (auto& s : d.s) s = 1;
  for (std::size_t i = 0; i < d.n(); ++i) d.y[i] = 0.0;
  const auto ones = fit_propensity(d, h, DiscreteKernelSpec{lam});
  for (double p : ones.phat) CHECK(p == 1.0);
  CHECK_THROWS_AS(fit_propensity(d, h, DiscreteKernelSpec{{1.2}}), ConfigError);
}

TEST_CASE("propensity cross-validation objective") {
  RngStream rng(22, 0);
  Dataset d = st::random_dataset(rng, 40, 1);
  const std::vector<double> h{0.5};
  const double sbar = static_cast<double>(d.n_selected()) / static_cast<double>(d.n());
  double ref = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    double p = st::naive_propensity(d, i, h, {}, true);
    if (std::isnan(p)) p = sbar;
    ref += (d.s[i] - p) * (d.s[i] - p);
  }
  CHECK(propensity_cv_objective(d, h, {}) == doctest::Approx(ref / d.n()));
}

TEST_CASE("propensity bandwidth selection") {
  RngStream rng(23, 0);
  const std::size_t n = 200;
  Dataset noise = st::random_dataset(rng, n, 1);
  noise.zd = CategoryMatrix(n, 1);
  noise.zd_names = {"k"};
  for (std::size_t i = 0; i < n; ++i) {
    noise.s[i] = rng.uniform() < 0.5;
    noise.y[i] = noise.s[i] ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    noise.zd(i, 0) = static_cast<int>(rng.below(2));
  }
  PropensityCvOptions opts;
  opts.subset_size = n;
  const auto flat = cv_bandwidth_propensity(noise, opts, RngStream(1, 0));
  const double sd = sample_sd(noise.zc.column(0));
  CHECK(flat.h_z[0] > 0.5 * sd);
  CHECK(flat.reps_used == 1);
  // Subsets no smaller than n collapse to the same full-sample run.
  opts.subset_size = 5 * n;
  opts.reps = 7;
  const auto same = cv_bandwidth_propensity(noise, opts, RngStream(99, 0));
  CHECK(same.h_z == flat.h_z);
  CHECK(same.lambda == flat.lambda);

  Dataset sharp = st::random_dataset(rng, 400, 1);
  for (std::size_t i = 0; i < sharp.n(); ++i) {
    sharp.s[i] = sharp.zc(i, 0) > 0.0;
    sharp.y[i] = sharp.s[i] ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  }
  opts = {};
  opts.subset_size = 400;
  const auto step = cv_bandwidth_propensity(sharp, opts, RngStream(1, 0));
  CHECK(step.h_z[0] < 0.25 * sample_sd(sharp.zc.column(0)));

  opts = {};
  opts.subset_size = 100;
  opts.reps = 5;
  const auto a = cv_bandwidth_propensity(sharp, opts, RngStream(4, 0));
  const auto b = cv_bandwidth_propensity(sharp, opts, RngStream(4, 0));
  CHECK(a.h_z == b.h_z);
  CHECK(a.reps_used + a.reps_dropped == 5);
}

TEST_CASE("quantile residuals") {
  RngStream rng(24, 0);
  Dataset d = st::random_dataset(rng, 300, 1);
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.s[i]) d.y[i] = 2.5;
  }
  const std::vector<double> taus{0.3, 0.5}, h{0.3};
  for (const auto& fit : quantile_residuals(d, taus, h, 3)) {
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (!d.s[i]) {
        CHECK(std::isnan(fit.uhat[i]));
        CHECK(std::isnan(fit.below[i]));
        continue;
      }
      CHECK(std::abs(fit.uhat[i]) < 1e-9);
      CHECK((fit.below[i] >= 0.0 && fit.below[i] <= 1.0));
    }
  }
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.s[i]) d.y[i] = rng.normal();
  }
  const std::vector<double> median{0.5};
  const auto fit = quantile_residuals(d, median, h, 1)[0];
  double below = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.s[i]) below += fit.uhat[i] < 0.0;
  }
  CHECK(std::abs(below / d.n_selected() - 0.5) < 0.1);
}

TEST_CASE("quantile residuals match the LP oracle point by point") {
  DgpConfig cfg;
  cfg.n = 500;
  const auto sample = generate_dgp(cfg, RngStream(25, 0));
  const Dataset& d = sample.data;
  const auto h = rule_of_thumb_hx(d, 4.0);
  const std::vector<double> taus{0.3};
  const auto fit = quantile_residuals(d, taus, h, 3)[0];
  const PolynomialBasis basis(1, 3);
  std::vector<double> z(4);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < d.n(); i += 3) {
    if (!d.s[i]) continue;
    std::vector<double> design, y, w;
    for (std::size_t j = 0; j < d.n(); ++j) {
      const double k = d.s[j] ? KernelSpec{}((d.x(j, 0) - d.x(i, 0)) / h[0]) : 0.0;
      if (k <= 0.0) continue;
      const std::vector<double> u{d.x(j, 0) - d.x(i, 0)};
      basis.evaluate(u, z);
      design.insert(design.end(), z.begin(), z.end());
      y.push_back(d.y[j]);
      w.push_back(k);
    }
    const auto local = fit_local_poly_quantile(d, 0.3, d.x.row(i), h, 3);
    double obj = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      double f = 0.0;
      for (std::size_t k = 0; k < 4; ++k) f += design[j * 4 + k] * local.coef[k];
      obj += w[j] * check_loss(y[j] - f, 0.3);
    }
    CHECK(obj == doctest::Approx(st::lp_quantile_objective(design, 4, y, w, 0.3)).epsilon(1e-6));
    CHECK(fit.qhat[i] == local.qhat());
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("fit near one") {
  RngStream rng(26, 0);
  Dataset d = st::random_dataset(rng, 120, 1);
  const std::vector<double> x0{0.5}, h{0.4};
  std::vector<double> phat(d.n(), 0.9);
  const auto plain = fit_local_poly_quantile(d, 0.5, x0, h, 1);
  const auto same = fit_local_poly_quantile_near_one(d, 0.5, x0, h, 1, phat, 0.9, 0.05);
  CHECK(same.coef[0] == doctest::Approx(plain.coef[0]).epsilon(1e-12));
  CHECK(same.coef[1] == doctest::Approx(plain.coef[1]).epsilon(1e-12));
  for (auto& p : phat) p = rng.uniform();
  const auto wide = fit_local_poly_quantile_near_one(d, 0.5, x0, h, 1, phat, 0.5, 1e6);
  CHECK(wide.coef[0] == doctest::Approx(plain.coef[0]).epsilon(1e-9));
  for (auto& p : phat) p = 0.2;
  phat[0] = 0.95;
  try {
    fit_local_poly_quantile_near_one(d, 0.5, x0, h, 1, phat, 0.95, 0.01);
    FAIL("expected a thin-set error");
  } catch (const InfeasibleError& e) {
    CHECK(e.count() <= 1);
  }
}

TEST_CASE("conditional CDF") {
  RngStream rng(27, 0);
  Dataset d = st::random_dataset(rng, 150, 1);
  std::vector<double> uhat(d.n(), std::numeric_limits<double>::quiet_NaN()), phat(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    phat[i] = rng.uniform();
    if (d.s[i]) uhat[i] = 0.5 * rng.normal();
  }
  const std::vector<double> h{0.3};
  const double hu = 0.6;
  const std::vector<double> cuts{-0.1, 0.2, 0.45, 0.7, 1.1};
  const auto table = cond_cdf_table(d, uhat, phat, cuts, h, hu);
  const double pmax = *std::max_element(phat.begin(), phat.end());
  const double pmin = *std::min_element(phat.begin(), phat.end());
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (!d.s[i]) continue;
    double prev = 0.0;
    for (std::size_t l = 0; l < cuts.size(); ++l) {
      const auto v = fit_cond_cdf(d, uhat, phat, cuts[l], i, h, hu);
      const double ref = st::naive_cond_cdf(d, uhat, phat, cuts[l], i, h, hu);
      REQUIRE(v.has_value());
      CHECK(*v == doctest::Approx(ref).epsilon(1e-12));
      CHECK(table.at(i, l) == doctest::Approx(*v).epsilon(1e-12));
      CHECK(*v >= prev);
      prev = *v;
    }
    CHECK(*fit_cond_cdf(d, uhat, phat, pmax, i, h, hu) == 1.0);
    CHECK(*fit_cond_cdf(d, uhat, phat, pmin - 1e-9, i, h, hu) == 0.0);
  }
}

TEST_CASE("conditional CDF hand instance") {
  Dataset d = line_data({0.0, 0.1, 0.2, 0.9}, {0, 0, 0, 0}, {1, 1, 1, 1});
  const std::vector<double> uhat{0.0, 0.5, -0.25, 0.0}, phat{0.3, 0.6, 0.2, 0.9}, h{0.5};
  const double hu = 1.0;
  const auto K = [](double v) { return std::abs(v) <= 1 ? 0.75 * (1 - v * v) : 0.0; };
  const double w0 = K(0) * K(0), w1 = K(0.5) * K(0.2), w2 = K(0.25) * K(0.4);
  CHECK(*fit_cond_cdf(d, uhat, phat, 0.35, 0, h, hu) ==
        doctest::Approx((w0 + w2) / (w0 + w1 + w2)));
  const std::vector<double> far{0.05};
  const std::vector<double> u2{0.9, 0.9, 0.9, 0.9};
  CHECK_FALSE(fit_cond_cdf(d, u2, phat, 0.5, 0, far, 0.5).has_value());
}

TEST_CASE("Nadaraya-Watson mean and density") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Dataset d = line_data({0.0, 0.3, 0.5, 0.6, 1.0}, {2.0, nan, 4.0, 1.0, 3.0}, {1, 0, 1, 1, 1});
  const std::vector<double> x0{0.4}, h{0.5};
  const auto e = nw_mean_and_density(d, x0, h);
  const auto ref = st::naive_nw(d, x0, h);
  CHECK(e.mhat == doctest::Approx(ref.mhat));
  CHECK(e.fhat == doctest::Approx(ref.fhat));
  const auto K = [](double v) { return 0.75 * (1 - v * v); };
  const double w0 = K(0.8), w2 = K(0.2), w3 = K(0.4);
  CHECK(e.mhat == doctest::Approx((2 * w0 + 4 * w2 + 1 * w3) / (w0 + w2 + w3)));
  CHECK(e.fhat == doctest::Approx((w0 + K(0.2) + w2 + w3) / (5 * 0.5)));

  const std::vector<double> huge{1e6};
  CHECK(nw_mean_and_density(d, x0, huge).mhat == doctest::Approx(2.5).epsilon(1e-9));
  Dataset one = line_data({0.2}, {7.0}, {1});
  const std::vector<double> at{0.2};
  CHECK(nw_mean_and_density(one, at, h).mhat == 7.0);
  const std::vector<double> away{5.0};
  CHECK_FALSE(nw_mean_and_density(d, away, h).defined);
}

TEST_CASE("cached smoother equals direct evaluation") {
  RngStream rng(28, 0);
  for (std::size_t dx : {1u, 2u}) {
    Dataset d = st::random_dataset(rng, 100, dx);
    const std::vector<double> h(dx, 0.25);
    const NwSmoother sm(d, h);
    const auto m = sm.fit(d.y);
    for (std::size_t k = 0; k < sm.rows().size(); ++k) {
      const std::size_t i = sm.rows()[k];
      const auto ref = st::naive_nw(d, d.x.row(i), h);
      CHECK(m[k] == doctest::Approx(ref.mhat).epsilon(1e-12));
      CHECK(sm.fhat()[k] == doctest::Approx(ref.fhat).epsilon(1e-12));
      // Leverage scale from explicit weights.
      double total = 0.0, own = 0.0, sq = 0.0;
      std::vector<double> w;
      for (std::size_t j = 0; j < d.n(); ++j) {
        double v = d.s[j] ? 1.0 : 0.0;
        for (std::size_t c = 0; c < dx; ++c) v *= KernelSpec{}((d.x(j, c) - d.x(i, c)) / h[c]);
        w.push_back(v);
        total += v;
      }
      for (std::size_t j = 0; j < d.n(); ++j) {
        sq += (w[j] / total) * (w[j] / total);
        if (j == i) own = w[j] / total;
      }
      const double v = 1.0 - 2.0 * own + sq;
      CHECK(sm.residual_scale()[k] == doctest::Approx(v > 1e-12 ? std::sqrt(v) : 1.0));
    }
  }
}

TEST_CASE("rule-of-thumb bandwidths") {
  const std::size_t n = 1000;
  std::vector<double> x(n), y(n, 0.0);
  std::vector<std::uint8_t> s(n, 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = (i % 2 ? 1.0 : -1.0);
  Dataset d = line_data(x, y, s);
  // sd with the n - 1 denominator; rescale to exactly one.
  const double sd = sample_sd(d.x.column(0));
  for (std::size_t i = 0; i < n; ++i) d.x(i, 0) /= sd;
  CHECK(rule_of_thumb_hx(d, 4.0)[0] == doctest::Approx(0.4));
  QuantileFit fit;
  fit.uhat = d.x.column(0);
  const std::vector<QuantileFit> fits{fit};
  const auto hF = rule_of_thumb_hF(d, fits);
  CHECK(hF.h_x[0] == doctest::Approx(0.6957).epsilon(1e-4));
  CHECK(hF.h_u[0] == doctest::Approx(2.2 * std::pow(1000.0, -1.0 / 6.0)));

  Dataset tiny = line_data({0.5}, {1.0}, {1});
  CHECK_THROWS_AS(rule_of_thumb_hx(tiny, 4.0), DataError);
  Dataset flat = line_data({0.5, 0.5, 0.5}, {1, 2, 3}, {1, 1, 1});
  try {
    rule_of_thumb_hx(flat, 4.0);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
}

TEST_CASE("undersmoothed cross-validation") {
  RngStream rng(29, 0);
  Dataset d = st::random_dataset(rng, 300, 1);
  for (auto& s : d.s) s = 1;
  for (std::size_t i = 0; i < d.n(); ++i) d.y[i] = rng.normal();
  CvBandwidthOptions one;
  one.multipliers = {1.7};
  const auto single = cv_bandwidth_undersmoothed(d, 3, one);
  CHECK(single.multiplier == 1.7);
  CHECK(single.h_x[0] == doctest::Approx(1.7 * sample_sd(d.x.column(0)) * std::pow(300.0, -0.2)));

  const auto noise = cv_bandwidth_undersmoothed(d, 3);
  CHECK(noise.multiplier >= 2.0);

  for (std::size_t i = 0; i < d.n(); ++i) {
    d.y[i] = std::sin(12.0 * d.x(i, 0)) + 0.05 * rng.normal();
  }
  const auto curved = cv_bandwidth_undersmoothed(d, 3);
  CHECK(curved.h_x[0] < 0.15);
  CHECK_THROWS_AS(cv_bandwidth_undersmoothed(d, 1), ConfigError);
}
