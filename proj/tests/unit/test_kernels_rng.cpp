#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "selectest/errors.hpp"
#include "selectest/kernels.hpp"
#include "selectest/rng.hpp"

using namespace selectest;

namespace {

double simpson(const KernelSpec& k, double (*f)(const KernelSpec&, double), int n = 20000) {
  const double a = -1.0, b = 1.0, h = (b - a) / n;
  double s = f(k, a) + f(k, b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(k, a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("epanechnikov point values") {
  const KernelSpec k;
  CHECK(k(0.0) == doctest::Approx(0.75));
  CHECK(k(1.2) == 0.0);
  CHECK(k(-1.0000001) == 0.0);
  CHECK(k(0.5) == doctest::Approx(0.5625));
}

TEST_CASE("kernels integrate to one, are centred and symmetric") {
  for (auto fam : {KernelFamily::Epanechnikov, KernelFamily::Biweight, KernelFamily::Triweight}) {
    const KernelSpec k{fam};
    CAPTURE(to_string(fam));
    CHECK(simpson(k, [](const KernelSpec& s, double v) { return s(v); }) ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(simpson(k, [](const KernelSpec& s, double v) { return v * s(v); })) < 1e-12);
    CHECK(simpson(k, [](const KernelSpec& s, double v) { return s(v) * s(v); }) ==
          doctest::Approx(k.squared_integral()).epsilon(1e-8));
    for (double v : {0.1, 0.37, 0.9, 1.5}) CHECK(k(v) == k(-v));
  }
  CHECK(KernelSpec{}.squared_integral() == doctest::Approx(0.6));
}

TEST_CASE("product kernel") {
  const KernelSpec k;
  const std::vector<double> zero{0.0, 0.0}, one{1.0, 1.0};
  CHECK(product_kernel(k, zero, one) == doctest::Approx(0.5625));
  const std::vector<double> u{0.5}, h{1.0};
  CHECK(product_kernel(k, u, h) == doctest::Approx(0.5625));
  const std::vector<double> far{0.2, 1.3};
  CHECK(product_kernel(k, far, one) == 0.0);
  CHECK_THROWS_AS(product_kernel(k, u, one), ConfigError);
  const std::vector<double> bad{0.0};
  CHECK_THROWS_AS(product_kernel(k, u, bad), ConfigError);
}

TEST_CASE("discrete kernel") {
  const DiscreteKernelSpec spec{{0.3, 0.0}};
  const std::vector<int> a{1, 2}, b{1, 2}, c{0, 2}, d{0, 5};
  CHECK(discrete_kernel(spec, a, b) == 1.0);
  CHECK(discrete_kernel(spec, a, c) == doctest::Approx(0.3));
  CHECK(discrete_kernel(spec, a, d) == 0.0);
  CHECK(discrete_kernel(spec, c, a) == discrete_kernel(spec, a, c));
  const DiscreteKernelSpec bad{{1.5, 0.0}};
  CHECK_THROWS_AS(discrete_kernel(bad, a, c), ConfigError);
}

TEST_CASE("philox known answer") {
  // Random123 reference vector for philox4x32-10 with zero counter and key.
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  const auto a = draw_uniforms(RngStream(42, 7), 1000);
  const auto b = draw_uniforms(RngStream(42, 7), 1000);
  CHECK(a == b);
  std::set<double> leading;
  for (std::uint64_t id = 0; id < 200; ++id) leading.insert(draw_uniforms(RngStream(42, id), 1)[0]);
  CHECK(leading.size() == 200);
  RngStream s(42, 7);
  CHECK(s.child(3).stream_id() != s.child(4).stream_id());
  CHECK(draw_uniforms(s.child(3), 5) == draw_uniforms(RngStream(42, 7).child(3), 5));
  for (double u : a) CHECK((u > 0.0 && u < 1.0));
}

TEST_CASE("uniform draws pass mean and Kolmogorov-Smirnov checks") {
  const auto big = draw_uniforms(RngStream(1, 0), 100000);
  double mean = 0.0;
  for (double u : big) mean += u;
  mean /= static_cast<double>(big.size());
  CHECK(std::abs(mean - 0.5) < 0.01);

  auto u = draw_uniforms(RngStream(2, 0), 10000);
  std::sort(u.begin(), u.end());
  double D = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    D = std::max({D, (i + 1) / n - u[i], u[i] - i / n});
  }
  CHECK(D < 1.628 / std::sqrt(n));
}

TEST_CASE("normal, poisson and bounded integer draws") {
  RngStream s(3, 0);
  const int N = 200000;
  double m = 0.0, v = 0.0, pm = 0.0;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < N; ++i) {
    const double z = s.normal();
    m += z;
    v += z * z;
    pm += static_cast<double>(s.poisson(1.5));
    ++counts[s.below(7)];
  }
  CHECK(std::abs(m / N) < 0.01);
  CHECK(std::abs(v / N - 1.0) < 0.02);
  CHECK(std::abs(pm / N - 1.5) < 0.02);
  for (int c : counts) CHECK(std::abs(c / double(N) - 1.0 / 7.0) < 0.005);
}
