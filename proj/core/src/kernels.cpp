#include "selectest/kernels.hpp"

#include <cmath>

#include "selectest/errors.hpp"

namespace selectest {

double KernelSpec::operator()(double v) const noexcept {
  if (!(std::abs(v) <= 1.0)) return 0.0;
  const double q = 1.0 - v * v;
  switch (family) {
    case KernelFamily::Epanechnikov:
      return 0.75 * q;
    case KernelFamily::Biweight:
      return 0.9375 * q * q;
    case KernelFamily::Triweight:
      return 1.09375 * q * q * q;
  }
  return 0.0;
}

double KernelSpec::squared_integral() const noexcept {
  switch (family) {
    case KernelFamily::Epanechnikov:
      return 0.6;
    case KernelFamily::Biweight:
      return 5.0 / 7.0;
    case KernelFamily::Triweight:
      return 350.0 / 429.0;
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, double v) noexcept { return spec(v); }

double product_kernel(const KernelSpec& spec, std::span<const double> u,
                      std::span<const double> h) {
  if (u.size() != h.size()) {
    throw ConfigError("product_kernel", "dimension mismatch: " + std::to_string(u.size()) +
                                            " offsets vs " + std::to_string(h.size()) +
                                            " bandwidths");
  }
  double value = 1.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(h[j] > 0.0)) {
      throw ConfigError("product_kernel", "bandwidth " + std::to_string(j) + " must be positive");
    }
    value *= spec(u[j] / h[j]);
    if (value == 0.0) return 0.0;
  }
  return value;
}

double discrete_kernel(const DiscreteKernelSpec& spec, std::span<const int> a,
                       std::span<const int> b) {
  if (a.size() != b.size() || a.size() != spec.lambda.size()) {
    throw ConfigError("discrete_kernel", "dimension mismatch between categories and lambda");
  }
  double value = 1.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double lambda = spec.lambda[j];
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw ConfigError("discrete_kernel", "lambda " + std::to_string(j) + " outside [0,1]");
    }
    if (a[j] != b[j]) value *= lambda;
  }
  return value;
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Epanechnikov:
      return "epanechnikov";
    case KernelFamily::Biweight:
      return "biweight";
    case KernelFamily::Triweight:
      return "triweight";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  if (name == "biweight") return KernelFamily::Biweight;
  if (name == "triweight") return KernelFamily::Triweight;
  throw ConfigError("kernel", "unknown kernel family '" + std::string(name) + "'");
}

}  // namespace selectest
