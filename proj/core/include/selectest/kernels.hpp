#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selectest {

/// Second-order kernels with compact support on [-1, 1].
enum class KernelFamily { Epanechnikov, Biweight, Triweight };

struct KernelSpec {
  KernelFamily family = KernelFamily::Epanechnikov;

  double operator()(double v) const noexcept;
  /// Closed-form integral of K(v)^2 over the support.
  double squared_integral() const noexcept;
};

double kernel_eval(const KernelSpec& spec, double v) noexcept;

/// prod_j K(u_j / h_j). Throws ConfigError on a dimension mismatch or h_j <= 0.
double product_kernel(const KernelSpec& spec, std::span<const double> u,
                      std::span<const double> h);

/// Unordered discrete kernel, one smoothing parameter per coordinate:
/// 1 when the categories agree and lambda_j when they differ. lambda = 0
/// reduces to exact matching.
struct DiscreteKernelSpec {
  std::vector<double> lambda;
};

double discrete_kernel(const DiscreteKernelSpec& spec, std::span<const int> a,
                       std::span<const int> b);

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

}  // namespace selectest
