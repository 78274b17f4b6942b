#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "selectest/dataset.hpp"
#include "selectest/kernels.hpp"
#include "selectest/rng.hpp"

namespace selectest {

// ---------------------------------------------------------------------------
// Propensity score

/// Local-constant propensity estimates at every row. Rows whose kernel
/// weights sum to zero hold NaN and are counted in `n_undefined`.
struct PropensityFit {
  std::vector<double> phat;
  std::size_t n_undefined = 0;
  std::vector<double> h_z;
  std::vector<double> lambda;
};

/// p(z_i) = sum_j s_j W_ij / sum_j W_ij with W the product of a continuous
/// kernel over zc (bandwidths h_z) and the unordered discrete kernel over zd.
/// With `leave_one_out` the j = i term is dropped.
PropensityFit fit_propensity(const Dataset& data, std::span<const double> h_z,
                             const DiscreteKernelSpec& lambda, bool leave_one_out = false,
                             const KernelSpec& kernel = {});

/// Least-squares leave-one-out criterion mean_i (s_i - p_{-i})^2. Undefined
/// leave-one-out estimates contribute (s_i - mean(s))^2.
double propensity_cv_objective(const Dataset& data, std::span<const double> h_z,
                               const DiscreteKernelSpec& lambda, const KernelSpec& kernel = {});

struct PropensityBandwidth {
  std::vector<double> h_z;
  std::vector<double> lambda;
  std::size_t reps_used = 0;
  std::size_t reps_dropped = 0;
};

struct PropensityCvOptions {
  std::size_t subset_size = 450;
  std::size_t reps = 50;
  int max_sweeps = 10;
  KernelSpec kernel{};
  unsigned threads = 1;
};

/// Cross-validated (h_z, lambda): coordinate descent on random subsets,
/// coordinate-wise median across replications. Subsets no smaller than the
/// sample collapse to a single full-sample run.
PropensityBandwidth cv_bandwidth_propensity(const Dataset& data, const PropensityCvOptions& opts,
                                            RngStream stream);

// ---------------------------------------------------------------------------
// Local polynomial quantile regression

struct LocalQuantileFit {
  /// Coefficients on (x - x0)^t in PolynomialBasis order for `order_used`.
  std::vector<double> coef;
  int order_used = 0;
  bool order_reduced = false;
  std::size_t n_eff = 0;
  /// Residual of row `own_row` if it entered the local fit (else NaN).
  double own_residual = 0.0;
  /// 1{own_residual <= 0}, replaced by 1 - a_i (the row's regression rank
  /// score) when the row is interpolated by the fit. NaN like own_residual.
  double own_below = 0.0;

  double qhat() const { return coef.front(); }
};

struct LocalQuantileOptions {
  KernelSpec kernel{};
  /// Extra nonnegative weight per row (size n) or empty.
  std::span<const double> row_weights{};
  /// Row dropped from the fit (leave-one-out), if any.
  std::optional<std::size_t> exclude_row{};
  /// Row whose residual is returned in own_residual, if any.
  std::optional<std::size_t> own_row{};
};

/// Minimizes sum_i l_tau(y_i - sum_t b_t (x_i - x0)^t) s_i K((x_i - x0)/h)
/// over |t| <= r. A rank-deficient local design lowers the order until the
/// fit succeeds and sets `order_reduced`. Throws InfeasibleError when no
/// selected row has positive weight at x0.
LocalQuantileFit fit_local_poly_quantile(const Dataset& data, double tau,
                                         std::span<const double> x0, std::span<const double> h_x,
                                         int r, const LocalQuantileOptions& opts = {});

/// Fit at every selected row for one tau.
struct QuantileFit {
  double tau = 0.5;
  /// y_i - q_tau(x_i) for selected rows, NaN elsewhere (length n).
  std::vector<double> uhat;
  /// q_tau(x_i) for selected rows, NaN elsewhere.
  std::vector<double> qhat;
  /// Indicator 1{uhat_i <= 0} with rank scores at interpolated rows, NaN elsewhere.
  std::vector<double> below;
  std::size_t n_order_reduced = 0;
};

std::vector<QuantileFit> quantile_residuals(const Dataset& data, std::span<const double> tau_grid,
                                            std::span<const double> h_x, int r,
                                            const KernelSpec& kernel = {}, unsigned threads = 1);

/// Local polynomial fit restricted to rows with propensity near delta,
/// weighting by K((phat_i - delta)/h_p). Throws InfeasibleError carrying the
/// count when fewer rows than basis terms carry positive weight.
LocalQuantileFit fit_local_poly_quantile_near_one(const Dataset& data, double tau,
                                                  std::span<const double> x0,
                                                  std::span<const double> h_x, int r,
                                                  std::span<const double> phat, double delta,
                                                  double h_p, const KernelSpec& kernel = {});

// ---------------------------------------------------------------------------
// Conditional CDF of p given (x, u_tau = 0, s = 1)

/// F(p | x_i, 0, s = 1) as the kernel-weighted share of selected rows with
/// phat_j <= p, weights K(u_j / h_u) prod_k K((x_jk - x_ik) / h_x_k).
/// Returns nullopt when the weights sum to zero.
std::optional<double> fit_cond_cdf(const Dataset& data, std::span<const double> uhat,
                                   std::span<const double> phat, double p, std::size_t i,
                                   std::span<const double> h_x, double h_u,
                                   const KernelSpec& kernel = {});

/// F at every selected row and every cutpoint: values[i * L + l]. Rows that
/// are unselected or have a zero denominator hold NaN.
struct CondCdfTable {
  std::size_t n = 0;
  std::vector<double> cutpoints;
  std::vector<double> values;
  std::size_t n_undefined = 0;

  double at(std::size_t i, std::size_t l) const { return values[i * cutpoints.size() + l]; }
};

CondCdfTable cond_cdf_table(const Dataset& data, std::span<const double> uhat,
                            std::span<const double> phat, std::span<const double> cutpoints,
                            std::span<const double> h_x, double h_u, const KernelSpec& kernel = {});

// ---------------------------------------------------------------------------
// Nadaraya-Watson

struct NwEstimate {
  double mhat = 0.0;
  double fhat = 0.0;
  bool defined = false;
};

/// fhat(x0) = (n prod h)^{-1} sum_j K((x_j - x0)/h) over all rows and
/// mhat(x0) = sum_j s_j y_j K / sum_j s_j K over selected rows.
NwEstimate nw_mean_and_density(const Dataset& data, std::span<const double> x0,
                               std::span<const double> h, const KernelSpec& kernel = {});

/// Nadaraya-Watson smoother evaluated at the selected rows with the kernel
/// weights cached, so refits on new outcomes only redo the numerators.
class NwSmoother {
 public:
  NwSmoother(const Dataset& data, std::span<const double> h, const KernelSpec& kernel = {});

  /// Selected rows, ascending.
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }
  /// Density estimate at each selected row.
  const std::vector<double>& fhat() const noexcept { return fhat_; }
  /// mhat at each selected row for outcomes `y` indexed by data row.
  std::vector<double> fit(std::span<const double> y) const;
  /// sqrt(1 - 2 w_ii + sum_j w_ij^2) per selected row: the standard deviation
  /// of y_i - mhat_i relative to that of y_i for homoskedastic errors.
  const std::vector<double>& residual_scale() const noexcept { return residual_scale_; }

 private:
  std::vector<std::size_t> rows_;
  std::vector<double> fhat_;
  std::vector<double> residual_scale_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> neighbours_;
  std::vector<double> weights_;
};

}  // namespace selectest
