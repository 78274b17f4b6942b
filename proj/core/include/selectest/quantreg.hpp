#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selectest {

/// Check loss l_tau(v) = 2 v (tau - 1{v <= 0}).
double check_loss(double v, double tau) noexcept;

struct WeightedQuantileSolution {
  std::vector<double> coef;
  /// Rows interpolated exactly by the optimal vertex (one per coefficient).
  std::vector<std::size_t> basis;
  /// Residuals y - Z coef; exactly zero on basis rows.
  std::vector<double> residuals;
  /// Dual solution a_i / w_i: 1 above the fit, 0 below, in [0, 1] on basis rows.
  std::vector<double> rank_scores;
  /// sum_i w_i l_tau(residual_i)
  double objective = 0.0;
  int iterations = 0;
};

/// Exact weighted linear quantile regression
///   min_b sum_i w_i l_tau(y_i - z_i' b)
/// solved as a bounded-variable simplex on the dual linear program
///   max_a y'a  s.t.  Z'a = (1 - tau) Z'w,  0 <= a_i <= w_i,
/// so the optimum is a vertex that interpolates p rows. Pivot ties resolve to
/// the lowest row index, which makes the returned basis deterministic.
///
/// `design` is row-major (rows x p). Weights must be positive. Throws DataError
/// if the design does not have full column rank.
WeightedQuantileSolution solve_weighted_quantile(std::span<const double> design, std::size_t p,
                                                 std::span<const double> y,
                                                 std::span<const double> w, double tau);

/// Multi-indices t with |t| <= order over `dim` coordinates, ordered by total
/// degree and, within a degree, lexicographically descending:
///   d=2, r=2: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
/// The intercept is always first.
class PolynomialBasis {
 public:
  PolynomialBasis(std::size_t dim, int order);

  std::size_t dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return exponents_.size() / dim_; }
  std::span<const int> exponent(std::size_t k) const { return {exponents_.data() + k * dim_, dim_}; }

  /// Writes the monomials of `u` into `out` (size() values).
  void evaluate(std::span<const double> u, std::span<double> out) const;

 private:
  std::size_t dim_;
  int order_;
  std::vector<int> exponents_;
};

std::size_t polynomial_basis_size(std::size_t dim, int order);

}  // namespace selectest
