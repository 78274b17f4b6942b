#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "selectest/dataset.hpp"

namespace selectest {

__extension__ typedef __int128 int128_t;

/// Finite search grid for the sup statistics. A box is a choice of two
/// cutpoints a < b in every covariate, read as the open interval (c_a, c_b).
/// A propensity interval is a pair of cutpoints l < m.
struct GridSpec {
  std::vector<double> tau_grid;
  std::vector<std::vector<double>> x_cutpoints;
  std::vector<double> p_cutpoints;
  std::size_t max_cells = 200000;
  /// Boxes vary one covariate at a time (others span the full range).
  bool marginal = false;

  std::size_t n_boxes() const;
  std::size_t n_intervals() const;
  /// Number of (box, interval) cells per tau.
  std::size_t n_cells() const { return n_boxes() * n_intervals(); }
  /// Throws ConfigError unless every cutpoint list is strictly increasing
  /// with at least two entries.
  void validate() const;
};

/// Cutpoints {just below the minimum, the nine deciles, just above the
/// maximum} with duplicates removed. Fewer than two distinct values give
/// the two points bracketing the single value.
std::vector<double> default_cutpoints(std::vector<double> values);

/// Decile grid over the selected rows with finite phat. Switches to
/// marginal boxes when the full product exceeds max_cells.
GridSpec build_default_grid(const Dataset& data, std::span<const double> phat,
                            std::span<const double> tau_grid, std::size_t max_cells = 200000);

/// Maps doubles to int64 on a common binary scale 2^exponent so that sums
/// are exact and independent of summation order.
class FixedPoint {
 public:
  /// Scale for values bounded by max_abs in absolute value.
  static FixedPoint for_bound(double max_abs);

  int exponent() const noexcept { return exponent_; }
  std::int64_t quantize(double v) const;
  double to_double(int128_t v) const;

 private:
  int exponent_ = 0;
};

/// Location of a grid cell.
struct CellLocation {
  std::vector<double> x_lower;
  std::vector<double> x_upper;
  double p_lower = 0.0;
  double p_upper = 0.0;
};

struct SupCell {
  int128_t value = 0;
  std::vector<std::size_t> box_lower;
  std::vector<std::size_t> box_upper;
  std::size_t l = 0;
  std::size_t m = 0;
  bool found = false;
};

/// Computes max over boxes and cutpoint pairs l < m of |A_box[m] - B_box[l]|
/// where A_box[l] = sum over rows in the box of a[row, l] (same for B).
/// Box sums come from prefix tables over cutpoint atoms, so each evaluation
/// costs O(rows * L + cells).
class BoxSweep {
 public:
  /// `rows` index into `x`; rows outside the outermost cutpoints never fall
  /// in a box.
  BoxSweep(const GridSpec& grid, const Matrix& x, std::vector<std::size_t> rows);

  const std::vector<std::size_t>& rows() const noexcept { return rows_; }
  std::size_t n_cut() const noexcept { return n_cut_; }

  /// `a` and `b` are rows() x n_cut() row-major; empty `b` means b = a.
  SupCell sup(std::span<const std::int64_t> a, std::span<const std::int64_t> b = {}) const;

  CellLocation locate(const SupCell& cell) const;

 private:
  void sweep_full(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                  SupCell& best) const;
  void sweep_marginal(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                      SupCell& best) const;

  GridSpec grid_;
  std::vector<std::size_t> rows_;
  std::size_t n_cut_;
  std::size_t dim_;
  /// Atom coordinate per row and dimension (-1 when outside).
  std::vector<std::ptrdiff_t> atoms_;
};

/// Position of v among sorted cutpoints: 2k when v == c_k, 2k + 1 when
/// c_k < v < c_{k+1}, -1 outside [c_0, c_last].
std::ptrdiff_t atom_of(std::span<const double> cutpoints, double v);

}  // namespace selectest
