#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace selectest {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const;
};

/// Dense row-major matrix of category codes.
struct CategoryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> values;

  CategoryMatrix() = default;
  CategoryMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0) {}

  int& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  int operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const int> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// One observation per row: outcome y (observed iff s = 1), continuous
/// covariates x, continuous instruments zc, discrete instruments zd, and the
/// selection indicator s. zc may repeat columns of x; at least one instrument
/// must be excluded from x.
struct Dataset {
  std::vector<double> y;
  Matrix x;
  Matrix zc;
  CategoryMatrix zd;
  std::vector<std::uint8_t> s;

  std::vector<std::string> x_names;
  std::vector<std::string> zc_names;
  std::vector<std::string> zd_names;

  std::size_t n() const noexcept { return s.size(); }
  std::size_t dx() const noexcept { return x.cols; }
  std::size_t n_selected() const noexcept;
  std::vector<std::size_t> selected_indices() const;

  /// Checks every structural invariant; throws DataError naming the problem.
  void validate() const;

  /// Rows `rows` (in the given order) as a new dataset.
  Dataset subset(std::span<const std::size_t> rows) const;

  std::string x_name(std::size_t j) const;
};

/// Rows to keep after trimming `tail` of the selected sample's x distribution
/// in each tail, coordinate by coordinate. Unselected rows are trimmed with the
/// same bounds. tail = 0 keeps every row.
std::vector<std::size_t> trim_rows(const Dataset& data, double tail);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> v);

/// Type-7 (linear interpolation) empirical quantile of an unsorted sample.
double empirical_quantile(std::vector<double> v, double prob);

}  // namespace selectest
