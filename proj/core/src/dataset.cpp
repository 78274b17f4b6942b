#include "selectest/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "selectest/errors.hpp"

namespace selectest {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

std::size_t Dataset::n_selected() const noexcept {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), std::uint8_t{1}));
}

std::vector<std::size_t> Dataset::selected_indices() const {
  std::vector<std::size_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 1) out.push_back(i);
  }
  return out;
}

std::string Dataset::x_name(std::size_t j) const {
  if (j < x_names.size() && !x_names[j].empty()) return x_names[j];
  return "x" + std::to_string(j);
}

void Dataset::validate() const {
  const std::size_t rows = n();
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw DataError("dataset", msg);
  };
  require(y.size() == rows, "y has " + std::to_string(y.size()) + " rows, s has " +
                                std::to_string(rows));
  require(x.rows == rows, "x has " + std::to_string(x.rows) + " rows, expected " +
                              std::to_string(rows));
  require(x.cols >= 1, "at least one continuous covariate is required");
  require(x.values.size() == x.rows * x.cols, "x storage size mismatch");
  require(zc.cols == 0 || zc.rows == rows, "zc row count mismatch");
  require(zd.cols == 0 || zd.rows == rows, "zd row count mismatch");
  require(zc.cols + zd.cols >= 1, "at least one instrument column (zc or zd) is required");
  for (std::size_t i = 0; i < rows; ++i) {
    require(s[i] == 0 || s[i] == 1, "selection indicator at row " + std::to_string(i) +
                                        " is not binary");
    if (s[i] == 1) {
      require(std::isfinite(y[i]), "outcome missing or non-finite at selected row " +
                                       std::to_string(i));
    }
    for (std::size_t j = 0; j < x.cols; ++j) {
      require(std::isfinite(x(i, j)), "non-finite covariate " + x_name(j) + " at row " +
                                          std::to_string(i));
    }
    for (std::size_t j = 0; j < zc.cols; ++j) {
      require(std::isfinite(zc(i, j)), "non-finite instrument at row " + std::to_string(i));
    }
  }
  // Exclusion restriction: some instrument must differ from every x column.
  bool excluded = zd.cols > 0;
  for (std::size_t c = 0; c < zc.cols && !excluded; ++c) {
    bool matches_some_x = false;
    for (std::size_t j = 0; j < x.cols && !matches_some_x; ++j) {
      bool equal = true;
      for (std::size_t i = 0; i < rows && equal; ++i) equal = zc(i, c) == x(i, j);
      matches_some_x = equal;
    }
    excluded = !matches_some_x;
  }
  require(excluded, "exclusion restriction violated: every instrument duplicates a covariate");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x_names = x_names;
  out.zc_names = zc_names;
  out.zd_names = zd_names;
  out.y.reserve(rows.size());
  out.s.reserve(rows.size());
  out.x = Matrix(rows.size(), x.cols);
  out.zc = Matrix(zc.cols ? rows.size() : 0, zc.cols);
  out.zd = CategoryMatrix(zd.cols ? rows.size() : 0, zd.cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    out.y.push_back(y[i]);
    out.s.push_back(s[i]);
    for (std::size_t j = 0; j < x.cols; ++j) out.x(k, j) = x(i, j);
    for (std::size_t j = 0; j < zc.cols; ++j) out.zc(k, j) = zc(i, j);
    for (std::size_t j = 0; j < zd.cols; ++j) out.zd(k, j) = zd(i, j);
  }
  return out;
}

std::vector<std::size_t> trim_rows(const Dataset& data, double tail) {
  if (!(tail >= 0.0 && tail < 0.5)) {
    throw ConfigError("trim_rows", "tail fraction must lie in [0, 0.5)");
  }
  std::vector<std::size_t> keep(data.n());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  if (tail == 0.0) return keep;

  const auto selected = data.selected_indices();
  if (selected.empty()) return keep;
  std::vector<double> lo(data.dx()), hi(data.dx());
  for (std::size_t j = 0; j < data.dx(); ++j) {
    std::vector<double> xs;
    xs.reserve(selected.size());
    for (auto i : selected) xs.push_back(data.x(i, j));
    lo[j] = empirical_quantile(xs, tail);
    hi[j] = empirical_quantile(std::move(xs), 1.0 - tail);
  }
  std::erase_if(keep, [&](std::size_t i) {
    for (std::size_t j = 0; j < data.dx(); ++j) {
      if (data.x(i, j) < lo[j] || data.x(i, j) > hi[j]) return true;
    }
    return false;
  });
  return keep;
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double empirical_quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw DataError("empirical_quantile", "empty sample");
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace selectest
