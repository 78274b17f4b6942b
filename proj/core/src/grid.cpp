#include "selectest/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selectest/errors.hpp"

namespace selectest {

namespace {

std::size_t pairs(std::size_t k) { return k < 2 ? 0 : k * (k - 1) / 2; }

}  // namespace

std::size_t GridSpec::n_boxes() const {
  if (x_cutpoints.empty()) return 0;
  if (marginal) {
    std::size_t total = 0;
    for (const auto& c : x_cutpoints) total += pairs(c.size());
    return total;
  }
  std::size_t total = 1;
  for (const auto& c : x_cutpoints) total *= pairs(c.size());
  return total;
}

std::size_t GridSpec::n_intervals() const { return pairs(p_cutpoints.size()); }

void GridSpec::validate() const {
  auto strictly_increasing = [](const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (!(v[k - 1] < v[k])) return false;
    }
    return v.size() >= 2;
  };
  if (x_cutpoints.empty()) throw ConfigError("grid", "no covariate cutpoints");
  for (std::size_t j = 0; j < x_cutpoints.size(); ++j) {
    if (!strictly_increasing(x_cutpoints[j])) {
      throw ConfigError("grid", "cutpoints of covariate " + std::to_string(j) +
                                    " must be strictly increasing with at least two entries");
    }
  }
  if (!strictly_increasing(p_cutpoints)) {
    throw ConfigError("grid", "propensity cutpoints must be strictly increasing with at least two entries");
  }
  for (double t : tau_grid) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("grid", "tau must lie in (0,1)");
  }
}

std::vector<double> default_cutpoints(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) throw DataError("grid", "no finite values to build cutpoints from");
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double hi = values.back();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cuts{std::nextafter(lo, -inf)};
  if (lo < hi) {
    const double last = static_cast<double>(values.size() - 1);
    for (int k = 1; k <= 9; ++k) {
      const double pos = 0.1 * k * last;
      const auto i = static_cast<std::size_t>(std::floor(pos));
      const std::size_t j = std::min(i + 1, values.size() - 1);
      const double frac = pos - static_cast<double>(i);
      cuts.push_back(values[i] + frac * (values[j] - values[i]));
    }
  }
  cuts.push_back(std::nextafter(hi, inf));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

GridSpec build_default_grid(const Dataset& data, std::span<const double> phat,
                            std::span<const double> tau_grid, std::size_t max_cells) {
  if (phat.size() != data.n()) throw ConfigError("grid", "propensity vector has wrong length");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.s[i] && std::isfinite(phat[i])) rows.push_back(i);
  }
  if (rows.empty()) throw InfeasibleError("grid", "no selected observation with a defined propensity", 0);

  GridSpec grid;
  grid.tau_grid.assign(tau_grid.begin(), tau_grid.end());
  grid.max_cells = max_cells;
  for (std::size_t j = 0; j < data.dx(); ++j) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto i : rows) v.push_back(data.x(i, j));
    grid.x_cutpoints.push_back(default_cutpoints(std::move(v)));
  }
  std::vector<double> p;
  p.reserve(rows.size());
  for (auto i : rows) p.push_back(phat[i]);
  grid.p_cutpoints = default_cutpoints(std::move(p));

  double full = static_cast<double>(grid.n_intervals());
  for (const auto& c : grid.x_cutpoints) full *= static_cast<double>(pairs(c.size()));
  grid.marginal = full > static_cast<double>(max_cells);
  return grid;
}

FixedPoint FixedPoint::for_bound(double max_abs) {
  if (!std::isfinite(max_abs)) throw DataError("fixed_point", "non-finite term");
  FixedPoint fp;
  if (max_abs > 0.0) {
    int e = 0;
    std::frexp(max_abs, &e);
    fp.exponent_ = 52 - e;
  }
  return fp;
}

std::int64_t FixedPoint::quantize(double v) const {
  return static_cast<std::int64_t>(std::llround(std::ldexp(v, exponent_)));
}

double FixedPoint::to_double(int128_t v) const {
  return std::ldexp(static_cast<double>(v), -exponent_);
}

std::ptrdiff_t atom_of(std::span<const double> cutpoints, double v) {
  if (cutpoints.empty() || !(v >= cutpoints.front()) || !(v <= cutpoints.back())) return -1;
  const auto it = std::lower_bound(cutpoints.begin(), cutpoints.end(), v);
  const auto k = static_cast<std::ptrdiff_t>(it - cutpoints.begin());
  return *it == v ? 2 * k : 2 * k - 1;
}

BoxSweep::BoxSweep(const GridSpec& grid, const Matrix& x, std::vector<std::size_t> rows)
    : grid_(grid), rows_(std::move(rows)), n_cut_(grid.p_cutpoints.size()), dim_(grid.x_cutpoints.size()) {
  grid_.validate();
  if (x.cols != dim_) throw ConfigError("grid", "grid dimension differs from covariate count");
  atoms_.resize(rows_.size() * dim_);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t j = 0; j < dim_; ++j) {
      atoms_[r * dim_ + j] = atom_of(grid_.x_cutpoints[j], x(rows_[r], j));
    }
  }
}

namespace {

// Running-extremum sweep of one box: max over l < m of |A[m] - B[l]|.
void sweep_box(const int128_t* A, const int128_t* B, std::size_t L, SupCell& best,
               bool& improved, std::size_t& best_l, std::size_t& best_m) {
  improved = false;
  int128_t min_b = B[0], max_b = B[0];
  std::size_t min_l = 0, max_l = 0;
  for (std::size_t m = 1; m < L; ++m) {
    const int128_t up = A[m] - min_b;
    const int128_t down = max_b - A[m];
    if (up > best.value || (!best.found && up >= best.value)) {
      best.value = up;
      best.found = true;
      best_l = min_l;
      best_m = m;
      improved = true;
    }
    if (down > best.value) {
      best.value = down;
      best.found = true;
      best_l = max_l;
      best_m = m;
      improved = true;
    }
    if (B[m] < min_b) {
      min_b = B[m];
      min_l = m;
    }
    if (B[m] > max_b) {
      max_b = B[m];
      max_l = m;
    }
  }
}

}  // namespace

void BoxSweep::sweep_full(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                          SupCell& best) const {
  const std::size_t L = n_cut_;
  const bool same = b.empty();
  std::vector<std::size_t> ext(dim_), stride(dim_);
  std::size_t cells = 1;
  for (std::size_t j = dim_; j-- > 0;) {
    ext[j] = 2 * grid_.x_cutpoints[j].size();  // atoms + 1
    stride[j] = cells;
    cells *= ext[j];
  }
  std::vector<int128_t> ta(cells * L, 0), tb(same ? 0 : cells * L, 0);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    std::size_t idx = 0;
    bool inside = true;
    for (std::size_t j = 0; j < dim_; ++j) {
      const auto at = atoms_[r * dim_ + j];
      if (at < 0) {
        inside = false;
        break;
      }
      idx += static_cast<std::size_t>(at + 1) * stride[j];
    }
    if (!inside) continue;
    for (std::size_t l = 0; l < L; ++l) {
      ta[idx * L + l] += a[r * L + l];
      if (!same) tb[idx * L + l] += b[r * L + l];
    }
  }
  auto prefix = [&](std::vector<int128_t>& t) {
    for (std::size_t j = 0; j < dim_; ++j) {
      for (std::size_t idx = 0; idx < cells; ++idx) {
        if ((idx / stride[j]) % ext[j] == 0) continue;
        const std::size_t prev = idx - stride[j];
        for (std::size_t l = 0; l < L; ++l) t[idx * L + l] += t[prev * L + l];
      }
    }
  };
  prefix(ta);
  if (!same) prefix(tb);

  // Odometer over (lower, upper) cutpoint pairs in every dimension.
  std::vector<std::size_t> lo(dim_, 0), hi(dim_, 1);
  std::vector<int128_t> A(L), B(L);
  const std::size_t corners = std::size_t{1} << dim_;
  for (;;) {
    std::fill(A.begin(), A.end(), 0);
    if (!same) std::fill(B.begin(), B.end(), 0);
    for (std::size_t mask = 0; mask < corners; ++mask) {
      std::size_t idx = 0;
      int sign = 1;
      for (std::size_t j = 0; j < dim_; ++j) {
        if (mask & (std::size_t{1} << j)) {
          idx += 2 * hi[j] * stride[j];
        } else {
          idx += (2 * lo[j] + 1) * stride[j];
          sign = -sign;
        }
      }
      const int128_t* pa = &ta[idx * L];
      if (sign > 0) {
        for (std::size_t l = 0; l < L; ++l) A[l] += pa[l];
      } else {
        for (std::size_t l = 0; l < L; ++l) A[l] -= pa[l];
      }
      if (!same) {
        const int128_t* pb = &tb[idx * L];
        if (sign > 0) {
          for (std::size_t l = 0; l < L; ++l) B[l] += pb[l];
        } else {
          for (std::size_t l = 0; l < L; ++l) B[l] -= pb[l];
        }
      }
    }
    bool improved = false;
    std::size_t bl = 0, bm = 0;
    sweep_box(A.data(), same ? A.data() : B.data(), L, best, improved, bl, bm);
    if (improved) {
      best.box_lower = lo;
      best.box_upper = hi;
      best.l = bl;
      best.m = bm;
    }
    // advance
    bool done = true;
    for (std::size_t j = dim_; j-- > 0;) {
      const std::size_t K = grid_.x_cutpoints[j].size();
      if (hi[j] + 1 < K) {
        ++hi[j];
        done = false;
        break;
      }
      if (lo[j] + 2 < K) {
        ++lo[j];
        hi[j] = lo[j] + 1;
        done = false;
        break;
      }
      lo[j] = 0;
      hi[j] = 1;
    }
    if (done) return;
  }
}

void BoxSweep::sweep_marginal(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                              SupCell& best) const {
  const std::size_t L = n_cut_;
  const bool same = b.empty();
  std::vector<int128_t> A(L), B(L);
  for (std::size_t j = 0; j < dim_; ++j) {
    const std::size_t K = grid_.x_cutpoints[j].size();
    const std::size_t ext = 2 * K;
    std::vector<int128_t> ta(ext * L, 0), tb(same ? 0 : ext * L, 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      bool inside = true;
      for (std::size_t k = 0; k < dim_; ++k) {
        const auto at = atoms_[r * dim_ + k];
        const auto last = static_cast<std::ptrdiff_t>(2 * grid_.x_cutpoints[k].size() - 2);
        if (at < 0 || (k != j && (at == 0 || at == last))) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      const auto idx = static_cast<std::size_t>(atoms_[r * dim_ + j] + 1);
      for (std::size_t l = 0; l < L; ++l) {
        ta[idx * L + l] += a[r * L + l];
        if (!same) tb[idx * L + l] += b[r * L + l];
      }
    }
    for (std::size_t idx = 1; idx < ext; ++idx) {
      for (std::size_t l = 0; l < L; ++l) {
        ta[idx * L + l] += ta[(idx - 1) * L + l];
        if (!same) tb[idx * L + l] += tb[(idx - 1) * L + l];
      }
    }
    for (std::size_t lo = 0; lo + 1 < K; ++lo) {
      for (std::size_t hi = lo + 1; hi < K; ++hi) {
        const std::size_t top = 2 * hi, bottom = 2 * lo + 1;
        for (std::size_t l = 0; l < L; ++l) {
          A[l] = ta[top * L + l] - ta[bottom * L + l];
          if (!same) B[l] = tb[top * L + l] - tb[bottom * L + l];
        }
        bool improved = false;
        std::size_t bl = 0, bm = 0;
        sweep_box(A.data(), same ? A.data() : B.data(), L, best, improved, bl, bm);
        if (improved) {
          best.box_lower.assign(dim_, 0);
          best.box_upper.resize(dim_);
          for (std::size_t k = 0; k < dim_; ++k) best.box_upper[k] = grid_.x_cutpoints[k].size() - 1;
          best.box_lower[j] = lo;
          best.box_upper[j] = hi;
          best.l = bl;
          best.m = bm;
        }
      }
    }
  }
}

SupCell BoxSweep::sup(std::span<const std::int64_t> a, std::span<const std::int64_t> b) const {
  const std::size_t need = rows_.size() * n_cut_;
  if (a.size() != need || (!b.empty() && b.size() != need)) {
    throw ConfigError("grid", "term matrix has wrong size");
  }
  SupCell best;
  if (grid_.marginal) {
    sweep_marginal(a, b, best);
  } else {
    sweep_full(a, b, best);
  }
  return best;
}

CellLocation BoxSweep::locate(const SupCell& cell) const {
  CellLocation loc;
  if (!cell.found) return loc;
  for (std::size_t j = 0; j < dim_; ++j) {
    loc.x_lower.push_back(grid_.x_cutpoints[j][cell.box_lower[j]]);
    loc.x_upper.push_back(grid_.x_cutpoints[j][cell.box_upper[j]]);
  }
  loc.p_lower = grid_.p_cutpoints[cell.l];
  loc.p_upper = grid_.p_cutpoints[cell.m];
  return loc;
}

}  // namespace selectest
