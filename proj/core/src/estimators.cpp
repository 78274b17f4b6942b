#include "selectest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"
#include "selectest/quantreg.hpp"

namespace selectest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// prod_k K((a_k - b_k) / h_k), stopping at the first zero factor.
inline double kernel_weight(const KernelSpec& kernel, const double* a, const double* b,
                            const double* h, std::size_t d) {
  double w = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    w *= kernel((a[k] - b[k]) / h[k]);
    if (w == 0.0) return 0.0;
  }
  return w;
}

void check_bandwidths(std::span<const double> h, std::size_t expected, const char* stage,
                      const char* what) {
  if (h.size() != expected) {
    throw ConfigError(stage, std::string(what) + " needs " + std::to_string(expected) +
                                 " bandwidths, got " + std::to_string(h.size()));
  }
  for (double v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(stage, std::string(what) + " bandwidths must be positive");
    }
  }
}

std::string format_point(std::span<const double> x0) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < x0.size(); ++k) os << (k ? ", " : "") << x0[k];
  os << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Propensity

PropensityFit fit_propensity(const Dataset& data, std::span<const double> h_z,
                             const DiscreteKernelSpec& lambda, bool leave_one_out,
                             const KernelSpec& kernel) {
  const std::size_t n = data.n();
  const std::size_t dzc = data.zc.cols;
  const std::size_t dzd = data.zd.cols;
  if (n < 2) throw DataError("propensity", "need at least 2 observations");
  check_bandwidths(h_z, dzc, "propensity", "continuous instruments");
  if (lambda.lambda.size() != dzd) {
    throw ConfigError("propensity", "need one lambda per discrete instrument");
  }
  for (double l : lambda.lambda) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("propensity", "lambda must lie in [0,1]");
  }

  // Sorting on the first continuous instrument limits each evaluation to
  // rows inside the kernel window.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> key(n, 0.0);
  if (dzc > 0) {
    for (std::size_t i = 0; i < n; ++i) key[i] = data.zc(i, 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  }
  std::vector<double> sorted_key(n);
  for (std::size_t k = 0; k < n; ++k) sorted_key[k] = key[order[k]];

  PropensityFit fit;
  fit.phat.assign(n, kNaN);
  fit.h_z.assign(h_z.begin(), h_z.end());
  fit.lambda = lambda.lambda;

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = 0, hi = n;
    if (dzc > 0) {
      lo = static_cast<std::size_t>(
          std::lower_bound(sorted_key.begin(), sorted_key.end(), key[i] - h_z[0]) -
          sorted_key.begin());
      hi = static_cast<std::size_t>(
          std::upper_bound(sorted_key.begin(), sorted_key.end(), key[i] + h_z[0]) -
          sorted_key.begin());
    }
    double num = 0.0, den = 0.0;
    const double* zi = dzc ? &data.zc.values[i * dzc] : nullptr;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t j = order[k];
      if (leave_one_out && j == i) continue;
      double w = dzc ? kernel_weight(kernel, &data.zc.values[j * dzc], zi, h_z.data(), dzc) : 1.0;
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < dzd; ++c) {
        if (data.zd(i, c) != data.zd(j, c)) w *= lambda.lambda[c];
      }
      if (w == 0.0) continue;
      den += w;
      if (data.s[j]) num += w;
    }
    if (den > 0.0) {
      fit.phat[i] = std::clamp(num / den, 0.0, 1.0);
    } else {
      ++fit.n_undefined;
    }
  }
  return fit;
}

double propensity_cv_objective(const Dataset& data, std::span<const double> h_z,
                               const DiscreteKernelSpec& lambda, const KernelSpec& kernel) {
  const auto fit = fit_propensity(data, h_z, lambda, true, kernel);
  const double sbar =
      static_cast<double>(data.n_selected()) / static_cast<double>(data.n());
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double s = data.s[i] ? 1.0 : 0.0;
    const double p = std::isnan(fit.phat[i]) ? sbar : fit.phat[i];
    total += (s - p) * (s - p);
  }
  return total / static_cast<double>(data.n());
}

namespace {

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid{0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  return grid;
}
constexpr int kHMin = -8;
constexpr int kHMax = 6;

struct CvOutcome {
  bool ok = false;
  std::vector<double> h_z;
  std::vector<double> lambda;
};

CvOutcome cv_propensity_once(const Dataset& sub, const PropensityCvOptions& opts) {
  const std::size_t dzc = sub.zc.cols;
  const std::size_t dzd = sub.zd.cols;
  const double m = static_cast<double>(sub.n());
  std::vector<double> base(dzc);
  for (std::size_t c = 0; c < dzc; ++c) {
    const double sd = sample_sd(sub.zc.column(c));
    if (!(sd > 0.0)) {
      throw DataError("propensity_cv", "continuous instrument '" +
                                           (c < sub.zc_names.size() ? sub.zc_names[c]
                                                                    : std::to_string(c)) +
                                           "' has zero variance");
    }
    base[c] = sd * std::pow(m, -0.2);
  }
  // State: h exponent per continuous coordinate, lambda index per discrete one.
  std::vector<int> state(dzc + dzd);
  for (std::size_t c = 0; c < dzc; ++c) state[c] = 0;
  for (std::size_t c = 0; c < dzd; ++c) state[dzc + c] = 6;

  std::map<std::vector<int>, double> cache;
  auto evaluate = [&](const std::vector<int>& st) {
    auto it = cache.find(st);
    if (it != cache.end()) return it->second;
    std::vector<double> h(dzc);
    for (std::size_t c = 0; c < dzc; ++c) h[c] = base[c] * std::pow(2.0, 0.5 * st[c]);
    DiscreteKernelSpec lam;
    for (std::size_t c = 0; c < dzd; ++c) lam.lambda.push_back(lambda_grid()[static_cast<std::size_t>(st[dzc + c])]);
    const double v = propensity_cv_objective(sub, h, lam, opts.kernel);
    cache.emplace(st, v);
    return v;
  };

  CvOutcome out;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t c = 0; c < state.size(); ++c) {
      const int lo = c < dzc ? kHMin : 0;
      const int hi = c < dzc ? kHMax : static_cast<int>(lambda_grid().size()) - 1;
      int best_v = state[c];
      double best = evaluate(state);
      for (int v = lo; v <= hi; ++v) {
        auto trial = state;
        trial[c] = v;
        const double f = evaluate(trial);
        if (f < best) {
          best = f;
          best_v = v;
        }
      }
      if (best_v != state[c]) {
        state[c] = best_v;
        changed = true;
      }
    }
    if (!changed) {
      out.ok = true;
      break;
    }
  }
  if (!out.ok) return out;
  for (std::size_t c = 0; c < dzc; ++c) out.h_z.push_back(base[c] * std::pow(2.0, 0.5 * state[c]));
  for (std::size_t c = 0; c < dzd; ++c) {
    out.lambda.push_back(lambda_grid()[static_cast<std::size_t>(state[dzc + c])]);
  }
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

PropensityBandwidth cv_bandwidth_propensity(const Dataset& data, const PropensityCvOptions& opts,
                                            RngStream stream) {
  const std::size_t n = data.n();
  if (n < 3) throw DataError("propensity_cv", "need at least 3 observations");
  if (opts.reps == 0 || opts.subset_size < 3) {
    throw ConfigError("propensity_cv", "reps and subset size must be positive");
  }
  const bool full = opts.subset_size >= n;
  const std::size_t reps = full ? 1 : opts.reps;
  const std::size_t m = full ? n : opts.subset_size;

  std::vector<CvOutcome> outcomes(reps);
  parallel_for(reps, opts.threads, [&](std::size_t rep) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (!full) {
      RngStream rng = stream.child(rep);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
        std::swap(rows[k], rows[pick]);
      }
      rows.resize(m);
      std::sort(rows.begin(), rows.end());
    }
    try {
      outcomes[rep] = cv_propensity_once(full ? data : data.subset(rows), opts);
    } catch (const Error&) {
      outcomes[rep] = CvOutcome{};
    }
  });

  PropensityBandwidth result;
  std::vector<std::vector<double>> hs(data.zc.cols), ls(data.zd.cols);
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++result.reps_dropped;
      continue;
    }
    ++result.reps_used;
    for (std::size_t c = 0; c < o.h_z.size(); ++c) hs[c].push_back(o.h_z[c]);
    for (std::size_t c = 0; c < o.lambda.size(); ++c) ls[c].push_back(o.lambda[c]);
  }
  if (result.reps_used == 0 || 2 * result.reps_dropped > reps) {
    throw DataError("propensity_cv", std::to_string(result.reps_dropped) + " of " +
                                         std::to_string(reps) +
                                         " cross-validation replications failed");
  }
  for (auto& v : hs) result.h_z.push_back(median_of(v));
  for (auto& v : ls) result.lambda.push_back(median_of(v));
  return result;
}

// ---------------------------------------------------------------------------
// Local polynomial quantile regression

LocalQuantileFit fit_local_poly_quantile(const Dataset& data, double tau,
                                         std::span<const double> x0, std::span<const double> h_x,
                                         int r, const LocalQuantileOptions& opts) {
  const std::size_t d = data.dx();
  if (x0.size() != d) throw ConfigError("local_quantile", "evaluation point has wrong dimension");
  check_bandwidths(h_x, d, "local_quantile", "covariate");
  if (r < 0) throw ConfigError("local_quantile", "polynomial order must be nonnegative");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("local_quantile", "tau must lie in (0,1)");
  if (!opts.row_weights.empty() && opts.row_weights.size() != data.n()) {
    throw ConfigError("local_quantile", "row weights must have one entry per observation");
  }

  std::vector<std::size_t> rows;
  std::vector<double> w;
  for (std::size_t j = 0; j < data.n(); ++j) {
    if (!data.s[j]) continue;
    if (opts.exclude_row && *opts.exclude_row == j) continue;
    double wj = kernel_weight(opts.kernel, &data.x.values[j * d], x0.data(), h_x.data(), d);
    if (wj == 0.0) continue;
    if (!opts.row_weights.empty()) {
      const double extra = opts.row_weights[j];
      if (!(extra > 0.0)) continue;
      wj *= extra;
    }
    rows.push_back(j);
    w.push_back(wj);
  }
  if (rows.empty()) {
    throw InfeasibleError("local_quantile",
                          "no selected observation with positive kernel weight at x0 = " +
                              format_point(x0),
                          0);
  }

  const std::size_t m = rows.size();
  std::vector<double> y(m), u(d);
  for (std::size_t k = 0; k < m; ++k) y[k] = data.y[rows[k]];

  for (int order = r; order >= 0; --order) {
    const PolynomialBasis basis(d, order);
    const std::size_t p = basis.size();
    if (m < p) continue;
    std::vector<double> design(m * p);
    for (std::size_t k = 0; k < m; ++k) {
      const double* xj = &data.x.values[rows[k] * d];
      for (std::size_t c = 0; c < d; ++c) u[c] = (xj[c] - x0[c]) / h_x[c];
      basis.evaluate(u, std::span<double>(design.data() + k * p, p));
    }
    WeightedQuantileSolution sol;
    try {
      sol = solve_weighted_quantile(design, p, y, w, tau);
    } catch (const DataError&) {
      continue;
    }
    LocalQuantileFit fit;
    fit.order_used = order;
    fit.order_reduced = order != r;
    fit.n_eff = m;
    fit.coef = sol.coef;
    for (std::size_t t = 0; t < p; ++t) {
      const auto e = basis.exponent(t);
      double scale = 1.0;
      for (std::size_t c = 0; c < d; ++c) {
        for (int q = 0; q < e[c]; ++q) scale *= h_x[c];
      }
      fit.coef[t] /= scale;
    }
    fit.own_residual = kNaN;
    fit.own_below = kNaN;
    if (opts.own_row) {
      auto it = std::lower_bound(rows.begin(), rows.end(), *opts.own_row);
      if (it != rows.end() && *it == *opts.own_row) {
        const auto k = static_cast<std::size_t>(it - rows.begin());
        fit.own_residual = sol.residuals[k];
        fit.own_below = 1.0 - sol.rank_scores[k];
      }
    }
    return fit;
  }
  throw InfeasibleError("local_quantile",
                        "local design is degenerate at x0 = " + format_point(x0) + " (" +
                            std::to_string(m) + " weighted observations)",
                        m);
}

std::vector<QuantileFit> quantile_residuals(const Dataset& data, std::span<const double> tau_grid,
                                            std::span<const double> h_x, int r,
                                            const KernelSpec& kernel, unsigned threads) {
  if (tau_grid.empty()) throw ConfigError("quantile_residuals", "empty tau grid");
  for (double t : tau_grid) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("quantile_residuals", "tau must lie in (0,1)");
  }
  const auto selected = data.selected_indices();
  if (selected.empty()) throw InfeasibleError("quantile_residuals", "no selected observations", 0);

  std::vector<QuantileFit> fits(tau_grid.size());
  for (std::size_t t = 0; t < tau_grid.size(); ++t) {
    fits[t].tau = tau_grid[t];
    fits[t].uhat.assign(data.n(), kNaN);
    fits[t].qhat.assign(data.n(), kNaN);
    fits[t].below.assign(data.n(), kNaN);
  }
  std::vector<unsigned char> reduced(tau_grid.size() * selected.size(), 0);
  const std::size_t jobs = tau_grid.size() * selected.size();
  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t t = job / selected.size();
    const std::size_t i = selected[job % selected.size()];
    LocalQuantileOptions opts;
    opts.kernel = kernel;
    opts.own_row = i;
    const auto fit = fit_local_poly_quantile(data, tau_grid[t], data.x.row(i), h_x, r, opts);
    fits[t].uhat[i] = fit.own_residual;
    fits[t].below[i] = fit.own_below;
    fits[t].qhat[i] = fit.qhat();
    reduced[job] = fit.order_reduced ? 1 : 0;
  });
  for (std::size_t job = 0; job < jobs; ++job) {
    if (reduced[job]) ++fits[job / selected.size()].n_order_reduced;
  }
  return fits;
}

LocalQuantileFit fit_local_poly_quantile_near_one(const Dataset& data, double tau,
                                                  std::span<const double> x0,
                                                  std::span<const double> h_x, int r,
                                                  std::span<const double> phat, double delta,
                                                  double h_p, const KernelSpec& kernel) {
  if (phat.size() != data.n()) {
    throw ConfigError("near_one_quantile", "propensity vector has wrong length");
  }
  if (!(h_p > 0.0)) throw ConfigError("near_one_quantile", "h_p must be positive");
  std::vector<double> weights(data.n(), 0.0);
  std::size_t count = 0;
  const std::size_t d = data.dx();
  for (std::size_t j = 0; j < data.n(); ++j) {
    if (!data.s[j] || std::isnan(phat[j])) continue;
    weights[j] = kernel((phat[j] - delta) / h_p);
    if (weights[j] > 0.0 &&
        kernel_weight(kernel, &data.x.values[j * d], x0.data(), h_x.data(), d) > 0.0) {
      ++count;
    }
  }
  const std::size_t needed = polynomial_basis_size(d, r);
  if (count < needed) {
    throw InfeasibleError("near_one_quantile",
                          "thin set: " + std::to_string(count) +
                              " observations near the propensity boundary at x0 = " +
                              format_point(x0) + ", need " + std::to_string(needed),
                          count);
  }
  LocalQuantileOptions opts;
  opts.kernel = kernel;
  opts.row_weights = weights;
  return fit_local_poly_quantile(data, tau, x0, h_x, r, opts);
}

// ---------------------------------------------------------------------------
// Conditional CDF

std::optional<double> fit_cond_cdf(const Dataset& data, std::span<const double> uhat,
                                   std::span<const double> phat, double p, std::size_t i,
                                   std::span<const double> h_x, double h_u,
                                   const KernelSpec& kernel) {
  const std::size_t d = data.dx();
  if (i >= data.n()) throw ConfigError("cond_cdf", "row index out of range");
  if (!data.s[i]) throw ConfigError("cond_cdf", "evaluation row must be selected");
  check_bandwidths(h_x, d, "cond_cdf", "covariate");
  if (!(h_u > 0.0)) throw ConfigError("cond_cdf", "residual bandwidth must be positive");
  double num = 0.0, den = 0.0;
  const double* xi = &data.x.values[i * d];
  for (std::size_t j = 0; j < data.n(); ++j) {
    if (!data.s[j] || std::isnan(uhat[j]) || std::isnan(phat[j])) continue;
    double w = kernel(uhat[j] / h_u);
    if (w == 0.0) continue;
    w *= kernel_weight(kernel, &data.x.values[j * d], xi, h_x.data(), d);
    if (w == 0.0) continue;
    den += w;
    if (phat[j] <= p) num += w;
  }
  if (!(den > 0.0)) return std::nullopt;
  return std::clamp(num / den, 0.0, 1.0);
}

CondCdfTable cond_cdf_table(const Dataset& data, std::span<const double> uhat,
                            std::span<const double> phat, std::span<const double> cutpoints,
                            std::span<const double> h_x, double h_u, const KernelSpec& kernel) {
  const std::size_t n = data.n();
  const std::size_t d = data.dx();
  const std::size_t L = cutpoints.size();
  check_bandwidths(h_x, d, "cond_cdf", "covariate");
  if (!(h_u > 0.0)) throw ConfigError("cond_cdf", "residual bandwidth must be positive");
  if (!std::is_sorted(cutpoints.begin(), cutpoints.end())) {
    throw ConfigError("cond_cdf", "cutpoints must be sorted");
  }

  // Rows usable on the right-hand side, ordered by propensity.
  std::vector<std::size_t> rhs;
  std::vector<double> uk;
  for (std::size_t j = 0; j < n; ++j) {
    if (data.s[j] && !std::isnan(uhat[j]) && !std::isnan(phat[j])) rhs.push_back(j);
  }
  std::stable_sort(rhs.begin(), rhs.end(),
                   [&](std::size_t a, std::size_t b) { return phat[a] < phat[b]; });
  uk.reserve(rhs.size());
  for (auto j : rhs) uk.push_back(kernel(uhat[j] / h_u));

  CondCdfTable table;
  table.n = n;
  table.cutpoints.assign(cutpoints.begin(), cutpoints.end());
  table.values.assign(n * L, kNaN);
  std::vector<double> w(rhs.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!data.s[i]) continue;
    const double* xi = &data.x.values[i * d];
    double den = 0.0;
    for (std::size_t k = 0; k < rhs.size(); ++k) {
      double wk = uk[k];
      if (wk != 0.0) wk *= kernel_weight(kernel, &data.x.values[rhs[k] * d], xi, h_x.data(), d);
      w[k] = wk;
      den += wk;
    }
    if (!(den > 0.0)) {
      ++table.n_undefined;
      continue;
    }
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
      while (k < rhs.size() && phat[rhs[k]] <= cutpoints[l]) acc += w[k++];
      table.values[i * L + l] = std::clamp(acc / den, 0.0, 1.0);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Nadaraya-Watson

NwEstimate nw_mean_and_density(const Dataset& data, std::span<const double> x0,
                               std::span<const double> h, const KernelSpec& kernel) {
  const std::size_t d = data.dx();
  if (x0.size() != d) throw ConfigError("nadaraya_watson", "evaluation point has wrong dimension");
  check_bandwidths(h, d, "nadaraya_watson", "covariate");
  double hprod = 1.0;
  for (double v : h) hprod *= v;
  double dens = 0.0, num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < data.n(); ++j) {
    const double w = kernel_weight(kernel, &data.x.values[j * d], x0.data(), h.data(), d);
    if (w == 0.0) continue;
    dens += w;
    if (data.s[j]) {
      num += w * data.y[j];
      den += w;
    }
  }
  NwEstimate est;
  est.fhat = dens / (static_cast<double>(data.n()) * hprod);
  if (den > 0.0) {
    est.mhat = num / den;
    est.defined = true;
  }
  return est;
}

NwSmoother::NwSmoother(const Dataset& data, std::span<const double> h, const KernelSpec& kernel) {
  const std::size_t d = data.dx();
  check_bandwidths(h, d, "nadaraya_watson", "covariate");
  double hprod = 1.0;
  for (double v : h) hprod *= v;
  rows_ = data.selected_indices();
  fhat_.resize(rows_.size());
  offsets_.push_back(0);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const double* xi = &data.x.values[rows_[k] * d];
    double dens = 0.0;
    for (std::size_t j = 0; j < data.n(); ++j) {
      const double w = kernel_weight(kernel, &data.x.values[j * d], xi, h.data(), d);
      if (w == 0.0) continue;
      dens += w;
      if (data.s[j]) {
        neighbours_.push_back(j);
        weights_.push_back(w);
      }
    }
    fhat_[k] = dens / (static_cast<double>(data.n()) * hprod);
    offsets_.push_back(neighbours_.size());
  }
  residual_scale_.resize(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    double total = 0.0, own = 0.0, squares = 0.0;
    for (std::size_t e = offsets_[k]; e < offsets_[k + 1]; ++e) total += weights_[e];
    for (std::size_t e = offsets_[k]; e < offsets_[k + 1]; ++e) {
      const double w = weights_[e] / total;
      squares += w * w;
      if (neighbours_[e] == rows_[k]) own = w;
    }
    const double v = 1.0 - 2.0 * own + squares;
    residual_scale_[k] = v > 1e-12 ? std::sqrt(v) : 1.0;
  }
}

std::vector<double> NwSmoother::fit(std::span<const double> y) const {
  std::vector<double> m(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    double num = 0.0, den = 0.0;
    for (std::size_t e = offsets_[k]; e < offsets_[k + 1]; ++e) {
      num += weights_[e] * y[neighbours_[e]];
      den += weights_[e];
    }
    m[k] = num / den;
  }
  return m;
}

}  // namespace selectest
