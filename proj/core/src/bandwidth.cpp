#include "selectest/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"
#include "selectest/quantreg.hpp"

namespace selectest {

nlohmann::json BandwidthPlan::to_json() const {
  nlohmann::json j;
  j["r"] = r;
  j["c_x"] = c_x;
  j["h_x"] = h_x;
  j["h_x_cross_validated"] = h_x_cross_validated;
  j["c_F"] = c_F;
  j["h_F_x"] = h_F_x;
  j["h_F_u"] = h_F_u;
  j["h_z"] = h_z;
  j["lambda"] = lambda;
  j["oracle_propensity"] = oracle_propensity;
  j["h_p"] = h_p;
  j["H"] = H;
  j["delta"] = delta;
  j["eta"] = eta;
  j["epsilon"] = epsilon;
  j["C_p"] = C_p;
  j["eta_selected"] = eta_selected;
  return j;
}

namespace {

std::vector<double> selected_column(const Dataset& data, std::size_t c) {
  std::vector<double> v;
  v.reserve(data.n_selected());
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.s[i]) v.push_back(data.x(i, c));
  }
  return v;
}

double checked_sd(std::span<const double> v, const std::string& what) {
  const double sd = sample_sd(v);
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw DataError("bandwidth", what + " has zero variance among selected observations");
  }
  return sd;
}

}  // namespace

std::vector<double> rule_of_thumb_hx(const Dataset& data, double c_x) {
  if (data.n() < 2) throw DataError("bandwidth", "need at least 2 observations");
  if (!(c_x > 0.0)) throw ConfigError("bandwidth", "scaling constant must be positive");
  const double rate = std::pow(static_cast<double>(data.n()), -1.0 / 3.0);
  std::vector<double> h(data.dx());
  for (std::size_t c = 0; c < data.dx(); ++c) {
    h[c] = c_x * checked_sd(selected_column(data, c), "covariate '" + data.x_name(c) + "'") * rate;
  }
  return h;
}

CdfBandwidths rule_of_thumb_hF(const Dataset& data, std::span<const QuantileFit> fits,
                               double c_F) {
  if (data.n() < 2) throw DataError("bandwidth", "need at least 2 observations");
  if (!(c_F > 0.0)) throw ConfigError("bandwidth", "scaling constant must be positive");
  const double rate = std::pow(static_cast<double>(data.n()), -1.0 / 6.0);
  CdfBandwidths out;
  for (std::size_t c = 0; c < data.dx(); ++c) {
    out.h_x.push_back(c_F *
                      checked_sd(selected_column(data, c), "covariate '" + data.x_name(c) + "'") *
                      rate);
  }
  for (const auto& fit : fits) {
    std::vector<double> u;
    for (double v : fit.uhat) {
      if (!std::isnan(v)) u.push_back(v);
    }
    out.h_u.push_back(c_F * checked_sd(u, "quantile residual") * rate);
  }
  return out;
}

RuleOfThumb rule_of_thumb_bandwidths(const Dataset& data, double c_x,
                                     std::span<const QuantileFit> fits, double c_F) {
  return {rule_of_thumb_hx(data, c_x), rule_of_thumb_hF(data, fits, c_F)};
}

namespace {

double cv_score(const Dataset& data, const std::vector<std::size_t>& selected,
                std::span<const double> h, const CvBandwidthOptions& opts) {
  std::vector<double> loss(selected.size(), 0.0);
  bool failed = false;
  parallel_for(selected.size(), opts.threads, [&](std::size_t k) {
    const std::size_t i = selected[k];
    LocalQuantileOptions lo;
    lo.kernel = opts.kernel;
    lo.exclude_row = i;
    try {
      const auto fit = fit_local_poly_quantile(data, opts.tau, data.x.row(i), h, 1, lo);
      loss[k] = check_loss(data.y[i] - fit.qhat(), opts.tau);
    } catch (const InfeasibleError&) {
      loss[k] = std::numeric_limits<double>::infinity();
    }
  });
  double total = 0.0;
  for (double l : loss) {
    if (!std::isfinite(l)) failed = true;
    total += l;
  }
  return failed ? std::numeric_limits<double>::infinity()
                : total / static_cast<double>(selected.size());
}

}  // namespace

CvBandwidth cv_bandwidth_undersmoothed(const Dataset& data, int r, const CvBandwidthOptions& opts) {
  if (r <= 1) {
    throw ConfigError("cv_bandwidth", "undersmoothing cross-validation needs order r > 1");
  }
  const auto selected = data.selected_indices();
  if (selected.size() < 3) throw InfeasibleError("cv_bandwidth", "too few selected rows",
                                                 selected.size());
  std::vector<double> base(data.dx());
  const double rate = std::pow(static_cast<double>(selected.size()), -0.2);
  for (std::size_t c = 0; c < data.dx(); ++c) {
    base[c] = checked_sd(selected_column(data, c), "covariate '" + data.x_name(c) + "'") * rate;
  }

  std::vector<double> grid = opts.multipliers;
  double ratio = 0.0;
  if (grid.empty()) {
    constexpr int steps = 16;
    ratio = std::pow(16.0, 1.0 / (steps - 1));
    for (int k = 0; k < steps; ++k) grid.push_back(0.25 * std::pow(ratio, k));
  } else {
    if (!std::is_sorted(grid.begin(), grid.end()) || !(grid.front() > 0.0)) {
      throw ConfigError("cv_bandwidth", "multiplier grid must be positive and ascending");
    }
    if (grid.size() > 1) ratio = grid[1] / grid[0];
  }

  CvBandwidth result;
  auto scaled = [&](double mult) {
    std::vector<double> h(base);
    for (auto& v : h) v *= mult;
    return h;
  };
  auto score_of = [&](double mult) { return cv_score(data, selected, scaled(mult), opts); };

  std::vector<double> scores;
  for (double g : grid) scores.push_back(score_of(g));
  auto argmin = [](const std::vector<double>& s) {
    return static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
  };

  std::size_t best = argmin(scores);
  if (!std::isfinite(scores[best])) {
    throw InfeasibleError("cv_bandwidth", "every candidate bandwidth leaves some point without data",
                          selected.size());
  }
  if (grid.size() > 1 && ratio > 1.0) {
    const std::size_t steps = grid.size() - 1;
    if (best == 0) {
      std::vector<double> low, low_scores;
      for (std::size_t k = steps; k >= 1; --k) {
        const double g = grid.front() * std::pow(ratio, -static_cast<double>(k));
        low.push_back(g);
        low_scores.push_back(score_of(g));
      }
      grid.insert(grid.begin(), low.begin(), low.end());
      scores.insert(scores.begin(), low_scores.begin(), low_scores.end());
      result.widened = true;
      best = argmin(scores);
      if (best == 0) {
        throw DataError("cv_bandwidth",
                        "cross-validation curve still decreasing at the smallest bandwidth");
      }
    } else if (best == grid.size() - 1) {
      const double top = grid.back();
      for (std::size_t k = 1; k <= steps; ++k) {
        const double g = top * std::pow(ratio, static_cast<double>(k));
        grid.push_back(g);
        scores.push_back(score_of(g));
      }
      result.widened = true;
      best = argmin(scores);
      result.at_upper_edge = best == grid.size() - 1;
    }
  }
  result.multiplier = grid[best];
  result.h_x = scaled(grid[best]);
  result.grid = std::move(grid);
  result.scores = std::move(scores);
  return result;
}

}  // namespace selectest
