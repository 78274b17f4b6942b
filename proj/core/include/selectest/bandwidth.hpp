#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/dataset.hpp"
#include "selectest/estimators.hpp"
#include "selectest/kernels.hpp"

namespace selectest {

/// Every tuning parameter a run actually used.
struct BandwidthPlan {
  int r = 3;
  double c_x = 4.0;
  std::vector<double> h_x;
  bool h_x_cross_validated = false;

  /// Conditional-CDF bandwidths: covariate part, then one residual
  /// bandwidth per tau.
  double c_F = 2.2;
  std::vector<double> h_F_x;
  std::vector<double> h_F_u;

  std::vector<double> h_z;
  std::vector<double> lambda;
  bool oracle_propensity = false;

  double h_p = 0.0;
  double H = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double epsilon = 0.1;
  double C_p = 1.0;
  bool eta_selected = false;

  nlohmann::json to_json() const;
};

/// h_x,j = c_x sd(x_j) n^{-1/3} with the sd over selected rows and n all rows.
std::vector<double> rule_of_thumb_hx(const Dataset& data, double c_x);

struct CdfBandwidths {
  std::vector<double> h_x;
  /// One per fit.
  std::vector<double> h_u;
};

/// h_F = c_F sd(.) n^{-1/6}, applied to each covariate and to the residuals
/// of each quantile fit separately.
CdfBandwidths rule_of_thumb_hF(const Dataset& data, std::span<const QuantileFit> fits,
                               double c_F = 2.2);

struct RuleOfThumb {
  std::vector<double> h_x;
  CdfBandwidths h_F;
};

RuleOfThumb rule_of_thumb_bandwidths(const Dataset& data, double c_x,
                                     std::span<const QuantileFit> fits, double c_F = 2.2);

struct CvBandwidthOptions {
  double tau = 0.5;
  /// Multipliers of sd(x_j) n^{-1/5}. Empty: 16 geometric steps over [1/4, 4].
  std::vector<double> multipliers;
  KernelSpec kernel{};
  unsigned threads = 1;
};

struct CvBandwidth {
  std::vector<double> h_x;
  double multiplier = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;
  bool widened = false;
  bool at_upper_edge = false;
};

/// Leave-one-out check-loss cross-validation of a local linear quantile fit,
/// reused for an order-r estimator (r > 1) so that it undersmooths. A minimum
/// on a grid edge widens the grid once in that direction. A minimum still on
/// the upper edge is returned with `at_upper_edge`; on the lower edge it is
/// an error.
CvBandwidth cv_bandwidth_undersmoothed(const Dataset& data, int r,
                                       const CvBandwidthOptions& opts = {});

}  // namespace selectest
