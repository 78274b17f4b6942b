#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/bandwidth.hpp"
#include "selectest/dataset.hpp"
#include "selectest/estimators.hpp"
#include "selectest/rng.hpp"

namespace selectest {

/// Where the propensity score comes from: a known vector, fixed
/// bandwidths, or cross-validation (the default).
struct PropensityOptions {
  std::vector<double> oracle_p;
  std::vector<double> h_z;
  std::vector<double> lambda;
  PropensityCvOptions cv{};
};

enum class HxMethod { RuleOfThumb, CrossValidation, Fixed };

struct QuantileOptions {
  int r = 3;
  HxMethod hx_method = HxMethod::RuleOfThumb;
  double c_x = 4.0;
  std::vector<double> h_x;
  double c_F = 2.2;
};

std::vector<double> default_tau_grid();

/// Data after propensity estimation and trimming.
struct PreparedSample {
  Dataset data;
  std::vector<double> phat;
  std::size_t n_trimmed = 0;
  std::size_t n_phat_undefined = 0;
  bool oracle = false;
  std::vector<double> h_z;
  std::vector<double> lambda;
  std::size_t cv_reps_used = 0;
  std::size_t cv_reps_dropped = 0;
};

/// Propensity scores on the full sample (oracle, fixed bandwidths or
/// cross-validated with `cv_stream`), then tail trimming of x.
PreparedSample prepare_sample(const Dataset& data, double trim_tail, const PropensityOptions& opts,
                              RngStream cv_stream, const KernelSpec& kernel = {},
                              unsigned threads = 1);

struct HxChoice {
  std::vector<double> h_x;
  bool cross_validated = false;
  std::optional<CvBandwidth> cv;
};

HxChoice resolve_hx(const Dataset& data, const QuantileOptions& opts, const KernelSpec& kernel,
                    unsigned threads);

/// Rows that are selected and have a defined propensity score.
std::vector<std::size_t> testable_rows(const Dataset& data, std::span<const double> phat);

}  // namespace selectest
