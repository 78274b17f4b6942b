#include "selectest/pipeline.hpp"

#include <cmath>
#include <string>

#include "selectest/errors.hpp"

namespace selectest {

std::vector<double> default_tau_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

PreparedSample prepare_sample(const Dataset& data, double trim_tail, const PropensityOptions& opts,
                              RngStream cv_stream, const KernelSpec& kernel, unsigned threads) {
  data.validate();
  PreparedSample out;
  std::vector<double> phat;
  if (!opts.oracle_p.empty()) {
    if (opts.oracle_p.size() != data.n()) {
      throw ConfigError("propensity", "oracle propensity has " + std::to_string(opts.oracle_p.size()) +
                                          " entries for " + std::to_string(data.n()) + " rows");
    }
    for (double p : opts.oracle_p) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("propensity", "oracle propensity outside [0,1]");
    }
    phat = opts.oracle_p;
    out.oracle = true;
  } else {
    std::vector<double> h = opts.h_z;
    std::vector<double> lam = opts.lambda;
    if (h.size() != data.zc.cols || lam.size() != data.zd.cols) {
      if (!h.empty() || !lam.empty()) {
        throw ConfigError("propensity", "fixed propensity bandwidths need one h per continuous and "
                                        "one lambda per discrete instrument");
      }
      auto cv_opts = opts.cv;
      cv_opts.kernel = kernel;
      cv_opts.threads = threads;
      const auto bw = cv_bandwidth_propensity(data, cv_opts, cv_stream);
      h = bw.h_z;
      lam = bw.lambda;
      out.cv_reps_used = bw.reps_used;
      out.cv_reps_dropped = bw.reps_dropped;
    }
    DiscreteKernelSpec dk{lam};
    const auto fit = fit_propensity(data, h, dk, false, kernel);
    phat = fit.phat;
    out.h_z = h;
    out.lambda = lam;
  }

  const auto keep = trim_rows(data, trim_tail);
  out.n_trimmed = data.n() - keep.size();
  out.data = data.subset(keep);
  out.phat.reserve(keep.size());
  for (auto i : keep) out.phat.push_back(phat[i]);
  for (std::size_t i = 0; i < out.data.n(); ++i) {
    if (out.data.s[i] && std::isnan(out.phat[i])) ++out.n_phat_undefined;
  }
  if (out.data.n_selected() == 0) {
    throw InfeasibleError("prepare", "no selected observations after trimming", 0);
  }
  return out;
}

HxChoice resolve_hx(const Dataset& data, const QuantileOptions& opts, const KernelSpec& kernel,
                    unsigned threads) {
  HxChoice choice;
  switch (opts.hx_method) {
    case HxMethod::Fixed:
      if (opts.h_x.size() != data.dx()) {
        throw ConfigError("bandwidth", "need one fixed h_x per covariate");
      }
      choice.h_x = opts.h_x;
      break;
    case HxMethod::RuleOfThumb:
      choice.h_x = rule_of_thumb_hx(data, opts.c_x);
      break;
    case HxMethod::CrossValidation: {
      CvBandwidthOptions cv;
      cv.kernel = kernel;
      cv.threads = threads;
      auto res = cv_bandwidth_undersmoothed(data, opts.r, cv);
      choice.h_x = res.h_x;
      choice.cross_validated = true;
      choice.cv = std::move(res);
      break;
    }
  }
  return choice;
}

std::vector<std::size_t> testable_rows(const Dataset& data, std::span<const double> phat) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.s[i] && std::isfinite(phat[i])) rows.push_back(i);
  }
  return rows;
}

}  // namespace selectest
