#include "selectest/meantest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selectest/bandwidth.hpp"
#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"

namespace selectest {

std::string to_string(Multiplier m) {
  return m == Multiplier::Rademacher ? "rademacher" : "mammen";
}

Multiplier multiplier_from_string(std::string_view name) {
  if (name == "rademacher") return Multiplier::Rademacher;
  if (name == "mammen") return Multiplier::Mammen;
  throw ConfigError("multiplier", "unknown multiplier '" + std::string(name) + "'");
}

std::string to_string(ResidualScaling r) {
  return r == ResidualScaling::None ? "none" : "leverage";
}

ResidualScaling residual_scaling_from_string(std::string_view name) {
  if (name == "none") return ResidualScaling::None;
  if (name == "leverage") return ResidualScaling::Leverage;
  throw ConfigError("residual_scaling", "unknown residual scaling '" + std::string(name) + "'");
}

std::vector<double> draw_multipliers(RngStream stream, std::size_t n, Multiplier kind) {
  std::vector<double> v(n);
  const double root5 = std::sqrt(5.0);
  const double p_low = (root5 + 1.0) / (2.0 * root5);
  for (auto& e : v) {
    const double u = stream.uniform();
    if (kind == Multiplier::Rademacher) {
      e = u < 0.5 ? -1.0 : 1.0;
    } else {
      e = u < p_low ? -(root5 - 1.0) / 2.0 : (root5 + 1.0) / 2.0;
    }
  }
  return v;
}

namespace {

SupCell mean_sup(const BoxSweep& sweep, std::span<const double> phat, const GridSpec& grid,
                 std::span<const double> terms, FixedPoint& fp) {
  const auto& rows = sweep.rows();
  const std::size_t L = grid.p_cutpoints.size();
  double bound = 0.0;
  for (double t : terms) bound = std::max(bound, std::abs(t));
  fp = FixedPoint::for_bound(bound);
  std::vector<std::int64_t> a(rows.size() * L), b(rows.size() * L);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::int64_t q = fp.quantize(terms[r]);
    const double p = phat[rows[r]];
    for (std::size_t l = 0; l < L; ++l) {
      a[r * L + l] = p <= grid.p_cutpoints[l] ? q : 0;
      b[r * L + l] = p < grid.p_cutpoints[l] ? q : 0;
    }
  }
  return sweep.sup(a, b);
}

}  // namespace

SupStatistic statistic_z1m(const Dataset& data, std::span<const double> mhat,
                           std::span<const double> fhat, std::span<const double> phat,
                           const GridSpec& grid) {
  if (mhat.size() != data.n() || fhat.size() != data.n() || phat.size() != data.n()) {
    throw ConfigError("statistic_z1m", "fitted vectors must have one entry per row");
  }
  const auto rows = testable_rows(data, phat);
  if (rows.empty()) throw InfeasibleError("statistic_z1m", "empty selected sample", 0);
  const BoxSweep sweep(grid, data.x, rows);
  std::vector<double> terms(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    terms[r] = (data.y[i] - mhat[i]) * fhat[i];
    if (!std::isfinite(terms[r])) throw DataError("statistic_z1m", "undefined mean fit at a selected row");
  }
  FixedPoint fp;
  const SupCell cell = mean_sup(sweep, phat, grid, terms, fp);
  SupStatistic out;
  out.statistic = fp.to_double(cell.value) / std::sqrt(static_cast<double>(data.n()));
  if (cell.found) out.argmax = sweep.locate(cell);
  return out;
}

double bootstrap_z1m_draw(const Dataset& data, const NwSmoother& smoother,
                          std::span<const double> mhat, std::span<const double> phat,
                          const GridSpec& grid, std::span<const double> multipliers,
                          ResidualScaling scaling) {
  if (multipliers.size() != data.n()) throw ConfigError("bootstrap_z1m", "need one multiplier per row");
  std::vector<double> ystar(data.n(), 0.0);
  const auto& rows = smoother.rows();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    double e = data.y[i] - mhat[i];
    if (scaling == ResidualScaling::Leverage) e /= smoother.residual_scale()[k];
    ystar[i] = mhat[i] + multipliers[i] * e;
  }
  const auto mstar = smoother.fit(ystar);
  std::vector<double> mstar_row(data.n(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> fhat_row(data.n(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < smoother.rows().size(); ++k) {
    mstar_row[smoother.rows()[k]] = mstar[k];
    fhat_row[smoother.rows()[k]] = smoother.fhat()[k];
  }
  const auto testable = testable_rows(data, phat);
  if (testable.empty()) throw InfeasibleError("bootstrap_z1m", "empty selected sample", 0);
  const BoxSweep sweep(grid, data.x, testable);
  std::vector<double> terms(testable.size());
  for (std::size_t r = 0; r < testable.size(); ++r) {
    const std::size_t i = testable[r];
    terms[r] = (ystar[i] - mstar_row[i]) * fhat_row[i];
  }
  FixedPoint fp;
  const SupCell cell = mean_sup(sweep, phat, grid, terms, fp);
  return fp.to_double(cell.value) / std::sqrt(static_cast<double>(data.n()));
}

std::vector<double> bootstrap_z1m(const Dataset& data, const NwSmoother& smoother,
                                  std::span<const double> mhat, std::span<const double> phat,
                                  const GridSpec& grid, std::size_t R, Multiplier kind,
                                  RngStream stream, unsigned threads, ResidualScaling scaling) {
  if (R < 1) throw ConfigError("bootstrap_z1m", "need at least one bootstrap replication");
  std::vector<double> draws(R);
  parallel_for(R, threads, [&](std::size_t r) {
    const auto v = draw_multipliers(stream.child(r), data.n(), kind);
    draws[r] = bootstrap_z1m_draw(data, smoother, mhat, phat, grid, v, scaling);
  });
  return draws;
}

MeanTestProblem::MeanTestProblem(const Dataset& data, const MeanTestConfig& config,
                                 RngStream stream)
    : config_(config) {
  try {
    sample_ = prepare_sample(data, config.trim_tail, config.propensity, stream.child(2),
                             config.kernel, config.threads);
    const Dataset& d = sample_.data;
    if (!config.h_x.empty()) {
      if (config.h_x.size() != d.dx()) throw ConfigError("meantest", "need one h_x per covariate");
      h_x_ = config.h_x;
    } else {
      h_x_ = rule_of_thumb_hx(d, config.c_x);
    }
    smoother_ = std::make_shared<NwSmoother>(d, h_x_, config.kernel);
    const auto m = smoother_->fit(d.y);
    mhat_.assign(d.n(), std::numeric_limits<double>::quiet_NaN());
    fhat_.assign(d.n(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < smoother_->rows().size(); ++k) {
      mhat_[smoother_->rows()[k]] = m[k];
      fhat_[smoother_->rows()[k]] = smoother_->fhat()[k];
    }
    grid_ = build_default_grid(d, sample_.phat, {}, config.max_cells);
    statistic_ = statistic_z1m(d, mhat_, fhat_, sample_.phat, grid_);
  } catch (const Error& e) {
    rethrow_with_stage(e, "meantest");
  }
}

double MeanTestProblem::bootstrap_draw(RngStream stream) const {
  const auto v = draw_multipliers(stream, sample_.data.n(), config_.multiplier);
  return bootstrap_z1m_draw(sample_.data, *smoother_, mhat_, sample_.phat, grid_, v,
                            config_.residual_scaling);
}

std::vector<double> MeanTestProblem::bootstrap(std::size_t R, RngStream stream,
                                               unsigned threads) const {
  return bootstrap_z1m(sample_.data, *smoother_, mhat_, sample_.phat, grid_, R,
                       config_.multiplier, stream, threads, config_.residual_scaling);
}

nlohmann::json MeanTestProblem::diagnostics() const {
  nlohmann::json j;
  j["n_trimmed"] = sample_.n_trimmed;
  j["n_phat_undefined"] = sample_.n_phat_undefined;
  j["grid"] = {{"n_x_cutpoints", nlohmann::json::array()},
               {"n_p_cutpoints", grid_.p_cutpoints.size()},
               {"n_boxes", grid_.n_boxes()},
               {"n_intervals", grid_.n_intervals()},
               {"marginal", grid_.marginal}};
  for (const auto& c : grid_.x_cutpoints) j["grid"]["n_x_cutpoints"].push_back(c.size());
  if (!sample_.oracle) {
    j["propensity_cv_reps_used"] = sample_.cv_reps_used;
    j["propensity_cv_reps_dropped"] = sample_.cv_reps_dropped;
  }
  return j;
}

nlohmann::json MeanTestProblem::config_echo() const {
  nlohmann::json j;
  j["R"] = config_.R;
  j["alphas"] = config_.alphas;
  j["trim_tail"] = config_.trim_tail;
  j["c_x"] = config_.c_x;
  j["h_x"] = h_x_;
  j["h_z"] = sample_.h_z;
  j["lambda"] = sample_.lambda;
  j["oracle_propensity"] = sample_.oracle;
  j["multiplier"] = to_string(config_.multiplier);
  j["residual_scaling"] = to_string(config_.residual_scaling);
  j["max_cells"] = config_.max_cells;
  j["kernel"] = to_string(config_.kernel.family);
  return j;
}

TestReport run_meantest(const Dataset& data, const MeanTestConfig& config, RngStream stream) {
  validate_alphas(config.alphas);
  if (config.R < 1) throw ConfigError("meantest", "need at least one bootstrap replication");
  const MeanTestProblem problem(data, config, stream);
  TestReport report;
  report.test = "meantest";
  report.statistic = problem.statistic().statistic;
  report.argmax = problem.statistic().argmax;
  try {
    report.boot_draws = problem.bootstrap(config.R, stream.child(1), config.threads);
  } catch (const Error& e) {
    rethrow_with_stage(e, "meantest");
  }
  report.n = problem.sample().data.n();
  report.n_selected = problem.sample().data.n_selected();
  report.diagnostics = problem.diagnostics();
  report.config_echo = problem.config_echo();
  report.seed = stream.seed();
  finalize_report(report, config.alphas);
  return report;
}

}  // namespace selectest
