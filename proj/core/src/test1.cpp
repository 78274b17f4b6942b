#include "selectest/test1.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"

namespace selectest {

SupStatistic statistic_z1(const Dataset& data, std::span<const QuantileFit> fits,
                          std::span<const double> phat, const GridSpec& grid) {
  if (phat.size() != data.n()) throw ConfigError("statistic_z1", "propensity vector has wrong length");
  if (fits.size() != grid.tau_grid.size()) {
    throw ConfigError("statistic_z1", "one quantile fit per tau is required");
  }
  const auto rows = testable_rows(data, phat);
  if (rows.empty()) throw InfeasibleError("statistic_z1", "empty selected sample", 0);
  const BoxSweep sweep(grid, data.x, rows);
  const std::size_t L = grid.p_cutpoints.size();
  const double root_n = std::sqrt(static_cast<double>(data.n()));

  SupStatistic out;
  std::vector<std::int64_t> a(rows.size() * L);
  for (std::size_t t = 0; t < fits.size(); ++t) {
    const double tau = fits[t].tau;
    const FixedPoint fp = FixedPoint::for_bound(std::max(tau, 1.0 - tau));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      const double b = fits[t].below[i];
      if (std::isnan(b)) throw DataError("statistic_z1", "missing residual for a selected row");
      const std::int64_t q = fp.quantize(b - tau);
      for (std::size_t l = 0; l < L; ++l) a[r * L + l] = phat[i] < grid.p_cutpoints[l] ? q : 0;
    }
    const SupCell cell = sweep.sup(a);
    const double value = fp.to_double(cell.value) / root_n;
    out.per_tau.push_back({tau, value});
    if (t == 0 || value > out.statistic) {
      out.statistic = value;
      if (cell.found) {
        out.argmax = sweep.locate(cell);
        out.argmax_tau = tau;
      }
    }
  }
  return out;
}

std::vector<std::vector<unsigned char>> wild_indicators(std::span<const double> uniforms,
                                                        std::span<const double> tau_grid) {
  std::vector<std::vector<unsigned char>> B(tau_grid.size(),
                                            std::vector<unsigned char>(uniforms.size()));
  for (std::size_t t = 0; t < tau_grid.size(); ++t) {
    for (std::size_t i = 0; i < uniforms.size(); ++i) B[t][i] = uniforms[i] <= tau_grid[t] ? 1 : 0;
  }
  return B;
}

double bootstrap_z1_draw(const Dataset& data, std::span<const double> phat, const GridSpec& grid,
                         std::span<const CondCdfTable> cdf, std::span<const double> uniforms) {
  if (uniforms.size() != data.n()) throw ConfigError("bootstrap_z1", "need one uniform per row");
  if (cdf.size() != grid.tau_grid.size()) {
    throw ConfigError("bootstrap_z1", "one conditional CDF table per tau is required");
  }
  const std::size_t L = grid.p_cutpoints.size();
  for (const auto& table : cdf) {
    if (table.cutpoints != grid.p_cutpoints || table.n != data.n()) {
      throw ConfigError("bootstrap_z1", "CDF table does not match the grid");
    }
  }
  const auto rows = testable_rows(data, phat);
  if (rows.empty()) throw InfeasibleError("bootstrap_z1", "empty selected sample", 0);
  const BoxSweep sweep(grid, data.x, rows);
  const double root_n = std::sqrt(static_cast<double>(data.n()));

  std::vector<double> terms(rows.size() * L);
  std::vector<std::int64_t> a(rows.size() * L);
  double best = 0.0;
  for (std::size_t t = 0; t < grid.tau_grid.size(); ++t) {
    const double tau = grid.tau_grid[t];
    double bound = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      const double v = (uniforms[i] <= tau ? 1.0 : 0.0) - tau;
      const bool defined = !std::isnan(cdf[t].at(i, 0));
      for (std::size_t l = 0; l < L; ++l) {
        const double ind = phat[i] < grid.p_cutpoints[l] ? 1.0 : 0.0;
        const double corr = defined ? cdf[t].at(i, l) : 0.0;
        const double term = v * (ind - corr);
        terms[r * L + l] = term;
        bound = std::max(bound, std::abs(term));
      }
    }
    const FixedPoint fp = FixedPoint::for_bound(bound);
    for (std::size_t k = 0; k < terms.size(); ++k) a[k] = fp.quantize(terms[k]);
    const double value = fp.to_double(sweep.sup(a).value) / root_n;
    best = std::max(best, value);
  }
  return best;
}

std::vector<double> bootstrap_z1(const Dataset& data, std::span<const double> phat,
                                 const GridSpec& grid, std::span<const CondCdfTable> cdf,
                                 std::size_t R, RngStream stream, unsigned threads) {
  if (R < 1) throw ConfigError("bootstrap_z1", "need at least one bootstrap replication");
  std::vector<double> draws(R);
  parallel_for(R, threads, [&](std::size_t r) {
    const auto U = draw_uniforms(stream.child(r), data.n());
    draws[r] = bootstrap_z1_draw(data, phat, grid, cdf, U);
  });
  return draws;
}

Test1Problem::Test1Problem(const Dataset& data, const Test1Config& config, RngStream stream)
    : config_(config) {
  try {
    if (config.tau_grid.empty()) throw ConfigError("test1", "empty tau grid");
    sample_ = prepare_sample(data, config.trim_tail, config.propensity, stream.child(2),
                             config.kernel, config.threads);
    const Dataset& d = sample_.data;
    const auto hx = resolve_hx(d, config.quantile, config.kernel, config.threads);
    cv_upper_edge_ = hx.cv && hx.cv->at_upper_edge;
    fits_ = quantile_residuals(d, config.tau_grid, hx.h_x, config.quantile.r, config.kernel,
                               config.threads);
    const auto hF = rule_of_thumb_hF(d, fits_, config.quantile.c_F);
    grid_ = build_default_grid(d, sample_.phat, config.tau_grid, config.max_cells);
    for (std::size_t t = 0; t < fits_.size(); ++t) {
      cdf_.push_back(cond_cdf_table(d, fits_[t].uhat, sample_.phat, grid_.p_cutpoints, hF.h_x,
                                    hF.h_u[t], config.kernel));
    }
    statistic_ = statistic_z1(d, fits_, sample_.phat, grid_);

    plan_.r = config.quantile.r;
    plan_.c_x = config.quantile.c_x;
    plan_.h_x = hx.h_x;
    plan_.h_x_cross_validated = hx.cross_validated;
    plan_.c_F = config.quantile.c_F;
    plan_.h_F_x = hF.h_x;
    plan_.h_F_u = hF.h_u;
    plan_.h_z = sample_.h_z;
    plan_.lambda = sample_.lambda;
    plan_.oracle_propensity = sample_.oracle;
  } catch (const Error& e) {
    rethrow_with_stage(e, "test1");
  }
}

double Test1Problem::bootstrap_draw(RngStream stream) const {
  const auto U = draw_uniforms(stream, sample_.data.n());
  return bootstrap_z1_draw(sample_.data, sample_.phat, grid_, cdf_, U);
}

std::vector<double> Test1Problem::bootstrap(std::size_t R, RngStream stream, unsigned threads) const {
  return bootstrap_z1(sample_.data, sample_.phat, grid_, cdf_, R, stream, threads);
}

nlohmann::json Test1Problem::diagnostics() const {
  nlohmann::json j;
  j["n_trimmed"] = sample_.n_trimmed;
  j["n_phat_undefined"] = sample_.n_phat_undefined;
  std::vector<std::size_t> cdf_undefined, reduced;
  for (const auto& c : cdf_) cdf_undefined.push_back(c.n_undefined);
  for (const auto& f : fits_) reduced.push_back(f.n_order_reduced);
  j["n_cdf_undefined"] = cdf_undefined;
  j["n_order_reduced"] = reduced;
  j["grid"] = {{"n_x_cutpoints", nlohmann::json::array()},
               {"n_p_cutpoints", grid_.p_cutpoints.size()},
               {"n_boxes", grid_.n_boxes()},
               {"n_intervals", grid_.n_intervals()},
               {"marginal", grid_.marginal}};
  for (const auto& c : grid_.x_cutpoints) j["grid"]["n_x_cutpoints"].push_back(c.size());
  j["h_x_cv_at_upper_edge"] = cv_upper_edge_;
  if (!sample_.oracle) {
    j["propensity_cv_reps_used"] = sample_.cv_reps_used;
    j["propensity_cv_reps_dropped"] = sample_.cv_reps_dropped;
  }
  return j;
}

nlohmann::json Test1Problem::config_echo() const {
  nlohmann::json j;
  j["tau_grid"] = config_.tau_grid;
  j["R"] = config_.R;
  j["alphas"] = config_.alphas;
  j["trim_tail"] = config_.trim_tail;
  j["max_cells"] = config_.max_cells;
  j["kernel"] = to_string(config_.kernel.family);
  j["bandwidths"] = plan_.to_json();
  return j;
}

TestReport run_test1(const Dataset& data, const Test1Config& config, RngStream stream) {
  validate_alphas(config.alphas);
  if (config.R < 1) throw ConfigError("test1", "need at least one bootstrap replication");
  const Test1Problem problem(data, config, stream);
  TestReport report;
  report.test = "test1";
  const auto& st = problem.statistic();
  report.statistic = st.statistic;
  report.per_tau = st.per_tau;
  report.argmax = st.argmax;
  report.argmax_tau = st.argmax_tau;
  try {
    report.boot_draws = problem.bootstrap(config.R, stream.child(1), config.threads);
  } catch (const Error& e) {
    rethrow_with_stage(e, "test1");
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
