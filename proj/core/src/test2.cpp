#include "selectest/test2.hpp"

#include <algorithm>
#include <cmath>

#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"

namespace selectest {

std::vector<double> default_eta_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

double eta_window(std::size_t n, double eta, double epsilon, double C) {
  const double nn = static_cast<double>(n);
  return C * std::log(nn) * std::pow(nn, -(1.0 + epsilon) / (1.0 + epsilon + eta));
}

EtaScan select_eta(std::span<const double> phat, std::size_t n, double epsilon,
                   std::span<const double> eta_grid, double threshold, double C,
                   const KernelSpec& kernel) {
  if (eta_grid.empty()) throw ConfigError("select_eta", "empty eta grid");
  if (!std::is_sorted(eta_grid.begin(), eta_grid.end())) {
    throw ConfigError("select_eta", "eta grid must be ascending");
  }
  for (double e : eta_grid) {
    if (!(e >= 0.0 && e < 1.0)) throw ConfigError("select_eta", "eta must lie in [0,1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("select_eta", "epsilon must be positive");
  if (!(C > 0.0)) throw ConfigError("select_eta", "scaling constant must be positive");
  if (n < 2) throw DataError("select_eta", "need at least 2 observations");

  EtaScan scan;
  scan.eta_grid.assign(eta_grid.begin(), eta_grid.end());
  scan.epsilon = epsilon;
  scan.threshold = threshold;
  scan.C = C;
  std::optional<std::size_t> chosen;
  for (std::size_t k = 0; k < eta_grid.size(); ++k) {
    const double eta = eta_grid[k];
    const double hp = eta_window(n, eta, epsilon, C);
    const double H = std::pow(hp, 1.0 / (1.0 + epsilon));
    double sum = 0.0;
    for (double p : phat) {
      if (!std::isnan(p)) sum += kernel((p - (1.0 - H)) / hp);
    }
    const double proxy = sum / std::pow(static_cast<double>(n) * hp, 1.0 - eta);
    scan.density_proxy.push_back(proxy);
    scan.h_p.push_back(hp);
    scan.H.push_back(H);
    if (!chosen && proxy > threshold) chosen = k;
  }
  const std::size_t pick = chosen.value_or(eta_grid.size() - 1);
  scan.warning = !chosen;
  scan.eta_hat = eta_grid[pick];
  scan.h_p_hat = scan.h_p[pick];
  scan.H_hat = scan.H[pick];
  return scan;
}

namespace {

std::size_t window_count(const Dataset& data, std::span<const double> phat, double delta,
                         double h_p) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.s[i] && !std::isnan(phat[i]) && std::abs(phat[i] - delta) < h_p) ++count;
  }
  return count;
}

void check_window(std::size_t count, double delta, double h_p) {
  if (count == 0) {
    throw InfeasibleError("test2", "thin set: no selected observation with |phat - " +
                                       std::to_string(delta) + "| < " + std::to_string(h_p) +
                                       "; increase h_p or lower delta",
                          0);
  }
}

}  // namespace

Z2Statistic statistic_z2(const Dataset& data, std::span<const QuantileFit> fits,
                         std::span<const double> phat, double delta, double h_p,
                         const KernelSpec& kernel) {
  if (phat.size() != data.n()) throw ConfigError("statistic_z2", "propensity vector has wrong length");
  if (!(h_p > 0.0)) throw ConfigError("statistic_z2", "h_p must be positive");
  Z2Statistic out;
  out.n_window = window_count(data, phat, delta, h_p);
  check_window(out.n_window, delta, h_p);
  const double k2 = kernel.squared_integral();
  for (std::size_t t = 0; t < fits.size(); ++t) {
    const double tau = fits[t].tau;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (!data.s[i] || std::isnan(phat[i])) continue;
      const double K = kernel((phat[i] - delta) / h_p);
      if (K == 0.0) continue;
      const double v = fits[t].below[i] - tau;
      num += v * K;
      den += v * v * K;
    }
    const double z = num / std::sqrt(k2 * den);
    out.per_tau.push_back({tau, z});
    out.statistic = std::max(out.statistic, std::abs(z));
  }
  return out;
}

double bootstrap_z2_draw(const Dataset& data, std::span<const double> phat, double delta,
                         double h_p, std::span<const double> tau_grid,
                         std::span<const double> uniforms, const KernelSpec& kernel) {
  if (uniforms.size() != data.n()) throw ConfigError("bootstrap_z2", "need one uniform per row");
  check_window(window_count(data, phat, delta, h_p), delta, h_p);
  const double k2 = kernel.squared_integral();
  const double n = static_cast<double>(data.n());
  double best = 0.0;
  for (double tau : tau_grid) {
    double num = 0.0, ksum = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double v = (uniforms[i] <= tau ? 1.0 : 0.0) - tau;
      ss += v * v;
      if (!data.s[i] || std::isnan(phat[i])) continue;
      const double K = kernel((phat[i] - delta) / h_p);
      if (K == 0.0) continue;
      num += v * K;
      ksum += K;
    }
    const double var = (ss / n) * k2 * ksum;
    best = std::max(best, std::abs(num / std::sqrt(var)));
  }
  return best;
}

std::vector<double> bootstrap_z2(const Dataset& data, std::span<const double> phat, double delta,
                                 double h_p, std::span<const double> tau_grid, std::size_t R,
                                 RngStream stream, const KernelSpec& kernel, unsigned threads) {
  if (R < 1) throw ConfigError("bootstrap_z2", "need at least one bootstrap replication");
  std::vector<double> draws(R);
  parallel_for(R, threads, [&](std::size_t r) {
    const auto U = draw_uniforms(stream.child(r), data.n());
    draws[r] = bootstrap_z2_draw(data, phat, delta, h_p, tau_grid, U, kernel);
  });
  return draws;
}

Test2Problem::Test2Problem(const Dataset& data, const Test2Config& config, RngStream stream)
    : config_(config) {
  try {
    if (config.tau_grid.empty()) throw ConfigError("test2", "empty tau grid");
    if (config.delta.has_value() != config.h_p.has_value()) {
      throw ConfigError("test2", "a fixed window needs both delta and h_p");
    }
    sample_ = prepare_sample(data, config.trim_tail, config.propensity, stream.child(2),
                             config.kernel, config.threads);
    const Dataset& d = sample_.data;
    const auto hx = resolve_hx(d, config.quantile, config.kernel, config.threads);
    fits_ = quantile_residuals(d, config.tau_grid, hx.h_x, config.quantile.r, config.kernel,
                               config.threads);

    plan_.r = config.quantile.r;
    plan_.c_x = config.quantile.c_x;
    plan_.h_x = hx.h_x;
    plan_.h_x_cross_validated = hx.cross_validated;
    plan_.h_z = sample_.h_z;
    plan_.lambda = sample_.lambda;
    plan_.oracle_propensity = sample_.oracle;
    plan_.epsilon = config.eta.epsilon;
    plan_.C_p = config.eta.C;
    if (config.delta) {
      plan_.delta = *config.delta;
      plan_.h_p = *config.h_p;
      plan_.H = 1.0 - plan_.delta;
    } else {
      scan_ = select_eta(sample_.phat, d.n(), config.eta.epsilon, config.eta.eta_grid,
                         config.eta.threshold, config.eta.C, config.kernel);
      plan_.eta = scan_->eta_hat;
      plan_.h_p = scan_->h_p_hat;
      plan_.H = scan_->H_hat;
      plan_.delta = 1.0 - plan_.H;
      plan_.eta_selected = true;
    }
    if (!(plan_.h_p > 0.0)) throw ConfigError("test2", "h_p must be positive");
    statistic_ = statistic_z2(d, fits_, sample_.phat, plan_.delta, plan_.h_p, config.kernel);
  } catch (const Error& e) {
    rethrow_with_stage(e, "test2");
  }
}

double Test2Problem::bootstrap_draw(RngStream stream) const {
  const auto U = draw_uniforms(stream, sample_.data.n());
  return bootstrap_z2_draw(sample_.data, sample_.phat, plan_.delta, plan_.h_p, config_.tau_grid,
                           U, config_.kernel);
}

std::vector<double> Test2Problem::bootstrap(std::size_t R, RngStream stream,
                                            unsigned threads) const {
  return bootstrap_z2(sample_.data, sample_.phat, plan_.delta, plan_.h_p, config_.tau_grid, R,
                      stream, config_.kernel, threads);
}

nlohmann::json Test2Problem::diagnostics() const {
  nlohmann::json j;
  j["n_trimmed"] = sample_.n_trimmed;
  j["n_phat_undefined"] = sample_.n_phat_undefined;
  j["n_window"] = statistic_.n_window;
  std::vector<std::size_t> reduced;
  for (const auto& f : fits_) reduced.push_back(f.n_order_reduced);
  j["n_order_reduced"] = reduced;
  if (scan_) {
    j["eta_scan"] = {{"eta_grid", scan_->eta_grid},
                     {"density_proxy", scan_->density_proxy},
                     {"h_p", scan_->h_p},
                     {"H", scan_->H},
                     {"threshold", scan_->threshold},
                     {"warning", scan_->warning}};
  }
  return j;
}

nlohmann::json Test2Problem::config_echo() const {
  nlohmann::json j;
  j["tau_grid"] = config_.tau_grid;
  j["R"] = config_.R;
  j["alphas"] = config_.alphas;
  j["trim_tail"] = config_.trim_tail;
  j["kernel"] = to_string(config_.kernel.family);
  j["bandwidths"] = plan_.to_json();
  return j;
}

TestReport run_test2(const Dataset& data, const Test2Config& config, RngStream stream) {
  validate_alphas(config.alphas);
  if (config.R < 1) throw ConfigError("test2", "need at least one bootstrap replication");
  const Test2Problem problem(data, config, stream);
  TestReport report;
  report.test = "test2";
  report.statistic = problem.statistic().statistic;
  report.per_tau = problem.statistic().per_tau;
  try {
    report.boot_draws = problem.bootstrap(config.R, stream.child(1), config.threads);
  } catch (const Error& e) {
    rethrow_with_stage(e, "test2");
  }
  report.n = problem.sample().data.n();
  report.n_selected = problem.sample().data.n_selected();
  report.n_window = problem.statistic().n_window;
  report.eta_used = problem.plan().eta_selected ? std::optional<double>(problem.plan().eta)
                                                : std::nullopt;
  report.diagnostics = problem.diagnostics();
  report.config_echo = problem.config_echo();
  report.seed = stream.seed();
  finalize_report(report, config.alphas);
  return report;
}

std::string to_string(SelectionDecision d) {
  switch (d) {
    case SelectionDecision::NoSelectionEvidence:
      return "no-selection-evidence";
    case SelectionDecision::SelectionOnly:
      return "selection-only";
    case SelectionDecision::Misspecification:
      return "misspecification";
  }
  return "unknown";
}

SelectionDecision decision_rule(const TestReport& report1, const TestReport* report2,
                                double alpha1, double alpha2) {
  if (!(alpha1 > 0.0 && alpha1 < 1.0) || !(alpha2 > 0.0 && alpha2 < 1.0)) {
    throw ConfigError("decision_rule", "significance levels must lie in (0,1)");
  }
  const bool reject1 = report1.p_value <= alpha1;
  if (!reject1) {
    if (report2) {
      throw ConfigError("decision_rule",
                        "second test supplied although the first test does not reject");
    }
    return SelectionDecision::NoSelectionEvidence;
  }
  if (!report2) {
    throw ConfigError("decision_rule", "first test rejects; the second test report is required");
  }
  return report2->p_value <= alpha2 ? SelectionDecision::Misspecification
                                    : SelectionDecision::SelectionOnly;
}

}  // namespace selectest
