#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/bandwidth.hpp"
#include "selectest/estimators.hpp"
#include "selectest/pipeline.hpp"
#include "selectest/report.hpp"
#include "selectest/rng.hpp"

namespace selectest {

struct EtaScan {
  std::vector<double> eta_grid;
  double epsilon = 0.1;
  double threshold = 0.1;
  double C = 1.0;
  std::vector<double> density_proxy;
  std::vector<double> h_p;
  std::vector<double> H;
  double eta_hat = 0.0;
  double h_p_hat = 0.0;
  double H_hat = 0.0;
  /// No grid value cleared the threshold; eta_hat is the grid maximum.
  bool warning = false;
};

/// h_p(eta) = C log(n) n^{-(1+eps)/(1+eps+eta)}.
double eta_window(std::size_t n, double eta, double epsilon, double C);

/// For each eta: (n h_p)^{-(1-eta)} sum_i K((phat_i - (1 - H)) / h_p) with
/// H = h_p^{1/(1+eps)}, summed over every row with a defined phat. Picks the
/// smallest eta whose proxy exceeds the threshold.
EtaScan select_eta(std::span<const double> phat, std::size_t n, double epsilon,
                   std::span<const double> eta_grid, double threshold = 0.1, double C = 1.0,
                   const KernelSpec& kernel = {});

std::vector<double> default_eta_grid();

struct Z2Statistic {
  std::vector<TauValue> per_tau;
  double statistic = 0.0;
  std::size_t n_window = 0;
};

/// Studentized Z2(tau) per tau and sup_tau |Z2(tau)|. Throws InfeasibleError
/// when no selected row falls inside the window |phat - delta| < h_p.
Z2Statistic statistic_z2(const Dataset& data, std::span<const QuantileFit> fits,
                         std::span<const double> phat, double delta, double h_p,
                         const KernelSpec& kernel = {});

/// One bootstrap sup_tau |Z2*(tau) / sqrt(var*(tau))| from uniforms U
/// (one per row); var* averages (B - tau)^2 over all rows.
double bootstrap_z2_draw(const Dataset& data, std::span<const double> phat, double delta,
                         double h_p, std::span<const double> tau_grid,
                         std::span<const double> uniforms, const KernelSpec& kernel = {});

std::vector<double> bootstrap_z2(const Dataset& data, std::span<const double> phat, double delta,
                                 double h_p, std::span<const double> tau_grid, std::size_t R,
                                 RngStream stream, const KernelSpec& kernel = {},
                                 unsigned threads = 1);

struct EtaOptions {
  std::vector<double> eta_grid = default_eta_grid();
  double epsilon = 0.1;
  double threshold = 0.1;
  double C = 1.0;
};

struct Test2Config {
  std::vector<double> tau_grid = default_tau_grid();
  std::size_t R = 399;
  std::vector<double> alphas{0.05, 0.10};
  double trim_tail = 0.0;
  QuantileOptions quantile{};
  PropensityOptions propensity{};
  /// Fixed window; both must be set to bypass the eta scan.
  std::optional<double> delta;
  std::optional<double> h_p;
  EtaOptions eta{};
  KernelSpec kernel{};
  unsigned threads = 1;
};

/// Stream layout as Test1Problem: child(1) bootstrap, child(2) cross-validation.
class Test2Problem {
 public:
  Test2Problem(const Dataset& data, const Test2Config& config, RngStream stream);

  const PreparedSample& sample() const noexcept { return sample_; }
  const BandwidthPlan& plan() const noexcept { return plan_; }
  const Z2Statistic& statistic() const noexcept { return statistic_; }
  const std::optional<EtaScan>& eta_scan() const noexcept { return scan_; }

  double bootstrap_draw(RngStream stream) const;
  std::vector<double> bootstrap(std::size_t R, RngStream stream, unsigned threads) const;

  nlohmann::json diagnostics() const;
  nlohmann::json config_echo() const;

 private:
  Test2Config config_;
  PreparedSample sample_;
  BandwidthPlan plan_;
  std::vector<QuantileFit> fits_;
  std::optional<EtaScan> scan_;
  Z2Statistic statistic_;
};

TestReport run_test2(const Dataset& data, const Test2Config& config, RngStream stream);

enum class SelectionDecision { NoSelectionEvidence, SelectionOnly, Misspecification };

std::string to_string(SelectionDecision d);

/// Sequential use of both tests: no rejection by the first test means no
/// evidence of selection; rejection by the first only means selection; both
/// rejecting points to misspecification. The second report must be present
/// exactly when the first test rejects at alpha1.
SelectionDecision decision_rule(const TestReport& report1, const TestReport* report2,
                                double alpha1, double alpha2);

}  // namespace selectest
