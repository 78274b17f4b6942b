#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/bandwidth.hpp"
#include "selectest/estimators.hpp"
#include "selectest/grid.hpp"
#include "selectest/pipeline.hpp"
#include "selectest/report.hpp"
#include "selectest/rng.hpp"

namespace selectest {

struct Test1Config {
  std::vector<double> tau_grid = default_tau_grid();
  std::size_t R = 399;
  std::vector<double> alphas{0.05, 0.10};
  double trim_tail = 0.0;
  QuantileOptions quantile{};
  PropensityOptions propensity{};
  std::size_t max_cells = 200000;
  KernelSpec kernel{};
  unsigned threads = 1;
};

/// A sup statistic with its per-tau profile and maximizing cell.
struct SupStatistic {
  double statistic = 0.0;
  std::vector<TauValue> per_tau;
  std::optional<CellLocation> argmax;
  std::optional<double> argmax_tau;
};

/// sup over tau, boxes and propensity intervals of
///   |n^{-1/2} sum_i s_i (1{u_i <= 0} - tau) 1{x_i in box} 1{p_l <= p_i < p_m}|.
/// Rows with undefined phat are skipped.
SupStatistic statistic_z1(const Dataset& data, std::span<const QuantileFit> fits,
                          std::span<const double> phat, const GridSpec& grid);

/// Multiplier indicators B_{i,tau} = 1{U_i <= tau} for one replication.
std::vector<std::vector<unsigned char>> wild_indicators(std::span<const double> uniforms,
                                                        std::span<const double> tau_grid);

/// One bootstrap sup using uniforms U (one per row):
///   n^{-1/2} sum_i s_i (B_{i,tau} - tau) 1{x_i in box}
///     [1{p_i < p_m} - 1{p_i < p_l} - F(p_m | x_i) + F(p_l | x_i)].
/// `cdf` holds one table per tau on the grid's propensity cutpoints;
/// undefined entries drop the correction for that row.
double bootstrap_z1_draw(const Dataset& data, std::span<const double> phat, const GridSpec& grid,
                         std::span<const CondCdfTable> cdf, std::span<const double> uniforms);

/// R draws; replication r uses draw_uniforms(stream.child(r), n).
std::vector<double> bootstrap_z1(const Dataset& data, std::span<const double> phat,
                                 const GridSpec& grid, std::span<const CondCdfTable> cdf,
                                 std::size_t R, RngStream stream, unsigned threads = 1);

/// Everything needed for the statistic and its bootstrap on one sample.
/// Stream layout: child(1) bootstrap replications, child(2) cross-validation.
class Test1Problem {
 public:
  Test1Problem(const Dataset& data, const Test1Config& config, RngStream stream);

  const PreparedSample& sample() const noexcept { return sample_; }
  const BandwidthPlan& plan() const noexcept { return plan_; }
  const GridSpec& grid() const noexcept { return grid_; }
  const std::vector<QuantileFit>& fits() const noexcept { return fits_; }
  const std::vector<CondCdfTable>& cdf() const noexcept { return cdf_; }
  const SupStatistic& statistic() const noexcept { return statistic_; }

  double bootstrap_draw(RngStream stream) const;
  std::vector<double> bootstrap(std::size_t R, RngStream stream, unsigned threads) const;

  nlohmann::json diagnostics() const;
  nlohmann::json config_echo() const;

 private:
  Test1Config config_;
  PreparedSample sample_;
  BandwidthPlan plan_;
  GridSpec grid_;
  std::vector<QuantileFit> fits_;
  std::vector<CondCdfTable> cdf_;
  SupStatistic statistic_;
  bool cv_upper_edge_ = false;
};

TestReport run_test1(const Dataset& data, const Test1Config& config, RngStream stream);

}  // namespace selectest
