#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/estimators.hpp"
#include "selectest/grid.hpp"
#include "selectest/pipeline.hpp"
#include "selectest/report.hpp"
#include "selectest/rng.hpp"
#include "selectest/test1.hpp"

namespace selectest {

enum class Multiplier { Rademacher, Mammen };

std::string to_string(Multiplier m);
Multiplier multiplier_from_string(std::string_view name);

/// Wild bootstrap residuals: as fitted, or divided by the smoother's
/// residual_scale() so their variance matches that of the errors.
enum class ResidualScaling { None, Leverage };

std::string to_string(ResidualScaling r);
ResidualScaling residual_scaling_from_string(std::string_view name);

/// n draws with mean 0 and variance 1.
std::vector<double> draw_multipliers(RngStream stream, std::size_t n, Multiplier kind);

/// sup over boxes and closed propensity intervals of
///   |n^{-1/2} sum_i s_i (y_i - mhat_i) fhat_i 1{x_i in box} 1{p_l <= p_i <= p_m}|.
/// mhat and fhat are indexed by row.
SupStatistic statistic_z1m(const Dataset& data, std::span<const double> mhat,
                           std::span<const double> fhat, std::span<const double> phat,
                           const GridSpec& grid);

/// One wild bootstrap sup: y* = mhat + v e on selected rows with e = y - mhat
/// (optionally leverage scaled), mhat* refitted with the cached smoother,
/// residuals (y* - mhat*) fhat.
double bootstrap_z1m_draw(const Dataset& data, const NwSmoother& smoother,
                          std::span<const double> mhat, std::span<const double> phat,
                          const GridSpec& grid, std::span<const double> multipliers,
                          ResidualScaling scaling = ResidualScaling::Leverage);

std::vector<double> bootstrap_z1m(const Dataset& data, const NwSmoother& smoother,
                                  std::span<const double> mhat, std::span<const double> phat,
                                  const GridSpec& grid, std::size_t R, Multiplier kind,
                                  RngStream stream, unsigned threads = 1,
                                  ResidualScaling scaling = ResidualScaling::Leverage);

struct MeanTestConfig {
  std::size_t R = 399;
  std::vector<double> alphas{0.05, 0.10};
  double trim_tail = 0.0;
  double c_x = 0.25;
  /// Fixed bandwidths; empty uses c_x sd(x) n^{-1/3}.
  std::vector<double> h_x;
  PropensityOptions propensity{};
  Multiplier multiplier = Multiplier::Rademacher;
  ResidualScaling residual_scaling = ResidualScaling::Leverage;
  std::size_t max_cells = 200000;
  KernelSpec kernel{};
  unsigned threads = 1;
};

class MeanTestProblem {
 public:
  MeanTestProblem(const Dataset& data, const MeanTestConfig& config, RngStream stream);

  const PreparedSample& sample() const noexcept { return sample_; }
  const std::vector<double>& h_x() const noexcept { return h_x_; }
  const GridSpec& grid() const noexcept { return grid_; }
  const NwSmoother& smoother() const noexcept { return *smoother_; }
  const std::vector<double>& mhat() const noexcept { return mhat_; }
  const std::vector<double>& fhat() const noexcept { return fhat_; }
  const SupStatistic& statistic() const noexcept { return statistic_; }

  double bootstrap_draw(RngStream stream) const;
  std::vector<double> bootstrap(std::size_t R, RngStream stream, unsigned threads) const;

  nlohmann::json diagnostics() const;
  nlohmann::json config_echo() const;

 private:
  MeanTestConfig config_;
  PreparedSample sample_;
  std::vector<double> h_x_;
  GridSpec grid_;
  std::shared_ptr<NwSmoother> smoother_;
  std::vector<double> mhat_;
  std::vector<double> fhat_;
  SupStatistic statistic_;
};

TestReport run_meantest(const Dataset& data, const MeanTestConfig& config, RngStream stream);

}  // namespace selectest
