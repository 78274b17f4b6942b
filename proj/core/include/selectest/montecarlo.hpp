#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/dataset.hpp"
#include "selectest/meantest.hpp"
#include "selectest/rng.hpp"
#include "selectest/test1.hpp"
#include "selectest/test2.hpp"

namespace selectest {

enum class InstrumentDesign { Normal, Binomial, Poisson, DiscreteUniform };
enum class OutcomeKind { CubicQuantile, QuadraticMean };

std::string to_string(InstrumentDesign d);
InstrumentDesign instrument_design_from_string(std::string_view name);
std::string to_string(OutcomeKind k);
OutcomeKind outcome_kind_from_string(std::string_view name);

/// Simulation design:
///   x ~ U(0,1), instrument z per `design`,
///   s = 1{0.75 (x - 0.5) + 0.75 z > sigma v},
///   y = g(x) + gamma1 z + 0.5 eps   (observed when s = 1),
/// with (eps, v) standard bivariate normal with correlation rho and
/// g(x) = (x-.5)^3 + (x-.5)^2 + (x-.5) (cubic) or x^2 + 0.5 x (mean design).
struct DgpConfig {
  InstrumentDesign design = InstrumentDesign::Normal;
  double rho = 0.0;
  double gamma1 = 0.0;
  double sigma = 1.0;
  std::size_t n = 1000;
  OutcomeKind outcome = OutcomeKind::CubicQuantile;
  /// Variance of the normal instrument.
  double instrument_variance = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct SimulatedSample {
  Dataset data;
  std::vector<double> oracle_p;
  std::vector<double> instrument;
};

/// Continuous instruments enter zc next to x; discrete ones enter zd as
/// integer codes.
SimulatedSample generate_dgp(const DgpConfig& config, RngStream stream);

/// Pr(s = 1 | x, z) = Phi((0.75 (x - 0.5) + 0.75 z) / sigma).
double oracle_propensity(double x, double z, double sigma);

/// Outcome mean function g(x) without the instrument term.
double outcome_signal(OutcomeKind kind, double x);

/// tau-quantile of y given x when rho = 0 and gamma1 = 0.
double true_conditional_quantile(double x, double tau);

enum class TestKind { Test1, Test2, MeanTest };

std::string to_string(TestKind k);
TestKind test_kind_from_string(std::string_view name);

struct WarpSpeedConfig {
  DgpConfig dgp{};
  TestKind test = TestKind::Test1;
  std::size_t reps = 500;
  std::vector<double> alphas{0.05, 0.10};
  /// Replace the propensity options of the test config by the oracle score.
  bool oracle_propensity = true;
  Test1Config test1{};
  Test2Config test2{};
  MeanTestConfig meantest{};
  unsigned threads = 1;
  /// Largest tolerated share of failing replications.
  double max_failure_share = 0.02;

  nlohmann::json to_json() const;
};

/// Simulation-ready tuning: tau grid {0.3, 0.5, 0.7}, r = 3, 2.5% trimming.
WarpSpeedConfig default_warp_speed(TestKind test);

struct McResult {
  std::map<double, double> rejection_rates;
  std::map<double, double> critical_values;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::vector<double> statistics;
  std::vector<double> boot_draws;
  std::vector<std::string> failure_messages;

  nlohmann::json to_json() const;
};

/// Warp-speed Monte Carlo: replication r draws data from
/// stream.child(r).child(0), computes the statistic and a single bootstrap
/// draw from stream.child(r).child(1); critical values are percentiles of the
/// pooled draws. Failing replications are dropped and counted; a failure
/// share at or above max_failure_share is an error.
McResult run_warp_speed(const WarpSpeedConfig& config, RngStream stream);

// ---------------------------------------------------------------------------
// Reference tables

struct ReferenceTable {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> alphas;
  /// values[(alpha_index * sample_sizes.size() + n_index) * columns.size() + column]
  std::vector<double> values;

  double at(std::size_t alpha_index, std::size_t n_index, std::size_t column) const {
    return values[(alpha_index * sample_sizes.size() + n_index) * columns.size() + column];
  }
};

/// Published rejection rates for every supported table id.
const std::vector<ReferenceTable>& reference_tables();
const ReferenceTable& reference_table(std::string_view id);
std::vector<std::string> table_ids();

struct TableResult {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> alphas;
  std::vector<double> rates;
  std::vector<double> reference;
  std::size_t reps = 0;
  std::size_t failures = 0;

  double rate(std::size_t alpha_index, std::size_t n_index, std::size_t column) const {
    return rates[(alpha_index * sample_sizes.size() + n_index) * columns.size() + column];
  }
  nlohmann::json to_json() const;
};

/// Warp-speed configuration of one column of a table at sample size n.
WarpSpeedConfig table_cell_config(std::string_view id, std::size_t column, std::size_t n);

/// Runs every cell of a table with round(999 * scale) replications (at least 20).
TableResult replicate_table(std::string_view id, double scale, RngStream stream,
                            unsigned threads = 1);

std::string format_table(const TableResult& table);

}  // namespace selectest
