#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/grid.hpp"

namespace selectest {

struct TauValue {
  double tau = 0.0;
  double value = 0.0;
};

/// Result of any of the three tests.
struct TestReport {
  std::string test;
  double statistic = 0.0;
  std::vector<TauValue> per_tau;
  std::optional<CellLocation> argmax;
  std::optional<double> argmax_tau;
  std::vector<double> boot_draws;
  std::map<double, double> critical_values;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t n_selected = 0;
  /// Second test only.
  std::optional<std::size_t> n_window;
  std::optional<double> eta_used;
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json config_echo = nlohmann::json::object();
  std::uint64_t seed = 0;

  bool rejects(double alpha) const;
};

bool operator==(const CellLocation& a, const CellLocation& b);
bool operator==(const TauValue& a, const TauValue& b);
bool operator==(const TestReport& a, const TestReport& b);

/// Type-1 empirical quantile: the k-th smallest draw with k = ceil((1 - alpha) R).
double bootstrap_critical_value(std::span<const double> draws, double alpha);

/// (1 + #{draw >= statistic}) / (R + 1).
double bootstrap_p_value(std::span<const double> draws, double statistic);

/// Fills critical values for every alpha and the p-value from boot_draws.
void finalize_report(TestReport& report, std::span<const double> alphas);

void validate_alphas(std::span<const double> alphas);

nlohmann::json cell_to_json(const CellLocation& cell);
CellLocation cell_from_json(const nlohmann::json& j);

}  // namespace selectest
