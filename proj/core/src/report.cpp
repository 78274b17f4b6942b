#include "selectest/report.hpp"

#include <algorithm>
#include <cmath>

#include "selectest/errors.hpp"

namespace selectest {

bool TestReport::rejects(double alpha) const {
  auto it = critical_values.find(alpha);
  if (it != critical_values.end()) return statistic > it->second;
  return statistic > bootstrap_critical_value(boot_draws, alpha);
}

bool operator==(const CellLocation& a, const CellLocation& b) {
  return a.x_lower == b.x_lower && a.x_upper == b.x_upper && a.p_lower == b.p_lower &&
         a.p_upper == b.p_upper;
}

bool operator==(const TauValue& a, const TauValue& b) {
  return a.tau == b.tau && a.value == b.value;
}

bool operator==(const TestReport& a, const TestReport& b) {
  return a.test == b.test && a.statistic == b.statistic && a.per_tau == b.per_tau &&
         a.argmax == b.argmax && a.argmax_tau == b.argmax_tau && a.boot_draws == b.boot_draws &&
         a.critical_values == b.critical_values && a.p_value == b.p_value && a.n == b.n &&
         a.n_selected == b.n_selected && a.n_window == b.n_window && a.eta_used == b.eta_used &&
         a.diagnostics == b.diagnostics && a.config_echo == b.config_echo && a.seed == b.seed;
}

void validate_alphas(std::span<const double> alphas) {
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("report", "significance levels must lie in (0,1)");
  }
}

double bootstrap_critical_value(std::span<const double> draws, double alpha) {
  if (draws.empty()) throw ConfigError("report", "no bootstrap draws");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("report", "alpha must lie in (0,1)");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double R = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * R - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

double bootstrap_p_value(std::span<const double> draws, double statistic) {
  std::size_t exceed = 0;
  for (double d : draws) {
    if (d >= statistic) ++exceed;
  }
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(draws.size()) + 1.0);
}

void finalize_report(TestReport& report, std::span<const double> alphas) {
  validate_alphas(alphas);
  report.critical_values.clear();
  for (double a : alphas) {
    report.critical_values[a] = bootstrap_critical_value(report.boot_draws, a);
  }
  report.p_value = bootstrap_p_value(report.boot_draws, report.statistic);
}

nlohmann::json cell_to_json(const CellLocation& cell) {
  return {{"x_lower", cell.x_lower},
          {"x_upper", cell.x_upper},
          {"p_lower", cell.p_lower},
          {"p_upper", cell.p_upper}};
}

CellLocation cell_from_json(const nlohmann::json& j) {
  CellLocation c;
  c.x_lower = j.at("x_lower").get<std::vector<double>>();
  c.x_upper = j.at("x_upper").get<std::vector<double>>();
  c.p_lower = j.at("p_lower").get<double>();
  c.p_upper = j.at("p_upper").get<double>();
  return c;
}

}  // namespace selectest
