#include "selectest/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "selectest/errors.hpp"
#include "selectest/parallel.hpp"

namespace selectest {

std::string to_string(InstrumentDesign d) {
  switch (d) {
    case InstrumentDesign::Normal: return "normal";
    case InstrumentDesign::Binomial: return "binomial";
    case InstrumentDesign::Poisson: return "poisson";
    case InstrumentDesign::DiscreteUniform: return "discrete-uniform";
  }
  return "unknown";
}

InstrumentDesign instrument_design_from_string(std::string_view name) {
  if (name == "normal") return InstrumentDesign::Normal;
  if (name == "binomial") return InstrumentDesign::Binomial;
  if (name == "poisson") return InstrumentDesign::Poisson;
  if (name == "discrete-uniform") return InstrumentDesign::DiscreteUniform;
  throw ConfigError("dgp", "unknown instrument design '" + std::string(name) + "'");
}

std::string to_string(OutcomeKind k) {
  return k == OutcomeKind::CubicQuantile ? "cubic-quantile" : "quadratic-mean";
}

OutcomeKind outcome_kind_from_string(std::string_view name) {
  if (name == "cubic-quantile") return OutcomeKind::CubicQuantile;
  if (name == "quadratic-mean") return OutcomeKind::QuadraticMean;
  throw ConfigError("dgp", "unknown outcome kind '" + std::string(name) + "'");
}

void DgpConfig::validate() const {
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("dgp", "rho must lie in [-1, 1]");
  if (n < 1) throw ConfigError("dgp", "n must be at least 1");
  if (!(sigma > 0.0)) throw ConfigError("dgp", "sigma must be positive");
  if (!(instrument_variance > 0.0)) throw ConfigError("dgp", "instrument variance must be positive");
  if (!std::isfinite(gamma1)) throw ConfigError("dgp", "gamma1 must be finite");
}

nlohmann::json DgpConfig::to_json() const {
  return {{"design", to_string(design)},   {"rho", rho},
          {"gamma1", gamma1},              {"sigma", sigma},
          {"n", n},                        {"outcome", to_string(outcome)},
          {"instrument_variance", instrument_variance}};
}

double oracle_propensity(double x, double z, double sigma) {
  const double t = (0.75 * (x - 0.5) + 0.75 * z) / sigma;
  return 0.5 * std::erfc(-t / std::sqrt(2.0));
}

double outcome_signal(OutcomeKind kind, double x) {
  if (kind == OutcomeKind::QuadraticMean) return x * x + 0.5 * x;
  const double c = x - 0.5;
  return c * c * c + c * c + c;
}

double true_conditional_quantile(double x, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("true_conditional_quantile", "tau must lie in (0,1)");
  return outcome_signal(OutcomeKind::CubicQuantile, x) +
         0.5 * boost::math::quantile(boost::math::normal(), tau);
}

SimulatedSample generate_dgp(const DgpConfig& config, RngStream stream) {
  config.validate();
  const std::size_t n = config.n;
  const bool continuous = config.design == InstrumentDesign::Normal;
  SimulatedSample out;
  Dataset& d = out.data;
  d.y.assign(n, std::numeric_limits<double>::quiet_NaN());
  d.s.assign(n, 0);
  d.x = Matrix(n, 1);
  d.x_names = {"x"};
  if (continuous) {
    d.zc = Matrix(n, 2);
    d.zc_names = {"x", "z"};
  } else {
    d.zc = Matrix(n, 1);
    d.zc_names = {"x"};
    d.zd = CategoryMatrix(n, 1);
    d.zd_names = {"z"};
  }
  out.oracle_p.resize(n);
  out.instrument.resize(n);

  const double sd_z = std::sqrt(config.instrument_variance);
  const double cross = std::sqrt(1.0 - config.rho * config.rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = stream.uniform();
    double z = 0.0;
    int code = 0;
    switch (config.design) {
      case InstrumentDesign::Normal:
        z = sd_z * stream.normal();
        break;
      case InstrumentDesign::Binomial:
        code = stream.uniform() < 0.5 ? 0 : 1;
        z = code - 0.5;
        break;
      case InstrumentDesign::Poisson:
        code = static_cast<int>(stream.poisson(1.5));
        z = 1.5 - code;
        break;
      case InstrumentDesign::DiscreteUniform:
        code = static_cast<int>(stream.below(7));
        z = code - 3.0;
        break;
    }
    const double e1 = stream.normal();
    const double e2 = stream.normal();
    const double eps = e1;
    const double v = config.rho * e1 + cross * e2;

    const double index = 0.75 * (x - 0.5) + 0.75 * z;
    const bool selected = index > config.sigma * v;
    d.x(i, 0) = x;
    d.zc(i, 0) = x;
    if (continuous) {
      d.zc(i, 1) = z;
    } else {
      d.zd(i, 0) = code;
    }
    d.s[i] = selected ? 1 : 0;
    if (selected) d.y[i] = outcome_signal(config.outcome, x) + config.gamma1 * z + 0.5 * eps;
    out.oracle_p[i] = oracle_propensity(x, z, config.sigma);
    out.instrument[i] = z;
  }
  return out;
}

std::string to_string(TestKind k) {
  switch (k) {
    case TestKind::Test1: return "test1";
    case TestKind::Test2: return "test2";
    case TestKind::MeanTest: return "meantest";
  }
  return "unknown";
}

TestKind test_kind_from_string(std::string_view name) {
  if (name == "test1") return TestKind::Test1;
  if (name == "test2") return TestKind::Test2;
  if (name == "meantest") return TestKind::MeanTest;
  throw ConfigError("simulate", "unknown test '" + std::string(name) + "'");
}

namespace {

std::string alpha_key(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

nlohmann::json propensity_json(const PropensityOptions& p, bool oracle) {
  if (oracle) return "oracle";
  nlohmann::json j;
  j["h_z"] = p.h_z;
  j["lambda"] = p.lambda;
  j["cv_subset_size"] = p.cv.subset_size;
  j["cv_reps"] = p.cv.reps;
  return j;
}

std::string hx_method_name(HxMethod m) {
  switch (m) {
    case HxMethod::RuleOfThumb: return "rule-of-thumb";
    case HxMethod::CrossValidation: return "cross-validation";
    case HxMethod::Fixed: return "fixed";
  }
  return "unknown";
}

nlohmann::json quantile_json(const QuantileOptions& q) {
  return {{"r", q.r}, {"hx_method", hx_method_name(q.hx_method)}, {"c_x", q.c_x}, {"h_x", q.h_x},
          {"c_F", q.c_F}};
}

}  // namespace

nlohmann::json WarpSpeedConfig::to_json() const {
  nlohmann::json j;
  j["dgp"] = dgp.to_json();
  j["test"] = to_string(test);
  j["reps"] = reps;
  j["alphas"] = alphas;
  switch (test) {
    case TestKind::Test1:
      j["tuning"] = {{"tau_grid", test1.tau_grid},
                     {"trim_tail", test1.trim_tail},
                     {"quantile", quantile_json(test1.quantile)},
                     {"propensity", propensity_json(test1.propensity, oracle_propensity)},
                     {"max_cells", test1.max_cells}};
      break;
    case TestKind::Test2: {
      nlohmann::json t = {{"tau_grid", test2.tau_grid},
                          {"trim_tail", test2.trim_tail},
                          {"quantile", quantile_json(test2.quantile)},
                          {"propensity", propensity_json(test2.propensity, oracle_propensity)}};
      if (test2.delta) {
        t["delta"] = *test2.delta;
        t["h_p"] = *test2.h_p;
      } else {
        t["eta"] = {{"eta_grid", test2.eta.eta_grid},
                    {"epsilon", test2.eta.epsilon},
                    {"threshold", test2.eta.threshold},
                    {"C", test2.eta.C}};
      }
      j["tuning"] = t;
      break;
    }
    case TestKind::MeanTest:
      j["tuning"] = {{"trim_tail", meantest.trim_tail},
                     {"c_x", meantest.c_x},
                     {"h_x", meantest.h_x},
                     {"propensity", propensity_json(meantest.propensity, oracle_propensity)},
                     {"multiplier", to_string(meantest.multiplier)},
                     {"residual_scaling", to_string(meantest.residual_scaling)},
                     {"max_cells", meantest.max_cells}};
      break;
  }
  return j;
}

WarpSpeedConfig default_warp_speed(TestKind test) {
  WarpSpeedConfig c;
  c.test = test;
  const std::vector<double> taus{0.3, 0.5, 0.7};
  c.test1.tau_grid = taus;
  c.test1.trim_tail = 0.025;
  c.test1.quantile.r = 3;
  c.test1.R = 1;
  c.test2.tau_grid = taus;
  c.test2.trim_tail = 0.025;
  c.test2.quantile.r = 3;
  c.test2.R = 1;
  c.meantest.trim_tail = 0.025;
  c.meantest.R = 1;
  if (test == TestKind::MeanTest) c.dgp.outcome = OutcomeKind::QuadraticMean;
  return c;
}

nlohmann::json McResult::to_json() const {
  nlohmann::json j;
  j["reps"] = reps;
  j["failures"] = failures;
  nlohmann::json rates = nlohmann::json::object();
  for (const auto& [a, r] : rejection_rates) rates[alpha_key(a)] = r;
  j["rejection_rates"] = rates;
  nlohmann::json cvs = nlohmann::json::object();
  for (const auto& [a, v] : critical_values) cvs[alpha_key(a)] = v;
  j["critical_values"] = cvs;
  j["statistics"] = statistics;
  j["boot_draws"] = boot_draws;
  j["failure_messages"] = failure_messages;
  return j;
}

namespace {

struct RepOutcome {
  bool ok = false;
  double statistic = 0.0;
  double draw = 0.0;
  std::string message;
};

RepOutcome run_one(const WarpSpeedConfig& config, RngStream rep) {
  RepOutcome out;
  try {
    const SimulatedSample sample = generate_dgp(config.dgp, rep.child(0));
    const RngStream boot = rep.child(1).child(0);
    switch (config.test) {
      case TestKind::Test1: {
        Test1Config c = config.test1;
        c.threads = 1;
        if (config.oracle_propensity) c.propensity.oracle_p = sample.oracle_p;
        const Test1Problem problem(sample.data, c, rep);
        out.statistic = problem.statistic().statistic;
        out.draw = problem.bootstrap_draw(boot);
        break;
      }
      case TestKind::Test2: {
        Test2Config c = config.test2;
        c.threads = 1;
        if (config.oracle_propensity) c.propensity.oracle_p = sample.oracle_p;
        const Test2Problem problem(sample.data, c, rep);
        out.statistic = problem.statistic().statistic;
        out.draw = problem.bootstrap_draw(boot);
        break;
      }
      case TestKind::MeanTest: {
        MeanTestConfig c = config.meantest;
        c.threads = 1;
        if (config.oracle_propensity) c.propensity.oracle_p = sample.oracle_p;
        const MeanTestProblem problem(sample.data, c, rep);
        out.statistic = problem.statistic().statistic;
        out.draw = problem.bootstrap_draw(boot);
        break;
      }
    }
    out.ok = std::isfinite(out.statistic) && std::isfinite(out.draw);
    if (!out.ok) out.message = "non-finite statistic";
  } catch (const Error& e) {
    out.message = e.what();
  }
  return out;
}

}  // namespace

McResult run_warp_speed(const WarpSpeedConfig& config, RngStream stream) {
  if (config.reps < 1) throw ConfigError("simulate", "need at least one replication");
  validate_alphas(config.alphas);
  config.dgp.validate();
  std::vector<RepOutcome> outcomes(config.reps);
  parallel_for(config.reps, config.threads,
               [&](std::size_t r) { outcomes[r] = run_one(config, stream.child(r)); });

  McResult res;
  res.reps = config.reps;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (outcomes[r].ok) {
      res.statistics.push_back(outcomes[r].statistic);
      res.boot_draws.push_back(outcomes[r].draw);
    } else {
      ++res.failures;
      res.failure_messages.push_back("replication " + std::to_string(r) + ": " +
                                     outcomes[r].message);
    }
  }
  const double share = static_cast<double>(res.failures) / static_cast<double>(res.reps);
  if (res.statistics.empty() || share >= config.max_failure_share) {
    std::string msg = std::to_string(res.failures) + " of " + std::to_string(res.reps) +
                      " replications failed";
    if (!res.failure_messages.empty()) msg += "; first: " + res.failure_messages.front();
    throw DataError("simulate", msg);
  }
  for (double a : config.alphas) {
    const double cv = bootstrap_critical_value(res.boot_draws, a);
    std::size_t rejections = 0;
    for (double s : res.statistics) rejections += s > cv ? 1 : 0;
    res.critical_values[a] = cv;
    res.rejection_rates[a] =
        static_cast<double>(rejections) / static_cast<double>(res.statistics.size());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Tables

const ReferenceTable& reference_table(std::string_view id) {
  for (const auto& t : reference_tables()) {
    if (t.id == id) return t;
  }
  throw ConfigError("replicate", "unknown table id '" + std::string(id) + "'");
}

std::vector<std::string> table_ids() {
  std::vector<std::string> ids;
  for (const auto& t : reference_tables()) ids.push_back(t.id);
  return ids;
}

namespace {

const std::vector<double> kRhos{0.0, 0.25, 0.5};
const std::vector<double> kQuantileC{3.5, 4.0, 4.5};
const std::vector<double> kMeanC{0.125, 0.25, 0.5};

struct Window {
  double delta;
  double h_p;
};
const std::vector<Window> kWindows{{0.95, 0.075}, {0.95, 0.05}, {0.975, 0.03}, {0.98, 0.02}};

int case_number(std::string_view id, std::string_view prefix) {
  std::string roman(id.substr(prefix.size()));
  if (!roman.empty() && roman.back() == '*') roman.pop_back();
  static const std::vector<std::string> numerals{"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
  for (std::size_t k = 0; k < numerals.size(); ++k) {
    if (numerals[k] == roman) return static_cast<int>(k) + 1;
  }
  throw ConfigError("replicate", "unknown table id '" + std::string(id) + "'");
}

InstrumentDesign design_of_case(int k) {
  switch (k) {
    case 2: return InstrumentDesign::Binomial;
    case 3: return InstrumentDesign::Poisson;
    case 4: return InstrumentDesign::DiscreteUniform;
    default: return InstrumentDesign::Normal;
  }
}

}  // namespace

WarpSpeedConfig table_cell_config(std::string_view id, std::size_t column, std::size_t n) {
  const ReferenceTable& ref = reference_table(id);
  if (column >= ref.columns.size()) throw ConfigError("replicate", "column index out of range");
  WarpSpeedConfig c;
  if (id.starts_with("T1-case")) {
    const int k = case_number(id, "T1-case");
    c = default_warp_speed(TestKind::Test1);
    c.dgp.n = n;
    if (k <= 4) {
      c.dgp.design = design_of_case(k);
      c.dgp.rho = kRhos[column / 3];
      c.test1.quantile.c_x = kQuantileC[column % 3];
    } else if (k <= 6) {
      c.dgp.rho = kRhos[column];
      c.test1.quantile.hx_method = HxMethod::CrossValidation;
      c.oracle_propensity = k == 5;
    } else {
      c.dgp.design = k == 7 ? InstrumentDesign::Normal : InstrumentDesign::Binomial;
      c.dgp.gamma1 = column == 0 ? 0.25 : 0.5;
      c.test1.quantile.hx_method = HxMethod::CrossValidation;
    }
  } else if (id.starts_with("T2-case")) {
    const int k = case_number(id, "T2-case");
    c = default_warp_speed(TestKind::Test2);
    c.dgp.n = n;
    c.dgp.rho = 0.25;
    c.dgp.gamma1 = (k - 1) % 3 == 0 ? 0.0 : ((k - 1) % 3 == 1 ? 0.25 : 0.5);
    if (k <= 3) {
      c.dgp.design = InstrumentDesign::Normal;
      c.dgp.instrument_variance = 0.5;
    } else {
      c.dgp.design = InstrumentDesign::Binomial;
      c.dgp.sigma = 0.5;
    }
    if (column + 1 == ref.columns.size()) {
      c.test2.quantile.hx_method = HxMethod::CrossValidation;
    } else {
      const Window w = kWindows[column / 3];
      c.test2.delta = w.delta;
      c.test2.h_p = w.h_p;
      c.test2.quantile.c_x = kQuantileC[column % 3];
    }
  } else if (id.starts_with("S1-case")) {
    const int k = case_number(id, "S1-case");
    c = default_warp_speed(TestKind::MeanTest);
    c.dgp.n = n;
    c.dgp.design = k <= 4 ? design_of_case(k)
                          : (k == 5 ? InstrumentDesign::Normal : InstrumentDesign::Binomial);
    c.oracle_propensity = k <= 4;
    c.dgp.rho = kRhos[column / 3];
    c.meantest.c_x = kMeanC[column % 3];
  } else {
    throw ConfigError("replicate", "unknown table id '" + std::string(id) + "'");
  }
  return c;
}

nlohmann::json TableResult::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["title"] = title;
  j["reps"] = reps;
  j["failures"] = failures;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t k = 0; k < sample_sizes.size(); ++k) {
      nlohmann::json row;
      row["alpha"] = alphas[a];
      row["n"] = sample_sizes[k];
      nlohmann::json cells = nlohmann::json::array();
      for (std::size_t col = 0; col < columns.size(); ++col) {
        const std::size_t idx = (a * sample_sizes.size() + k) * columns.size() + col;
        nlohmann::json cell = {{"column", columns[col]}, {"rate", rates[idx]}};
        if (std::isnan(reference[idx])) {
          cell["reference"] = nullptr;
        } else {
          cell["reference"] = reference[idx];
        }
        cells.push_back(cell);
      }
      row["cells"] = cells;
      rows.push_back(row);
    }
  }
  j["rows"] = rows;
  return j;
}

TableResult replicate_table(std::string_view id, double scale, RngStream stream,
                            unsigned threads) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("replicate", "scale must lie in (0, 1]");
  const ReferenceTable& ref = reference_table(id);
  TableResult out;
  out.id = ref.id;
  out.title = ref.title;
  out.columns = ref.columns;
  out.sample_sizes = ref.sample_sizes;
  out.alphas = ref.alphas;
  out.reference = ref.values;
  out.rates.assign(ref.values.size(), std::numeric_limits<double>::quiet_NaN());
  const auto reps = static_cast<std::size_t>(std::max<long long>(20, std::llround(999.0 * scale)));
  out.reps = reps;
  std::uint64_t cell = 0;
  for (std::size_t k = 0; k < ref.sample_sizes.size(); ++k) {
    for (std::size_t col = 0; col < ref.columns.size(); ++col, ++cell) {
      WarpSpeedConfig c = table_cell_config(id, col, ref.sample_sizes[k]);
      c.reps = reps;
      c.alphas = ref.alphas;
      c.threads = threads;
      const McResult res = run_warp_speed(c, stream.child(cell));
      out.failures += res.failures;
      for (std::size_t a = 0; a < ref.alphas.size(); ++a) {
        const std::size_t idx = (a * ref.sample_sizes.size() + k) * ref.columns.size() + col;
        out.rates[idx] = res.rejection_rates.at(ref.alphas[a]);
      }
    }
  }
  return out;
}

std::string format_table(const TableResult& t) {
  std::ostringstream os;
  os << t.title << " [" << t.id << "], " << t.reps << " warp-speed replications per cell";
  if (t.failures > 0) os << ", " << t.failures << " failed";
  os << "\n";
  os << "cells: simulated (reference)\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-18s", "");
  os << buf;
  for (const auto& c : t.columns) {
    std::snprintf(buf, sizeof buf, " %16s", c.c_str());
    os << buf;
  }
  os << "\n";
  for (std::size_t a = 0; a < t.alphas.size(); ++a) {
    for (std::size_t k = 0; k < t.sample_sizes.size(); ++k) {
      std::snprintf(buf, sizeof buf, "alpha=%.2f n=%-6zu", t.alphas[a], t.sample_sizes[k]);
      os << buf;
      for (std::size_t col = 0; col < t.columns.size(); ++col) {
        const std::size_t idx = (a * t.sample_sizes.size() + k) * t.columns.size() + col;
        if (std::isnan(t.reference[idx])) {
          std::snprintf(buf, sizeof buf, " %9.3f (  -  )", t.rates[idx]);
        } else {
          std::snprintf(buf, sizeof buf, " %9.3f (%.3f)", t.rates[idx], t.reference[idx]);
        }
        os << buf;
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace selectest
