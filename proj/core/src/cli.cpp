#include "selectest/cli.hpp"

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "selectest/errors.hpp"
#include "selectest/io.hpp"
#include "selectest/meantest.hpp"
#include "selectest/montecarlo.hpp"
#include "selectest/parallel.hpp"
#include "selectest/test1.hpp"
#include "selectest/test2.hpp"

namespace selectest {

std::vector<double> parse_tau_grid(std::string_view spec) {
  auto number = [&](std::string_view s) {
    const auto v = parse_number(s);
    if (!v || !std::isfinite(*v)) {
      throw ConfigError("tau", "cannot parse '" + std::string(s) + "' in tau grid '" +
                                   std::string(spec) + "'");
    }
    return *v;
  };
  std::vector<double> taus;
  if (spec.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = spec.find(':', start)) != std::string_view::npos; start = pos + 1) {
      parts.push_back(spec.substr(start, pos - start));
    }
    parts.push_back(spec.substr(start));
    if (parts.size() != 3) throw ConfigError("tau", "expected start:stop:step, got '" + std::string(spec) + "'");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigError("tau", "invalid range '" + std::string(spec) + "'");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      taus.push_back(std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12);
    }
  } else {
    std::size_t start = 0;
    for (;;) {
      const std::size_t pos = spec.find(',', start);
      taus.push_back(number(spec.substr(start, pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0.0 && taus[k] < 1.0)) throw ConfigError("tau", "tau values must lie in (0,1)");
    if (k > 0 && !(taus[k] > taus[k - 1])) throw ConfigError("tau", "tau grid must be increasing");
  }
  return taus;
}

namespace {

struct DataArgs {
  std::string input;
  ColumnRoles roles;
  std::string oracle_p;
};

struct CommonArgs {
  std::vector<double> alphas{0.05, 0.10};
  std::size_t R = 399;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string output = "-";
  std::string format = "json";
  std::string plot;
  double trim = 0.0;
  std::string kernel = "epanechnikov";
  std::vector<double> h_z;
  std::vector<double> lambda;
};

struct QuantileArgs {
  std::string tau = "0.1:0.9:0.1";
  int r = 3;
  double c_x = 4.0;
  std::vector<double> h_x;
  bool hx_cv = false;
  double c_F = 2.2;
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--input,-i", d.input, "CSV file with a header row")->required();
  app->add_option("--outcome,-y", d.roles.outcome, "Outcome column")->required();
  app->add_option("--selection,-s", d.roles.selection, "Selection indicator column (0/1)")->required();
  app->add_option("--x", d.roles.x, "Covariate columns")->required()->delimiter(',');
  app->add_option("--zc", d.roles.zc, "Continuous selection-equation columns (may repeat x)")->delimiter(',');
  app->add_option("--zd", d.roles.zd, "Discrete instrument columns")->delimiter(',');
  app->add_option("--oracle-p", d.oracle_p, "Column with known propensity scores");
}

void add_common_options(CLI::App* app, CommonArgs& c) {
  app->add_option("--R", c.R, "Bootstrap replications")->check(CLI::PositiveNumber);
  app->add_option("--alpha", c.alphas, "Significance levels")->delimiter(',');
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--threads", c.threads, "Worker threads (default: SELECTEST_THREADS or all cores)");
  app->add_option("--output,-o", c.output, "Output path, '-' for stdout");
  app->add_option("--format", c.format, "json, csv (bootstrap draws) or text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  app->add_option("--plot", c.plot, "Also write an SVG profile plot to this path");
  app->add_option("--trim", c.trim, "Tail share of x trimmed on each side");
  app->add_option("--kernel", c.kernel, "epanechnikov, biweight or triweight");
  app->add_option("--h-z", c.h_z, "Propensity bandwidths for the zc columns")->delimiter(',');
  app->add_option("--lambda", c.lambda, "Propensity smoothing for the zd columns")->delimiter(',');
}

void add_quantile_options(CLI::App* app, QuantileArgs& q) {
  app->add_option("--tau", q.tau, "Quantile grid, start:stop:step or a list");
  app->add_option("--r", q.r, "Local polynomial order")->check(CLI::NonNegativeNumber);
  app->add_option("--c-x", q.c_x, "Scale of the rule-of-thumb bandwidth for x");
  app->add_option("--h-x", q.h_x, "Fixed bandwidths for x")->delimiter(',');
  app->add_flag("--hx-cv", q.hx_cv, "Cross-validate the bandwidth for x");
  app->add_option("--c-F", q.c_F, "Scale of the conditional CDF bandwidths");
}

unsigned resolve_threads(unsigned requested) {
  return requested > 0 ? requested : default_thread_count();
}

PropensityOptions propensity_options(const CommonArgs& c, const LoadedData& loaded) {
  PropensityOptions p;
  p.oracle_p = loaded.oracle_p;
  p.h_z = c.h_z;
  p.lambda = c.lambda;
  return p;
}

QuantileOptions quantile_options(const QuantileArgs& q) {
  QuantileOptions o;
  o.r = q.r;
  o.c_x = q.c_x;
  o.c_F = q.c_F;
  if (!q.h_x.empty()) {
    if (q.hx_cv) throw ConfigError("cli", "--h-x and --hx-cv are mutually exclusive");
    o.hx_method = HxMethod::Fixed;
    o.h_x = q.h_x;
  } else if (q.hx_cv) {
    o.hx_method = HxMethod::CrossValidation;
  }
  return o;
}

LoadedData load_data(DataArgs& d) {
  if (!d.oracle_p.empty()) d.roles.oracle_p = d.oracle_p;
  return load_csv(d.input, d.roles);
}

void emit(const TestReport& report, const CommonArgs& c) {
  emit_report(report, report_format_from_string(c.format), c.output);
  if (!c.plot.empty()) write_output(c.plot, plot_profile_svg(report));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric tests for sample selection in conditional quantiles and means"};
  app.name("selectest");
  app.require_subcommand(1);

  DataArgs data1, data2, datam;
  CommonArgs common1, common2, commonm;
  QuantileArgs quant1, quant2;

  auto* t1 = app.add_subcommand("test1", "Test for sample selection in conditional quantiles");
  add_data_options(t1, data1);
  add_common_options(t1, common1);
  add_quantile_options(t1, quant1);
  std::size_t max_cells1 = 200000;
  t1->add_option("--max-cells", max_cells1, "Largest exhaustive box-by-interval grid");

  auto* t2 = app.add_subcommand("test2", "Test of the quantile model near full selection");
  add_data_options(t2, data2);
  add_common_options(t2, common2);
  add_quantile_options(t2, quant2);
  std::optional<double> delta, h_p;
  EtaOptions eta;
  t2->add_option("--delta", delta, "Propensity threshold (with --h-p)");
  t2->add_option("--h-p", h_p, "Propensity window (with --delta)");
  t2->add_option("--eta-grid", eta.eta_grid, "Grid for the data-driven window")->delimiter(',');
  t2->add_option("--epsilon", eta.epsilon, "Window exponent epsilon");
  t2->add_option("--eta-threshold", eta.threshold, "Density threshold of the window scan");
  t2->add_option("--eta-C", eta.C, "Window scale constant");

  auto* tm = app.add_subcommand("meantest", "Test for sample selection in conditional means");
  add_data_options(tm, datam);
  add_common_options(tm, commonm);
  double c_xm = 0.25;
  std::vector<double> h_xm;
  std::string multiplier = "rademacher", scalingm = "leverage";
  std::size_t max_cellsm = 200000;
  tm->add_option("--c-x", c_xm, "Scale of the rule-of-thumb bandwidth for x");
  tm->add_option("--h-x", h_xm, "Fixed bandwidths for x")->delimiter(',');
  tm->add_option("--multiplier", multiplier, "rademacher or mammen")
      ->check(CLI::IsMember({"rademacher", "mammen"}));
  tm->add_option("--residual-scaling", scalingm, "leverage or none")
      ->check(CLI::IsMember({"leverage", "none"}));
  tm->add_option("--max-cells", max_cellsm, "Largest exhaustive box-by-interval grid");

  auto* sim = app.add_subcommand("simulate", "Warp-speed Monte Carlo for one design");
  std::string sim_test = "test1", sim_design = "normal", sim_format = "json", sim_output = "-";
  DgpConfig dgp;
  std::size_t sim_reps = 500;
  std::vector<double> sim_alphas{0.05, 0.10};
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 0;
  std::optional<double> sim_cx, sim_delta, sim_hp;
  bool sim_hx_cv = false, sim_estimated_p = false;
  std::string sim_scaling = "leverage";
  sim->add_option("--test", sim_test, "test1, test2 or meantest")
      ->check(CLI::IsMember({"test1", "test2", "meantest"}));
  sim->add_option("--design", sim_design, "normal, binomial, poisson or discrete-uniform")
      ->check(CLI::IsMember({"normal", "binomial", "poisson", "discrete-uniform"}));
  sim->add_option("--rho", dgp.rho, "Correlation of outcome and selection errors");
  sim->add_option("--gamma1", dgp.gamma1, "Coefficient of the omitted instrument");
  sim->add_option("--sigma", dgp.sigma, "Selection noise scale");
  sim->add_option("--n", dgp.n, "Sample size");
  sim->add_option("--instrument-variance", dgp.instrument_variance, "Variance of a normal instrument");
  sim->add_option("--reps", sim_reps, "Monte Carlo replications")->check(CLI::PositiveNumber);
  sim->add_option("--alpha", sim_alphas, "Significance levels")->delimiter(',');
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--threads", sim_threads, "Worker threads");
  sim->add_option("--c-x", sim_cx, "Scale of the rule-of-thumb bandwidth for x");
  sim->add_flag("--hx-cv", sim_hx_cv, "Cross-validate the bandwidth for x");
  sim->add_flag("--estimated-p", sim_estimated_p, "Estimate the propensity score");
  sim->add_option("--delta", sim_delta, "test2 threshold");
  sim->add_option("--h-p", sim_hp, "test2 window");
  sim->add_option("--residual-scaling", sim_scaling, "meantest bootstrap residuals: leverage or none")
      ->check(CLI::IsMember({"leverage", "none"}));
  sim->add_option("--format", sim_format, "json or text")->check(CLI::IsMember({"json", "text"}));
  sim->add_option("--output,-o", sim_output, "Output path");

  auto* rep = app.add_subcommand("replicate", "Replicate a simulation table at reduced scale");
  std::string table_id, rep_format = "text", rep_output = "-";
  double scale = 1.0;
  std::optional<std::uint64_t> rep_seed;
  unsigned rep_threads = 0;
  bool list_tables = false;
  rep->add_option("--table", table_id, "Table id, e.g. T1-caseI, T2-caseIV*, S1-caseII");
  rep->add_option("--scale", scale, "Share of the 999 replications to run");
  rep->add_option("--seed", rep_seed, "Random seed");
  rep->add_option("--threads", rep_threads, "Worker threads");
  rep->add_option("--format", rep_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  rep->add_option("--output,-o", rep_output, "Output path");
  rep->add_flag("--list", list_tables, "List the table ids");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*t1) {
      const LoadedData loaded = load_data(data1);
      Test1Config c;
      c.tau_grid = parse_tau_grid(quant1.tau);
      c.R = common1.R;
      c.alphas = common1.alphas;
      c.trim_tail = common1.trim;
      c.quantile = quantile_options(quant1);
      c.propensity = propensity_options(common1, loaded);
      c.max_cells = max_cells1;
      c.kernel.family = kernel_family_from_string(common1.kernel);
      c.threads = resolve_threads(common1.threads);
      emit(run_test1(loaded.data, c, RngStream(common1.seed, 0)), common1);
    } else if (*t2) {
      const LoadedData loaded = load_data(data2);
      Test2Config c;
      c.tau_grid = parse_tau_grid(quant2.tau);
      c.R = common2.R;
      c.alphas = common2.alphas;
      c.trim_tail = common2.trim;
      c.quantile = quantile_options(quant2);
      c.propensity = propensity_options(common2, loaded);
      c.delta = delta;
      c.h_p = h_p;
      c.eta = eta;
      c.kernel.family = kernel_family_from_string(common2.kernel);
      c.threads = resolve_threads(common2.threads);
      emit(run_test2(loaded.data, c, RngStream(common2.seed, 0)), common2);
    } else if (*tm) {
      const LoadedData loaded = load_data(datam);
      MeanTestConfig c;
      c.R = commonm.R;
      c.alphas = commonm.alphas;
      c.trim_tail = commonm.trim;
      c.c_x = c_xm;
      c.h_x = h_xm;
      c.propensity = propensity_options(commonm, loaded);
      c.multiplier = multiplier_from_string(multiplier);
      c.residual_scaling = residual_scaling_from_string(scalingm);
      c.max_cells = max_cellsm;
      c.kernel.family = kernel_family_from_string(commonm.kernel);
      c.threads = resolve_threads(commonm.threads);
      emit(run_meantest(loaded.data, c, RngStream(commonm.seed, 0)), commonm);
    } else if (*sim) {
      WarpSpeedConfig c = default_warp_speed(test_kind_from_string(sim_test));
      const OutcomeKind outcome = c.dgp.outcome;
      c.dgp = dgp;
      c.dgp.outcome = outcome;
      c.dgp.design = instrument_design_from_string(sim_design);
      c.reps = sim_reps;
      c.alphas = sim_alphas;
      c.oracle_propensity = !sim_estimated_p;
      c.threads = resolve_threads(sim_threads);
      if (sim_cx) {
        c.test1.quantile.c_x = *sim_cx;
        c.test2.quantile.c_x = *sim_cx;
        c.meantest.c_x = *sim_cx;
      }
      if (sim_hx_cv) {
        c.test1.quantile.hx_method = HxMethod::CrossValidation;
        c.test2.quantile.hx_method = HxMethod::CrossValidation;
      }
      c.test2.delta = sim_delta;
      c.test2.h_p = sim_hp;
      c.meantest.residual_scaling = residual_scaling_from_string(sim_scaling);
      const McResult res = run_warp_speed(c, RngStream(*sim_seed, 0));
      if (sim_format == "json") {
        nlohmann::json j = res.to_json();
        j["config"] = c.to_json();
        j["seed"] = *sim_seed;
        write_output(sim_output, j.dump(2) + "\n");
      } else {
        std::ostringstream os;
        os << to_string(c.test) << " warp-speed simulation, " << res.reps << " replications, "
           << res.failures << " failed, seed " << *sim_seed << "\n";
        for (const auto& [a, r] : res.rejection_rates) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "alpha=%.3f  rate=%.4f  cv=%.6f\n", a, r,
                        res.critical_values.at(a));
          os << buf;
        }
        write_output(sim_output, os.str());
      }
    } else if (*rep) {
      if (list_tables) {
        std::string s;
        for (const auto& id : table_ids()) s += id + "\n";
        write_output(rep_output, s);
        return 0;
      }
      if (table_id.empty()) throw ConfigError("replicate", "--table is required");
      if (!rep_seed) throw ConfigError("replicate", "--seed is required");
      const TableResult t =
          replicate_table(table_id, scale, RngStream(*rep_seed, 0), resolve_threads(rep_threads));
      if (rep_format == "json") {
        nlohmann::json j = t.to_json();
        j["seed"] = *rep_seed;
        j["scale"] = scale;
        write_output(rep_output, j.dump(2) + "\n");
      } else {
        write_output(rep_output, format_table(t));
      }
    }
  } catch (const Error& e) {
    err << "selectest: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "selectest: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace selectest
