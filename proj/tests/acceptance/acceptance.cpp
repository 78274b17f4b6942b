// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.
// Arguments select criteria by number (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lp_oracle.hpp"
#include "naive.hpp"
#include "selectest/cli.hpp"
#include "selectest/errors.hpp"
#include "selectest/estimators.hpp"
#include "selectest/grid.hpp"
#include "selectest/meantest.hpp"
#include "selectest/montecarlo.hpp"
#include "selectest/quantreg.hpp"
#include "selectest/test1.hpp"
#include "selectest/test2.hpp"

using namespace selectest;
namespace st = selectest::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome solver_oracle() {
  RngStream rng(101, 0);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rng.below(2);
    const int r = static_cast<int>(rng.below(4));
    const PolynomialBasis basis(d, r);
    const std::size_t p = basis.size();
    const std::size_t n = std::min<std::size_t>(30, p + 2 + rng.below(25));
    const double tau = 0.05 + 0.9 * rng.uniform();
    std::vector<double> design, y, w, u(d), z(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : u) v = rng.uniform() - 0.5;
      basis.evaluate(u, z);
      design.insert(design.end(), z.begin(), z.end());
      y.push_back(std::round(4.0 * (u[0] + rng.normal())) / 4.0);
      w.push_back(0.1 + rng.uniform());
    }
    const auto sol = solve_weighted_quantile(design, p, y, w, tau);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = 0.0;
      for (std::size_t k = 0; k < p; ++k) f += design[i * p + k] * sol.coef[k];
      obj += w[i] * check_loss(y[i] - f, tau);
    }
    const double oracle = st::lp_quantile_objective(design, p, y, w, tau);
    const double rel = std::abs(obj - oracle) / std::max(1e-12, std::abs(oracle));
    worst = std::max(worst, rel);
    if (rel > 1e-6) ++bad;
  }
  return {bad == 0, std::to_string(200 - bad) + "/200 within 1e-6, worst relative gap " +
                        fmt("%.2e", worst)};
}

Outcome fast_path() {
  RngStream rng(102, 0);
  std::size_t bad = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t dx = 1 + inst % 2;
    const std::size_t n = 20 + rng.below(181);
    Dataset d = st::random_dataset(rng, n, dx);
    std::vector<double> phat(n);
    for (auto& p : phat) p = std::round(rng.uniform() * 20.0) / 20.0;
    const std::vector<double> taus{0.25, 0.5, 0.75};
    GridSpec grid = st::random_grid(rng, d, phat, taus, 3 + rng.below(6));
    grid.marginal = dx == 2 && inst % 4 == 1;
    const auto fits = st::random_fits(rng, d, taus);
    const auto fast = statistic_z1(d, fits, phat, grid);
    const auto slow = st::naive_z1(d, fits, phat, grid);
    bool same = fast.statistic == slow.statistic;
    for (std::size_t t = 0; t < taus.size(); ++t) same = same && fast.per_tau[t].value == slow.per_tau[t];
    std::vector<double> mhat(n, std::nan("")), fhat = mhat;
    for (std::size_t i = 0; i < n; ++i) {
      if (!d.s[i]) continue;
      mhat[i] = d.y[i] + 0.3 * rng.normal();
      fhat[i] = 0.5 + rng.uniform();
    }
    same = same && statistic_z1m(d, mhat, fhat, phat, grid).statistic ==
                       st::naive_z1m(d, mhat, fhat, phat, grid);
    if (!same) ++bad;
  }
  return {bad == 0, std::to_string(50 - bad) + "/50 instances bit-identical"};
}

// ---------------------------------------------------------------------------
// Warp-speed rates

McResult warp(WarpSpeedConfig c, std::size_t reps, std::uint64_t seed) {
  c.reps = reps;
  c.alphas = {0.05, 0.10};
  return run_warp_speed(c, RngStream(seed, 0));
}

WarpSpeedConfig test1_case1(double rho) {
  WarpSpeedConfig c = default_warp_speed(TestKind::Test1);
  c.dgp.n = 1000;
  c.dgp.rho = rho;
  c.test1.quantile.c_x = 4.0;
  return c;
}

McResult test1_rho0, test1_rho25, test1_rho5;
bool test1_done = false;

void run_test1_rates() {
  if (test1_done) return;
  test1_rho0 = warp(test1_case1(0.0), 500, 103);
  test1_rho25 = warp(test1_case1(0.25), 500, 104);
  test1_rho5 = warp(test1_case1(0.5), 500, 105);
  test1_done = true;
}

Outcome test1_size() {
  run_test1_rates();
  const double a5 = test1_rho0.rejection_rates.at(0.05), a10 = test1_rho0.rejection_rates.at(0.10);
  const bool ok = a5 >= 0.02 && a5 <= 0.16 && a10 >= 0.07 && a10 <= 0.24;
  return {ok, "rate " + fmt("%.3f", a5) + " at 0.05 (need [0.02,0.16]), " + fmt("%.3f", a10) +
                  " at 0.10 (need [0.07,0.24]), 500 reps"};
}

Outcome test1_power() {
  run_test1_rates();
  const double r0 = test1_rho0.rejection_rates.at(0.05);
  const double r1 = test1_rho25.rejection_rates.at(0.05);
  const double r2 = test1_rho5.rejection_rates.at(0.05);
  const bool monotone = r1 >= r0 - 0.02 && r2 >= r1 - 0.02;
  return {r2 >= 0.80 && monotone, "rho=0.5 rate " + fmt("%.3f", r2) + " (need >= 0.80); rho 0/0.25/0.5: " +
                                      fmt("%.3f", r0) + "/" + fmt("%.3f", r1) + "/" +
                                      fmt("%.3f", r2) + (monotone ? " monotone" : " not monotone")};
}

Outcome test1_misspecification() {
  const auto vii = warp(table_cell_config("T1-caseVII", 0, 1000), 100, 106);
  const auto viii = warp(table_cell_config("T1-caseVIII", 0, 1000), 100, 107);
  const double a = vii.rejection_rates.at(0.05), b = viii.rejection_rates.at(0.05);
  return {a >= 0.95 && b >= 0.95, "Case VII " + fmt("%.3f", a) + ", Case VIII " + fmt("%.3f", b) +
                                      " (need >= 0.95), 100 reps each, cross-validated h_x"};
}

Outcome test2_size() {
  const auto one = warp(table_cell_config("T2-caseI*", 0, 1000), 500, 108);
  const auto four = warp(table_cell_config("T2-caseIV*", 0, 1000), 500, 109);
  const double a = one.rejection_rates.at(0.05), b = four.rejection_rates.at(0.05);
  return {a >= 0.01 && a <= 0.13 && b <= 0.05,
          "Case I* " + fmt("%.3f", a) + " (need [0.01,0.13]), Case IV* " + fmt("%.3f", b) +
              " (need <= 0.05), 500 reps each"};
}

Outcome test2_power() {
  const auto three = warp(table_cell_config("T2-caseIII*", 0, 1000), 500, 110);
  const double a = three.rejection_rates.at(0.05);
  return {a >= 0.95, "Case III* " + fmt("%.3f", a) + " (need >= 0.95), 500 reps"};
}

Outcome mean_test() {
  const auto size = warp(table_cell_config("S1-caseI", 1, 1000), 1000, 111);
  const auto power = warp(table_cell_config("S1-caseI", 7, 1000), 1000, 112);
  const double a = size.rejection_rates.at(0.05), b = power.rejection_rates.at(0.05);
  return {a >= 0.02 && a <= 0.10 && b >= 0.80, "size " + fmt("%.3f", a) + " (need [0.02,0.10]), power " +
                                                   fmt("%.3f", b) + " (need >= 0.80), 1000 reps each"};
}

// ---------------------------------------------------------------------------

Outcome invariance() {
  std::size_t failed = 0, test2_compared = 0;
  std::string first;
  auto fail = [&](int inst, const std::string& what) {
    ++failed;
    if (first.empty()) first = "instance " + std::to_string(inst) + ": " + what;
  };
  for (int inst = 0; inst < 100; ++inst) {
    DgpConfig dgp;
    dgp.n = 250;
    dgp.rho = 0.25 * (inst % 3);
    dgp.design = inst % 2 ? InstrumentDesign::Binomial : InstrumentDesign::Normal;
    RngStream stream(200 + inst, 0);
    const auto sample = generate_dgp(dgp, stream.child(0));
    Dataset mapped = sample.data;
    for (std::size_t i = 0; i < mapped.n(); ++i) {
      if (mapped.s[i]) mapped.y[i] = 2.0 * mapped.y[i] + 3.0;
    }

    Test1Config c1;
    c1.tau_grid = {0.3, 0.5, 0.7};
    c1.trim_tail = 0.025;
    c1.propensity.oracle_p = sample.oracle_p;
    const Test1Problem a1(sample.data, c1, stream.child(1));
    const Test1Problem b1(mapped, c1, stream.child(1));
    if (!(a1.statistic().statistic == b1.statistic().statistic)) fail(inst, "test1 statistic");

    Test2Config c2;
    c2.tau_grid = c1.tau_grid;
    c2.trim_tail = 0.025;
    c2.propensity.oracle_p = sample.oracle_p;
    c2.delta = empirical_quantile(sample.oracle_p, 0.9);
    c2.h_p = 0.1;
    try {
      const Test2Problem a2(sample.data, c2, stream.child(2));
      const Test2Problem b2(mapped, c2, stream.child(2));
      if (!(a2.statistic().statistic == b2.statistic().statistic)) fail(inst, "test2 statistic");
      ++test2_compared;
    } catch (const InfeasibleError&) {
    }

    MeanTestConfig cm;
    cm.R = 49;
    cm.trim_tail = 0.025;
    cm.propensity.oracle_p = sample.oracle_p;
    const auto am = run_meantest(sample.data, cm, stream.child(3));
    const auto bm = run_meantest(mapped, cm, stream.child(3));
    if (!(am.p_value == bm.p_value)) fail(inst, "mean test p-value");

    // Multiplier indicators are monotone in tau.
    const std::vector<double> taus{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto B = wild_indicators(draw_uniforms(stream.child(4), dgp.n), taus);
    for (std::size_t t = 1; t < taus.size(); ++t) {
      for (std::size_t i = 0; i < dgp.n; ++i) {
        if (B[t][i] < B[t - 1][i]) {
          fail(inst, "indicator monotonicity");
          t = taus.size();
          break;
        }
      }
    }

    // A refined grid never lowers the sup.
    const auto& grid = a1.grid();
    GridSpec finer = grid;
    const double lo = finer.p_cutpoints[0], hi = finer.p_cutpoints[1];
    finer.p_cutpoints.insert(finer.p_cutpoints.begin() + 1, 0.5 * (lo + hi));
    const double x0 = finer.x_cutpoints[0][0], x1 = finer.x_cutpoints[0][1];
    finer.x_cutpoints[0].insert(finer.x_cutpoints[0].begin() + 1, 0.5 * (x0 + x1));
    const Dataset& prepared = a1.sample().data;
    if (statistic_z1(prepared, a1.fits(), a1.sample().phat, finer).statistic <
        a1.statistic().statistic) {
      fail(inst, "grid monotonicity");
    }

    // Estimated propensity and CDF values stay in [0,1].
    const std::vector<double> hz(sample.data.zc.cols, 0.3);
    std::vector<double> lam(sample.data.zd.cols, 0.2);
    const auto pf = fit_propensity(sample.data, hz, DiscreteKernelSpec{lam});
    for (double p : pf.phat) {
      if (!std::isnan(p) && !(p >= 0.0 && p <= 1.0)) {
        fail(inst, "propensity bounds");
        break;
      }
    }
    for (const auto& table : a1.cdf()) {
      for (double v : table.values) {
        if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0)) {
          fail(inst, "CDF bounds");
          break;
        }
      }
    }
  }
  return {failed == 0 && test2_compared >= 90,
          std::to_string(100 - failed) + "/100 instances pass, test2 compared on " +
              std::to_string(test2_compared) +
                           (first.empty() ? "" : "; first failure " + first)};
}

Outcome construction_check() {
  DgpConfig dgp;
  dgp.n = 100000;
  const auto sample = generate_dgp(dgp, RngStream(113, 0));
  const Dataset& d = sample.data;
  std::vector<double> p;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.s[i]) p.push_back(sample.oracle_p[i]);
  }
  std::vector<double> edges{-1.0};
  for (double q : {0.2, 0.4, 0.6, 0.8}) edges.push_back(empirical_quantile(p, q));
  edges.push_back(2.0);
  double worst = 0.0;
  for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (std::size_t b = 0; b < 5; ++b) {
      double hits = 0.0, count = 0.0;
      for (std::size_t i = 0; i < d.n(); ++i) {
        const double pi = sample.oracle_p[i];
        if (!d.s[i] || pi <= edges[b] || pi > edges[b + 1]) continue;
        count += 1.0;
        hits += d.y[i] <= true_conditional_quantile(d.x(i, 0), tau);
      }
      worst = std::max(worst, std::abs(hits / count - tau));
    }
  }
  return {worst <= 0.03, "largest |Pr(y <= q_tau | p-bin) - tau| = " + fmt("%.4f", worst) +
                             " over 5 quintile bins and tau 0.1..0.9 (need <= 0.03)"};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "selectest_acceptance";
  fs::create_directories(dir);
  std::size_t runs = 0, mismatches = 0;
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  auto run = [&](std::vector<std::string> args, const std::string& threads) {
    const fs::path out = dir / ("run" + std::to_string(runs++) + ".out");
    args.insert(args.end(), {"--threads", threads, "--output", out.string()});
    std::ostringstream o, e;
    if (run_cli(args, o, e) != 0) return std::string("error: ") + e.str();
    return read(out);
  };
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--test", "test1", "--n", "400", "--reps", "8", "--seed", "1", "--format", "json"},
      {"simulate", "--test", "test2", "--n", "600", "--reps", "8", "--seed", "2", "--delta", "0.9",
       "--h-p", "0.1", "--format", "json"},
      {"simulate", "--test", "meantest", "--n", "400", "--reps", "20", "--seed", "3", "--estimated-p"},
      {"replicate", "--table", "S1-caseII", "--scale", "0.001", "--seed", "4", "--format", "json"},
  };
  for (const auto& cmd : commands) {
    const std::string ref = run(cmd, "1");
    if (ref.rfind("error", 0) == 0) ++mismatches;
    for (const char* t : {"1", "2", "4"}) {
      if (run(cmd, t) != ref) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(commands.size()) + " commands x 4 runs (threads 1,1,2,4), " +
                               std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "solver oracle equivalence", solver_oracle},
      {2, "fast-path equivalence", fast_path},
      {3, "test1 size", test1_size},
      {4, "test1 power", test1_power},
      {5, "test1 misspecification power", test1_misspecification},
      {6, "test2 size", test2_size},
      {7, "test2 power", test2_power},
      {8, "mean test size and power", mean_test},
      {9, "invariance suite", invariance},
      {10, "construction check", construction_check},
      {11, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::stoi(argv[k]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
