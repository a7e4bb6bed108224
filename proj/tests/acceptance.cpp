#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fleetpricer/analysis.hpp"
#include "fleetpricer/batch.hpp"
#include "fleetpricer/config.hpp"
#include "fleetpricer/ols.hpp"
#include "fleetpricer/oracle.hpp"
#include "fleetpricer/pricing.hpp"
#include "fleetpricer/tvc.hpp"
#include "support.hpp"

using namespace fleetpricer;
using testing::dims;
using testing::toy_problem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// 1
Outcome qp_vs_oracle() {
  double worst_gap = -1e300, slowest = 0.0;
  int binding = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PricingProblem p = toy_problem(dims(3, 2, 2), seed);
    p.box_lo = 0.85;
    p.box_hi = 1.15;
    p.band_a = 0.3;
    p.band_b = 1.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto [pol, rep] = solve(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    const OracleResult o = brute_force_oracle(p, 0.005);
    const double gap = (o.objective - pol.objective) / std::abs(o.objective);
    worst_gap = std::max(worst_gap, gap);
    const double umax = *std::max_element(pol.utilization.begin(), pol.utilization.end());
    if (umax >= p.band_b * p.grid.expected_utilization() - 1e-6) ++binding;
    if (rep.status != QpStatus::optimal) return {false, "seed " + std::to_string(seed) + " not optimal"};
  }
  return {worst_gap <= 1e-3 && slowest < 1.0,
          "worst (oracle - qp)/|oracle| = " + f6(worst_gap) + ", slowest solve " + f6(slowest) +
              " s, band binding on " + std::to_string(binding) + "/10"};
}

PricingProblem single_cell(double elasticity) {
  testing::ToyParams t;
  t.cost_ratio_lo = t.cost_ratio_hi = 0.0;
  PricingProblem p = toy_problem(dims(1, 1, 1), 3, t);
  p.elasticity_mean = {elasticity};
  p.utilization_constraints = false;
  return p;
}

// 2
Outcome analytic_optimum() {
  const double a = solve(single_cell(-1.2)).first.multipliers[0];
  const double b = solve(single_cell(-2.0)).first.multipliers[0];
  return {std::abs(a - 0.916667) <= 1e-6 && b == 0.85,
          "eps=-1.2 -> " + f6(a) + ", eps=-2 -> " + f6(b)};
}

// 3
Outcome utilization_affinity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> w(-1.0, 2.0);
  double worst = 0.0;
  PricingProblem p = toy_problem(dims(7, 5, 4), 17);
  std::uniform_real_distribution<double> box(p.box_lo, p.box_hi);
  for (int pair = 0; pair < 100; ++pair) {
    std::vector<double> x(p.cells()), y(p.cells()), z(p.cells());
    for (auto& v : x) v = box(rng);
    for (auto& v : y) v = box(rng);
    const double a = w(rng);
    for (std::size_t c = 0; c < z.size(); ++c) z[c] = a * x[c] + (1.0 - a) * y[c];
    const auto ux = utilization(p, x), uy = utilization(p, y), uz = utilization(p, z);
    for (std::size_t t = 0; t < uz.size(); ++t) {
      worst = std::max(worst, std::abs(uz[t] - (a * ux[t] + (1.0 - a) * uy[t])));
    }
  }
  return {worst <= 1e-9, "max deviation " + f6(worst) + " over 100 pairs"};
}

// 4
Outcome chance_calibration() {
  testing::ToyParams t;
  t.elasticity_sd = 0.0;
  t.expected_utilization = 80.0;
  t.demand_lo = 20.0;
  t.demand_hi = 40.0;
  t.demand_cv = 0.2;
  t.fleet_scale = 0.88;
  PricingProblem p = toy_problem(dims(7, 3, 3), 4, t);
  p.utilization_constraints = false;
  p.risk.chance_constraints = true;
  p.risk.affordable_p = 0.05;
  p.risk.threshold_c = 0.0;
  const auto [pol, rep] = solve(p);
  const MonteCarloResult mc = monte_carlo_eval(p, pol.multipliers, 100'000, 7);
  // binding days: the upper chance row is active at the solution
  const double z = normal_cdf_approx_inverse(0.95);
  double lo = 1.0, hi = 0.0;
  int active = 0;
  for (std::size_t d = 0; d < pol.utilization.size(); ++d) {
    if (pol.utilization[d] + z * pol.utilization_sd[d] >= 100.0 - 1e-6) {
      ++active;
      lo = std::min(lo, mc.violation_frequency[d]);
      hi = std::max(hi, mc.violation_frequency[d]);
    }
  }
  const double overall = *std::max_element(mc.violation_frequency.begin(), mc.violation_frequency.end());
  return {active > 0 && lo >= 0.03 && hi <= 0.07 && overall <= 0.07,
          std::to_string(active) + " binding days, frequency range [" + f6(lo) + ", " + f6(hi) +
              "], outer loops " + std::to_string(rep.outer_loops)};
}

// 5
Outcome cdf_approximation() {
  double worst = 0.0;
  for (int i = -6000; i <= 6000; ++i) {
    const double z = i * 1e-3;
    worst = std::max(worst, std::abs(normal_cdf_approx(z) - 0.5 * std::erfc(-z / std::sqrt(2.0))));
  }
  return {worst < 1e-3, "max error " + f6(worst)};
}

MarketScenario flat_scenario(RunConfig& c, double elasticity, int n, int m, int l, double offers) {
  c.scenario.dims = GridDims{n, m, l};
  c.scenario.peak_rows = {};
  c.scenario.elasticity_min = elasticity;
  c.scenario.elasticity_max = elasticity;
  c.scenario.offer_rate = offers;
  return make_scenario(c);
}

// 6
Outcome elasticity_recovery() {
  RunConfig c = default_run_config();
  const MarketScenario s = flat_scenario(c, -1.5, 7, 7, 1, 200.0);
  RandomizationConfig r;
  r.seed = 606;
  r.randomized_fraction = 1.0;
  auto hist = generate_history(s, r, 715);
  hist.resize(5000);
  const RegressionResult fit = fit_loglog(conversion_points(hist));

  RandomizationConfig e = r;
  e.randomized_fraction = 0.0;
  e.endogenous = true;
  e.demand_shock_sd = 0.25;
  auto ehist = generate_history(s, e, 715);
  ehist.resize(5000);
  const RegressionResult biased = fit_loglog(conversion_points(ehist));
  const bool ok = std::abs(fit.slope + 1.5) <= 0.1 && fit.slope_pvalue < 0.01 && biased.slope > -1.5 + 0.3;
  return {ok, "randomized slope " + f6(fit.slope) + " (p " + f6(fit.slope_pvalue) + ", n " +
                  std::to_string(fit.n) + "), endogenous slope " + f6(biased.slope)};
}

// 7
Outcome rmse_ordering() {
  RunConfig c = default_run_config();
  c.scenario.drift.per_day = -0.004;
  c.scenario.drift.amplitude = 0.25;
  c.scenario.drift.period_days = 7.0;
  MarketScenario s = flat_scenario(c, -1.0, 7, 7, 3, 1000.0);
  RandomizationConfig r;
  r.seed = 707;
  const auto hist = generate_history(s, r, 400);
  const TvcSeries series = tvc_series_from_records(hist, s.epoch, 1, 0.01);
  const auto slopes = per_period_slopes(series);
  std::vector<double> betas, rpd;
  for (std::size_t t = 0; t < slopes.size(); ++t) {
    if (!slopes[t]) continue;
    betas.push_back(slopes[t]->slope);
    rpd.push_back(series.periods[t].rpd);
  }
  ForecastConfig fc;
  fc.seasonal_order = 3;
  fc.seasonal_period = 7.0;
  fc.use_regressor = true;
  const CvReport cv = rolling_cv(betas, rpd, 60, 1, 1, fc);
  const bool ok = cv.rmse_model < cv.rmse_naive_t1 && cv.rmse_naive_t1 < cv.rmse_static_mean;
  return {ok, "rmse model " + f6(cv.rmse_model) + " < naive " + f6(cv.rmse_naive_t1) + " < static mean " +
                  f6(cv.rmse_static_mean) + " over " + std::to_string(cv.folds.size()) + " folds"};
}

// 8
Outcome opportunity_cost_laws() {
  const Choice choices[] = {{"a", 12.5}, {"b", 40.25}, {"c", -3.0}};
  const bool zero = opportunity_cost(choices)[1] == 0.0;
  int pu_ge_pc = 0, checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PricingProblem p = toy_problem(dims(4, 3, 2), 100 + seed);
    p.band_a = 0.1;
    p.band_b = 0.9;
    const FleetCounterfactual f = fleet_opportunity_cost(p);
    PricingProblem relaxed = p;
    relaxed.utilization_constraints = false;
    const double pu = solve(relaxed).first.objective;
    const double pc = solve(p).first.objective;
    if (pu >= pc - 1e-9 * std::abs(pc) && f.unconstrained_margin >= f.constrained_margin) ++pu_ge_pc;
    if (!f.zero_delta_n) {
      ++checked;
      worst = std::max(worst, std::abs(f.oc_per_vehicle -
                                       (f.unconstrained_margin - f.constrained_margin) / f.delta_n));
    }
  }
  return {zero && pu_ge_pc == 20 && checked > 0 && worst <= 1e-9,
          "OC(argmax)=" + std::string(zero ? "0" : "nonzero") + ", P_u>=P_c on " + std::to_string(pu_ge_pc) +
              "/20, OC_vehicle error " + f6(worst) + " on " + std::to_string(checked) + " instances"};
}

// 9
Outcome baseline_identity() {
  int exact = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const PricingProblem p = toy_problem(dims(5, 4, 3), 900 + seed);
    const PricingPolicy pol = evaluate_policy(p, std::vector<double>(p.cells(), 1.0));
    double want = 0.0;
    for (std::size_t c = 0; c < p.cells(); ++c) {
      want += p.forecast.mean[c] * (p.grid.price()[c] - p.grid.cost()[c]);
    }
    if (pol.expected_margin == want) ++exact;
  }
  return {exact == 25, std::to_string(exact) + "/25 exact"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10
Outcome batch_determinism() {
  const RunConfig c = default_run_config();
  const fs::path root = fs::temp_directory_path() / "fleetpricer_acceptance";
  fs::remove_all(root);
  const BatchState a = run_batch(c);
  export_batch(a, c, root / "a");
  const BatchState b = run_batch(c);
  export_batch(b, c, root / "b");
  bool same = true;
  for (const char* f : {"records.csv", "forecast.csv", "policy.csv", "benchmark.csv", "report.svg", "run.json"}) {
    same = same && slurp(root / "a" / f) == slurp(root / "b" / f);
  }
  const double opt = a.cumulative_margin(), heu = a.cumulative_heuristic_margin();
  int fallbacks = 0;
  for (const auto& h : a.history) fallbacks += h.fallback ? 1 : 0;
  return {same && a.history.size() == 30 && opt >= heu,
          std::string(same ? "byte-identical" : "outputs differ") + ", optimized " + f6(opt) +
              " vs heuristic " + f6(heu) + ", fallback days " + std::to_string(fallbacks)};
}

// 11
Outcome tvc_tracking() {
  constexpr int periods = 24, week = 7;
  RunConfig c = default_run_config();
  c.scenario.drift.per_day = -1.0 / (periods * week - 1);
  MarketScenario s = flat_scenario(c, -1.0, 7, 7, 3, 200.0);
  RandomizationConfig r;
  r.seed = 1111;
  const auto hist = generate_history(s, r, periods * week);
  const TvcSeries series = tvc_series_from_records(hist, s.epoch, week, 0.01);
  TvcOptions o;
  o.prior_mean = -1.0;
  const TvcPosterior post = fit_tvc(series, o);
  double worst = 0.0;
  for (int t = 0; t < periods; ++t) {
    double truth = 0.0;
    for (int d = 0; d < week; ++d) truth += s.true_elasticity(s.epoch + t * week + d, 0, 1);
    truth /= week;
    worst = std::max(worst, std::abs(post.beta_mean[static_cast<std::size_t>(t)] - truth));
  }

  // constant slope, no state noise: the smoother collapses to the pooled
  // within-period least-squares slope
  RunConfig k = default_run_config();
  MarketScenario flat = flat_scenario(k, -1.4, 7, 7, 3, 200.0);
  const auto fh = generate_history(flat, r, periods * week);
  const TvcSeries fs_ = tvc_series_from_records(fh, flat.epoch, week, 0.01);
  std::vector<double> x, y;
  for (const auto& per : fs_.periods) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < per.design.size(); ++i) {
      mx += per.design[i];
      my += per.response[i];
    }
    mx /= static_cast<double>(per.design.size());
    my /= static_cast<double>(per.design.size());
    for (std::size_t i = 0; i < per.design.size(); ++i) {
      x.push_back(per.design[i] - mx);
      y.push_back(per.response[i] - my);
    }
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  const double pooled = sxy / sxx;
  TvcOptions z;
  z.prior_mean = -1.0;
  z.state_sd = 0.0;
  const TvcPosterior still = fit_tvc(fs_, z);
  double spread = 0.0;
  for (double b : still.beta_mean) spread = std::max(spread, std::abs(b - pooled));
  return {worst <= 0.25 && spread <= 1e-3,
          "drift max error " + f6(worst) + " over " + std::to_string(periods) +
              " periods; state_sd=0 vs pooled " + f6(pooled) + ": " + f6(spread)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"QP objective within 1e-3 of the lattice oracle", qp_vs_oracle},
      {"single-cell analytic optimum", analytic_optimum},
      {"utilization is affine in multipliers", utilization_affinity},
      {"chance-constraint calibration", chance_calibration},
      {"logistic CDF approximation error", cdf_approximation},
      {"elasticity recovery and endogeneity bias", elasticity_recovery},
      {"elasticity forecast RMSE ordering", rmse_ordering},
      {"opportunity-cost laws", opportunity_cost_laws},
      {"baseline margin identity", baseline_identity},
      {"batch determinism and dominance", batch_determinism},
      {"time-varying slope tracking", tvc_tracking},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("criterion %2zu %s: %s | %s (%.2fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
