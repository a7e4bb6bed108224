#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fleetpricer/analysis.hpp"
#include "fleetpricer/error.hpp"
#include "support.hpp"

using namespace fleetpricer;
using testing::dims;
using testing::toy_problem;

TEST_CASE("opportunity cost is zero at the best choice") {
  const Choice c[] = {{"a", 3.5}, {"b", 7.25}, {"c", -1.0}, {"d", 7.25}};
  const auto oc = opportunity_cost(c);
  CHECK(oc[1] == 0.0);
  CHECK(oc[3] == 0.0);
  CHECK(oc[0] == 3.75);
  CHECK(oc[2] == 8.25);
  CHECK_THROWS_AS(opportunity_cost(std::span<const Choice>{}), Error);
}

TEST_CASE("risk aggregation") {
  const RiskDecision d[] = {{3.0, 4.0}, {0.0, 2.0}, {1.0, 0.0}};
  const RiskAggregate r = aggregate_risk(d);
  CHECK(r.per_decision[0].contribution == doctest::Approx(5.0));
  CHECK(r.total == doctest::Approx(8.0));
  const RiskAggregate n = aggregate_risk(d, true);
  // each normalized column has unit root mean square
  double s_bf = 0.0, s_e = 0.0;
  for (const auto& x : n.per_decision) {
    const double a = x.sigma_bf / std::sqrt((9.0 + 0.0 + 1.0) / 3.0);
    const double b = x.sigma_e / std::sqrt((16.0 + 4.0 + 0.0) / 3.0);
    CHECK(x.contribution == doctest::Approx(std::hypot(a, b)));
    s_bf += a * a;
    s_e += b * b;
  }
  CHECK(s_bf == doctest::Approx(3.0));
  CHECK(s_e == doctest::Approx(3.0));
  const RiskDecision bad[] = {{-1.0, 0.0}};
  CHECK_THROWS_AS(aggregate_risk(bad), Error);
}

TEST_CASE("fleet counterfactual laws") {
  int nonzero = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    PricingProblem p = toy_problem(dims(4, 3, 2), seed);
    p.band_a = 0.1;
    p.band_b = 0.9;
    const FleetCounterfactual f = fleet_opportunity_cost(p);
    // the relaxed program contains the constrained one
    PricingProblem relaxed = p;
    relaxed.utilization_constraints = false;
    const double pu = solve(relaxed).first.objective;
    const double pc = solve(p).first.objective;
    CHECK(pu >= pc - 1e-9 * std::abs(pc));
    CHECK(f.unconstrained_margin >= f.constrained_margin);
    if (!f.zero_delta_n) {
      ++nonzero;
      CHECK(std::abs(f.oc_per_vehicle - (f.unconstrained_margin - f.constrained_margin) / f.delta_n) <= 1e-9);
    } else {
      CHECK(f.oc_per_vehicle == 0.0);
    }
  }
  CHECK(nonzero > 0);
}

TEST_CASE("monte carlo: thread count does not change the result") {
  testing::ToyParams t;
  t.elasticity_sd = 0.2;
  const PricingProblem p = toy_problem(dims(3, 3, 2), 4, t);
  const auto x = heuristic_multipliers(p);
  MonteCarloOptions one;
  one.threads = 1;
  one.block_size = 1000;
  MonteCarloOptions many = one;
  many.threads = 7;
  const auto a = monte_carlo_eval(p, x, 20'000, 99, one);
  const auto b = monte_carlo_eval(p, x, 20'000, 99, many);
  CHECK(a.margin_mean == b.margin_mean);
  CHECK(a.margin_sd == b.margin_sd);
  CHECK(a.violation_frequency == b.violation_frequency);
  CHECK(a.utilization_mean == b.utilization_mean);
  const auto c = monte_carlo_eval(p, x, 20'000, 100, one);
  CHECK(c.margin_mean != a.margin_mean);
}

TEST_CASE("monte carlo converges to the analytic moments") {
  testing::ToyParams t;
  t.demand_lo = 20.0;
  t.demand_hi = 40.0;
  t.demand_cv = 0.1;
  t.elasticity_sd = 0.0;
  const PricingProblem p = toy_problem(dims(3, 2, 2), 6, t);
  std::vector<double> x(p.cells());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = 0.9 + 0.02 * static_cast<double>(c % 10);
  const PricingPolicy pol = evaluate_policy(p, x);
  const auto r = monte_carlo_eval(p, x, 200'000, 3);
  CHECK(r.samples == 200'000);
  // margin is linear in D, truncation at 0 is ten sds away
  const double se = std::sqrt(pol.margin_variance / 200'000.0);
  CHECK(std::abs(r.margin_mean - pol.expected_margin) < 5.0 * se);
  CHECK(r.margin_sd == doctest::Approx(std::sqrt(pol.margin_variance)).epsilon(0.01));
  for (std::size_t d = 0; d < pol.utilization.size(); ++d) {
    CHECK(r.utilization_mean[d] == doctest::Approx(pol.utilization[d]).epsilon(1e-3));
    CHECK(r.utilization_var[d] == doctest::Approx(pol.utilization_sd[d] * pol.utilization_sd[d]).epsilon(0.02));
  }
}

TEST_CASE("benchmark rows") {
  PricingProblem p = toy_problem(dims(3, 2, 2), 2);
  p.band_a = 0.1;
  p.band_b = 2.0;
  const auto opt = solve(p).first.multipliers;
  const std::vector<std::pair<std::string, std::vector<double>>> pols = {
      {"heuristic", heuristic_multipliers(p)}, {"optimized", opt}};
  const auto rows = benchmark(p, pols);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].opportunity_cost == 0.0);
  CHECK(rows[0].opportunity_cost == doctest::Approx(rows[1].objective - rows[0].objective));
  CHECK(rows[0].opportunity_cost >= 0.0);
  CHECK(rows[1].band_violations == 0);
}
