#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fleetpricer/error.hpp"
#include "fleetpricer/oracle.hpp"
#include "fleetpricer/pricing.hpp"
#include "support.hpp"

using namespace fleetpricer;
using testing::dims;
using testing::toy_problem;

namespace {

PricingProblem single_cell(double elasticity) {
  testing::ToyParams t;
  t.cost_ratio_lo = t.cost_ratio_hi = 0.0;
  PricingProblem p = toy_problem(dims(1, 1, 1), 3, t);
  p.elasticity_mean = {elasticity};
  p.utilization_constraints = false;
  return p;
}

std::vector<double> random_policy(const PricingProblem& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(p.box_lo, p.box_hi);
  std::vector<double> x(p.cells());
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("demand response and margin") {
  CHECK(demand_response(10.0, -2.0, 1.0) == 10.0);
  CHECK(demand_response(10.0, -2.0, 1.1) == doctest::Approx(8.0));
  bool floored = false;
  CHECK(demand_response(10.0, -2.0, 1.6, &floored) == 0.0);
  CHECK(floored);
  CHECK(group_margin(10.0, 50.0, 20.0, -1.0, 1.0, CostMode::per_booking) == doctest::Approx(300.0));
  CHECK(group_margin(10.0, 50.0, 20.0, -1.0, 1.0, CostMode::fixed) == doctest::Approx(480.0));
  const SegmentInput segs[] = {{100.0, -1.5, 0.1, 55.0}, {50.0, -1.0, -0.1, 45.0}};
  const SegmentTotals t = segment_totals(segs, 20.0);
  CHECK(t.total_demand == doctest::Approx(85.0 + 55.0));
  CHECK(t.margin == doctest::Approx(t.revenue - t.cost));
}

TEST_CASE("baseline multiplier margin equals sum of D (P - C)") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PricingProblem p = toy_problem(dims(4, 3, 3), seed);
    const std::vector<double> ones(p.cells(), 1.0);
    const PricingPolicy pol = evaluate_policy(p, ones);
    double want = 0.0;
    for (std::size_t c = 0; c < p.cells(); ++c) {
      want += p.forecast.mean[c] * (p.grid.price()[c] - p.grid.cost()[c]);
    }
    CHECK(pol.expected_margin == want);
  }
}

TEST_CASE("utilization is affine in the multipliers") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> a(-0.5, 1.5);
  for (IndexSet set : {IndexSet::full_abt, IndexSet::paper_verbatim}) {
    PricingProblem p = toy_problem(dims(5, 4, 3), 2);
    p.index_set = set;
    for (int pair = 0; pair < 100; ++pair) {
      const auto x = random_policy(p, rng);
      const auto y = random_policy(p, rng);
      const double w = a(rng);
      std::vector<double> z(x.size());
      for (std::size_t c = 0; c < z.size(); ++c) z[c] = w * x[c] + (1.0 - w) * y[c];
      const auto ux = utilization(p, x), uy = utilization(p, y), uz = utilization(p, z);
      for (std::size_t t = 0; t < uz.size(); ++t) {
        CHECK(std::abs(uz[t] - (w * ux[t] + (1.0 - w) * uy[t])) <= 1e-9);
      }
    }
  }
}

TEST_CASE("utilization counts exactly the on-rent cells") {
  std::mt19937_64 rng(9);
  for (IndexSet set : {IndexSet::full_abt, IndexSet::paper_verbatim}) {
    PricingProblem p = toy_problem(dims(6, 3, 4), 4);
    p.index_set = set;
    p.carryover = {3.0, 2.0, 1.0, 0.0, 0.0, 0.0};
    const auto x = random_policy(p, rng);
    const auto u = utilization(p, x);
    for (int t = 0; t < 6; ++t) {
      double s = p.carryover[static_cast<std::size_t>(t)];
      for (std::size_t c = 0; c < p.cells(); ++c) {
        if (p.on_day(c, t)) s += demand_response(p.forecast.mean[c], p.elasticity_mean[c], x[c]);
      }
      CHECK(u[static_cast<std::size_t>(t)] == doctest::Approx(100.0 * s / p.grid.fleet()[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("single cell: interior vertex and box corner") {
  auto [a, ra] = solve(single_cell(-1.2));
  CHECK(a.multipliers[0] == doctest::Approx(2.2 / 2.4).epsilon(1e-9));
  CHECK(std::abs(a.multipliers[0] - 0.916667) <= 1e-6);
  CHECK(ra.status == QpStatus::optimal);
  auto [b, rb] = solve(single_cell(-2.0));
  CHECK(b.multipliers[0] == 0.85);
  for (QpMethod m : {QpMethod::admm, QpMethod::active_set}) {
    SolveOptions o;
    o.method = m;
    CHECK(solve(single_cell(-1.2), o).first.multipliers[0] == doctest::Approx(2.2 / 2.4).epsilon(1e-7));
  }
}

TEST_CASE("positive elasticity is rejected") {
  PricingProblem p = toy_problem(dims(2, 2, 2), 1);
  p.elasticity_mean[3] = 0.4;
  try {
    solve(p);
    FAIL("expected NonConcave");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConcave);
  }
}

TEST_CASE("solved policy respects box and band") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PricingProblem p = toy_problem(dims(5, 3, 3), seed);
    p.band_a = 0.1;
    p.band_b = 0.95;
    const auto [pol, rep] = solve(p);
    CHECK(rep.status == QpStatus::optimal);
    const double u0 = p.grid.expected_utilization();
    for (double u : pol.utilization) {
      CHECK(u <= p.band_b * u0 + 1e-6);
      CHECK(u >= p.band_a * u0 - 1e-6);
    }
    for (double x : pol.multipliers) {
      CHECK(x >= p.box_lo);
      CHECK(x <= p.box_hi);
    }
    // never worse than the baseline when the baseline is feasible
    const PricingPolicy h = evaluate_policy(p, heuristic_multipliers(p));
    if (std::all_of(h.utilization.begin(), h.utilization.end(),
                    [&](double u) { return u <= p.band_b * u0 && u >= p.band_a * u0; })) {
      CHECK(pol.objective >= h.objective - 1e-6 * std::abs(h.objective));
    }
  }
}

TEST_CASE("infeasible band throws") {
  PricingProblem p = toy_problem(dims(3, 2, 2), 5);
  p.band_a = 10.0;
  p.band_b = 10.0;
  try {
    solve(p);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("realized cells stay pinned") {
  PricingProblem p = toy_problem(dims(4, 3, 2), 8);
  for (std::size_t c = 0; c < p.cells(); c += 3) p.forecast.realized[c] = 1;
  p.forecast.sd.assign(p.cells(), 1.0);
  for (std::size_t c = 0; c < p.cells(); c += 3) p.forecast.sd[c] = 0.0;
  p.box_lo = 1.02;
  p.box_hi = 1.2;
  p.band_a = 0.01;
  const auto [pol, rep] = solve(p);
  for (std::size_t c = 0; c < p.cells(); c += 3) CHECK(pol.multipliers[c] == 1.02);
}

TEST_CASE("approximate normal cdf") {
  double worst = 0.0;
  for (int i = -6000; i <= 6000; ++i) {
    const double z = i * 1e-3;
    worst = std::max(worst, std::abs(normal_cdf_approx(z) - 0.5 * std::erfc(-z / std::sqrt(2.0))));
  }
  CHECK(worst < 1e-3);
  for (double q : {1e-6, 0.01, 0.05, 0.3, 0.5, 0.8, 0.95, 0.999}) {
    CHECK(normal_cdf_approx(normal_cdf_approx_inverse(q)) == doctest::Approx(q).epsilon(1e-10));
  }
  CHECK(normal_cdf_approx_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(normal_cdf_approx_inverse(0.0), Error);
  CHECK_THROWS_AS(normal_cdf_approx_inverse(1.0), Error);
}

TEST_CASE("day risk") {
  CHECK(day_risk(70.0, 0.0, 50.0) == 0.0);
  CHECK(day_risk(40.0, 0.0, 50.0) == 1.0);
  CHECK(day_risk(110.0, 0.0, 50.0) == 1.0);
  // symmetric about the midpoint of [c, 100]
  CHECK(day_risk(50.0, 10.0, 20.0) == doctest::Approx(day_risk(70.0, 10.0, 20.0)).epsilon(1e-12));
  CHECK(day_risk(75.0, 5.0, 50.0) < day_risk(75.0, 10.0, 50.0));
  CHECK(day_risk(100.0, 5.0, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("chance rows hold at the solution") {
  testing::ToyParams t;
  t.demand_cv = 0.3;
  PricingProblem p = toy_problem(dims(4, 3, 3), 12, t);
  p.grid = MarketGrid(p.grid.dims(), std::vector<int>(4, p.grid.fleet()[0] * 7 / 10 + 1),
                      std::vector<double>(p.grid.price().begin(), p.grid.price().end()),
                      std::vector<double>(p.grid.cost().begin(), p.grid.cost().end()),
                      std::vector<double>(p.grid.true_elasticity().begin(), p.grid.true_elasticity().end()),
                      80.0, p.grid.first_pickup());
  p.utilization_constraints = false;
  p.risk.chance_constraints = true;
  p.risk.affordable_p = 0.05;
  p.risk.threshold_c = 0.0;
  const auto [pol, rep] = solve(p);
  CHECK(rep.status == QpStatus::optimal);
  CHECK(rep.outer_loops >= 1);
  for (std::size_t d = 0; d < pol.utilization.size(); ++d) {
    const double upper = 1.0 - normal_cdf_approx((100.0 - pol.utilization[d]) / pol.utilization_sd[d]);
    CHECK(upper <= 0.05 + 1e-6);
  }
}

TEST_CASE("risk aversion trades margin for variance") {
  testing::ToyParams t;
  t.demand_cv = 0.4;
  t.elasticity_sd = 0.5;
  PricingProblem p = toy_problem(dims(3, 3, 2), 21, t);
  p.utilization_constraints = false;
  const auto [neutral, r0] = solve(p);
  p.risk.lambda = 1e-3;
  const auto [averse, r1] = solve(p);
  CHECK(r1.status == QpStatus::optimal);
  CHECK(averse.margin_variance <= neutral.margin_variance + 1e-9);
  CHECK(averse.expected_margin <= neutral.expected_margin + 1e-9);
}

TEST_CASE("lattice oracle: enumeration and branch-and-bound agree") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PricingProblem p = toy_problem(dims(2, 2, 2), seed);
    p.band_a = 0.2;
    p.band_b = 0.9;
    const OracleResult full = brute_force_oracle(p, 0.05);
    CHECK(full.exhaustive);
    OracleOptions bb;
    bb.enumeration_limit = 0;
    const OracleResult tree = brute_force_oracle(p, 0.05, bb);
    CHECK_FALSE(tree.exhaustive);
    CHECK(tree.objective == doctest::Approx(full.objective).epsilon(1e-12));
    CHECK(tree.nodes < full.nodes);
    // the continuous optimum can only be better
    const auto [pol, rep] = solve(p);
    CHECK(pol.objective >= full.objective - 1e-9 * std::abs(full.objective));
  }
}

TEST_CASE("oracle budget and infeasibility") {
  PricingProblem p = toy_problem(dims(3, 3, 3), 2);
  OracleOptions o;
  o.enumeration_limit = 0;
  o.node_budget = 10;
  try {
    brute_force_oracle(p, 0.001, o);
    FAIL("expected SearchSpaceTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SearchSpaceTooLarge);
  }
  PricingProblem q = toy_problem(dims(2, 1, 1), 2);
  q.band_a = q.band_b = 20.0;
  try {
    brute_force_oracle(q, 0.05);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("policy csv lists every cell") {
  const PricingProblem p = toy_problem(dims(2, 2, 2), 1);
  const auto [pol, rep] = solve(p);
  std::ostringstream os;
  write_policy_csv(os, p, pol);
  const std::string s = os.str();
  CHECK(s.rfind("pickup_day,abt,lor,multiplier,expected_demand,expected_margin\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + static_cast<long>(p.cells()));
}
