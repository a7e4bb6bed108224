#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fleetpricer/config.hpp"
#include "fleetpricer/forecast.hpp"
#include "fleetpricer/market.hpp"
#include "fleetpricer/pricing.hpp"

namespace testing {

using namespace fleetpricer;

struct ToyParams {
  double price_lo = 50.0, price_hi = 150.0;
  double cost_ratio_lo = 0.3, cost_ratio_hi = 0.5;
  double demand_lo = 1.0, demand_hi = 10.0;
  double demand_cv = 0.2;
  double elasticity_lo = -2.5, elasticity_hi = -0.8;
  double elasticity_sd = 0.1;
  double expected_utilization = 70.0;
  // fleet = peak baseline on-rents * fleet_scale * 100 / u0
  double fleet_scale = 1.0;
};

inline GridDims dims(int n, int m, int l) { return GridDims{n, m, l}; }

/// Random instance with no realized cells.
inline PricingProblem toy_problem(GridDims d, std::uint64_t seed, const ToyParams& t = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const std::size_t n = d.cell_count();
  std::vector<double> price(n), cost(n), mean(n), sd(n), e(n), esd(n);
  for (std::size_t c = 0; c < n; ++c) {
    price[c] = draw(t.price_lo, t.price_hi);
    cost[c] = price[c] * draw(t.cost_ratio_lo, t.cost_ratio_hi);
    mean[c] = draw(t.demand_lo, t.demand_hi);
    sd[c] = t.demand_cv * mean[c];
    e[c] = draw(t.elasticity_lo, t.elasticity_hi);
    esd[c] = t.elasticity_sd;
  }
  std::vector<double> seg(d.segment_count(), -1.0);
  const Date first(20000);
  DemandForecast f;
  f.dims = d;
  f.first_pickup = first;
  f.as_of = first - d.max_abt;
  f.mean = mean;
  f.sd = sd;
  f.offers = mean;
  f.realized.assign(n, 0);

  // fleet from baseline on-rents so the band sits around u0
  std::vector<double> onrent(static_cast<std::size_t>(d.pickup_days), 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const CellIndex idx = decode_cell(d, c);
    for (int t2 = idx.pickup_day; t2 < std::min(d.pickup_days, idx.pickup_day + idx.lor); ++t2) {
      onrent[static_cast<std::size_t>(t2)] += mean[c];
    }
  }
  const double peak = *std::max_element(onrent.begin(), onrent.end());
  const int fleet = std::max(1, static_cast<int>(std::ceil(peak * t.fleet_scale * 100.0 / t.expected_utilization)));

  MarketGrid grid(d, std::vector<int>(static_cast<std::size_t>(d.pickup_days), fleet), price, cost, seg,
                  t.expected_utilization, first);
  PricingProblem p{.grid = std::move(grid), .forecast = std::move(f), .elasticity_mean = e, .elasticity_sd = esd};
  return p;
}

/// Tiny deterministic scenario for simulator-level tests.
inline RunConfig small_config(int n = 7, int m = 7, int l = 3) {
  RunConfig c = default_run_config();
  c.scenario.dims = GridDims{n, m, l};
  c.scenario.peak_rows = {5};
  c.scenario.fleet = 60;
  c.scenario.offer_rate = 6.0;
  c.history_days = 42;
  c.batch_days = 3;
  c.forecaster.window = 14;
  c.estimation.lor_edges = {1, 2};
  c.estimation.abt_edges = {0, 3};
  c.estimation.grouping.features = default_split_features(c.estimation.lor_edges, c.estimation.abt_edges);
  c.estimation.tvc_min_periods = 4;
  return c;
}

}  // namespace testing
