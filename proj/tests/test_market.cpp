#include <algorithm>
#include <set>

#include "doctest.h"
#include "fleetpricer/error.hpp"
#include "fleetpricer/market.hpp"
#include "support.hpp"

using namespace fleetpricer;

TEST_CASE("grid invariants are enforced") {
  CHECK_THROWS_AS(GridDims({0, 2, 2}).validate(), Error);
  const GridDims d{2, 2, 2};
  const std::vector<double> p(8, 10.0), c(8, 4.0), e(4, -1.0);
  CHECK_NOTHROW(MarketGrid(d, {5, 5}, p, c, e, 70.0));
  CHECK_THROWS_AS(MarketGrid(d, {5}, p, c, e, 70.0), Error);
  CHECK_THROWS_AS(MarketGrid(d, {5, 0}, p, c, e, 70.0), Error);
  CHECK_THROWS_AS(MarketGrid(d, {5, 5}, p, c, std::vector<double>(4, 0.5), 70.0), Error);
  std::vector<double> zero_price = p;
  zero_price[3] = 0.0;
  CHECK_THROWS_AS(MarketGrid(d, {5, 5}, zero_price, c, e, 70.0), Error);
}

TEST_CASE("cell indexing round trips") {
  const GridDims d{3, 4, 5};
  std::set<std::size_t> seen;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 1; k <= 5; ++k) {
        const std::size_t c = d.cell(i, j, k);
        const CellIndex idx = decode_cell(d, c);
        CHECK(idx.pickup_day == i);
        CHECK(idx.abt == j);
        CHECK(idx.lor == k);
        seen.insert(c);
      }
  CHECK(seen.size() == d.cell_count());
}

TEST_CASE("baseline price is the mean of matching rules") {
  HeuristicRuleSet rules;
  rules.rules = {HeuristicRule{{}, 50.0}, HeuristicRule{{{"peak_flag", "1"}}, 80.0},
                 HeuristicRule{{{"lor", "3"}, {"peak_flag", "1"}}, 110.0}};
  CHECK(baseline_price(rules, {{"peak_flag", "0"}, {"lor", "3"}}) == 50.0);
  CHECK(baseline_price(rules, {{"peak_flag", "1"}, {"lor", "2"}}) == 65.0);
  CHECK(baseline_price(rules, {{"peak_flag", "1"}, {"lor", "3"}}) == doctest::Approx(80.0));
  HeuristicRuleSet narrow;
  narrow.rules = {HeuristicRule{{{"car_group", "suv"}}, 90.0}};
  try {
    baseline_price(narrow, {{"car_group", "economy"}});
    FAIL("expected NoMatchingRule");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoMatchingRule);
  }
}

TEST_CASE("history is seeded and respects the randomization range") {
  const RunConfig c = testing::small_config();
  const MarketScenario s = make_scenario(c);
  RandomizationConfig r = c.randomization;
  const auto a = generate_history(s, r, 30);
  const auto b = generate_history(s, r, 30);
  CHECK(a == b);
  CHECK(a.size() == 30u * s.grid.dims().segment_count());
  for (const auto& rec : a) {
    CHECK(rec.offered_multiplier >= r.multiplier_low);
    CHECK(rec.offered_multiplier <= r.multiplier_high);
    CHECK(rec.reservations <= rec.offers);
    CHECK(rec.abt() >= 0);
    CHECK(rec.abt() < s.grid.dims().max_abt);
  }
  r.seed += 1;
  CHECK(generate_history(s, r, 30) != a);
  try {
    generate_history(s, r, s.grid.dims().max_abt - 1);
    FAIL("expected InvalidHorizon");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidHorizon);
  }
}

TEST_CASE("common random numbers: a higher price never sells more") {
  const RunConfig c = testing::small_config();
  const MarketScenario s = make_scenario(c);
  const auto& d = s.grid.dims();
  for (int b = 0; b < 10; ++b) {
    for (int j = 0; j < d.max_abt; ++j) {
      for (int k = 1; k <= d.max_lor; ++k) {
        const Date day = s.epoch + b;
        const CellOutcome lo = simulate_cell(s, 9, day, j, k, 0.85, 0.05);
        const CellOutcome mid = simulate_cell(s, 9, day, j, k, 1.0, 0.05);
        const CellOutcome hi = simulate_cell(s, 9, day, j, k, 1.15, 0.05);
        CHECK(lo.offers == hi.offers);
        CHECK(lo.reservations >= mid.reservations);
        CHECK(mid.reservations >= hi.reservations);
      }
    }
  }
}

TEST_CASE("noiseless path returns rounded expectations") {
  const RunConfig c = testing::small_config();
  const MarketScenario s = make_scenario(c);
  const auto& d = s.grid.dims();
  const double rate = s.offer_rate[d.cell(s.row_of(s.epoch + 2), 2, 1)];
  const CellOutcome o = simulate_cell(s, 1, s.epoch, 2, 1, 1.0, 0.0);
  CHECK(o.offers == std::llround(rate));
  CHECK(o.reservations == std::llround(o.offers * s.base_cvr[d.segment(2, 1)]));
}

TEST_CASE("on-rents count vehicles out on each day") {
  std::vector<BookingRecord> recs(2);
  recs[0].pickup_date = Date(10);
  recs[0].lor = 3;
  recs[0].reservations = 2;
  recs[1].pickup_date = Date(11);
  recs[1].lor = 1;
  recs[1].reservations = 5;
  CHECK(on_rents(recs, Date(9)) == 0);
  CHECK(on_rents(recs, Date(10)) == 2);
  CHECK(on_rents(recs, Date(11)) == 7);
  CHECK(on_rents(recs, Date(12)) == 2);
  CHECK(on_rents(recs, Date(13)) == 0);
}

TEST_CASE("seed mixing separates streams") {
  CHECK(mix_seed({1, 2, 3}) == mix_seed({1, 2, 3}));
  CHECK(mix_seed({1, 2, 3}) != mix_seed({1, 3, 2}));
  CHECK(mix_seed({0}) != mix_seed({0, 0}));
}
