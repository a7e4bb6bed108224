#include <cmath>
#include <random>

#include "doctest.h"
#include "fleetpricer/error.hpp"
#include "fleetpricer/grouping.hpp"

using namespace fleetpricer;

namespace {

// Expected-value records: conversion follows m^slope exactly, so fits are
// tight and only the data volume decides acceptance.
std::vector<BookingRecord> synthetic(int lor, double slope, int count, double noise, std::uint64_t seed,
                                     bool peak = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.85, 1.15);
  std::normal_distribution<double> z(0.0, noise);
  std::vector<BookingRecord> out;
  for (int i = 0; i < count; ++i) {
    BookingRecord r;
    r.booking_date = Date(100 + i % 20);
    r.pickup_date = r.booking_date + (i % 10);
    r.lor = lor;
    r.offered_multiplier = u(rng);
    r.offers = 1000;
    r.reservations = static_cast<int>(std::lround(200.0 * std::pow(r.offered_multiplier, slope) * std::exp(z(rng))));
    r.revenue_per_day = 50.0 * r.offered_multiplier;
    r.branch_type = "airport";
    r.car_group = "economy";
    r.peak = peak;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("band labels") {
  const std::vector<int> edges{1, 3, 6};
  CHECK(band_label(1, edges) == "1-2");
  CHECK(band_label(2, edges) == "1-2");
  CHECK(band_label(5, edges) == "3-5");
  CHECK(band_label(9, edges) == "6+");
  CHECK(band_label(0, edges) == "<1");
}

TEST_CASE("tree accepts well-identified groups and falls back otherwise") {
  auto data = synthetic(1, -0.9, 400, 0.02, 1);
  const auto long_rent = synthetic(7, -2.2, 400, 0.02, 2);
  const auto thin = synthetic(4, -1.5, 3, 0.4, 3);
  data.insert(data.end(), long_rent.begin(), long_rent.end());
  data.insert(data.end(), thin.begin(), thin.end());

  GroupingConfig cfg;
  cfg.features = default_split_features({1, 3, 6}, {0, 100});
  const GroupingNode root = build_grouping_tree(data, cfg);
  REQUIRE(root.estimate);

  FeatureMap short_cov{{"branch_type", "airport"}, {"car_group", "economy"}, {"peak_flag", "0"},
                       {"lor_band", "1-2"}, {"abt_band", "0-99"}};
  CHECK(resolve_elasticity(root, short_cov).slope == doctest::Approx(-0.9).epsilon(0.03));
  FeatureMap long_cov = short_cov;
  long_cov["lor_band"] = "6+";
  CHECK(resolve_elasticity(root, long_cov).slope == doctest::Approx(-2.2).epsilon(0.03));

  // three points with large noise fail the p-value rule; the parent stands
  FeatureMap mid_cov = short_cov;
  mid_cov["lor_band"] = "3-5";
  const Elasticity mid = resolve_elasticity(root, mid_cov);
  const Elasticity parent = resolve_elasticity(
      root, {{"branch_type", "airport"}, {"car_group", "economy"}, {"peak_flag", "0"}});
  CHECK(mid.slope == parent.slope);
  CHECK(mid.slope_se == parent.slope_se);

  // unknown category falls back to the nearest accepted ancestor
  FeatureMap other = short_cov;
  other["car_group"] = "suv";
  CHECK(resolve_elasticity(root, other).slope == root.resolved.slope);
}

TEST_CASE("split covariates follow the configured features") {
  GroupingConfig cfg;
  cfg.features = default_split_features({1, 3}, {0, 7});
  BookingRecord r;
  r.booking_date = Date(10);
  r.pickup_date = Date(19);
  r.lor = 4;
  r.branch_type = "city";
  r.car_group = "van";
  r.peak = true;
  const FeatureMap m = split_covariates(r, cfg);
  CHECK(m.at("branch_type") == "city");
  CHECK(m.at("car_group") == "van");
  CHECK(m.at("peak_flag") == "1");
  CHECK(m.at("lor_band") == "3+");
  CHECK(m.at("abt_band") == "7+");
}

TEST_CASE("every node records a resolved estimate that passes the rule") {
  auto data = synthetic(1, -1.2, 200, 0.05, 4);
  const auto peak = synthetic(2, -1.6, 200, 0.05, 5, true);
  data.insert(data.end(), peak.begin(), peak.end());
  GroupingConfig cfg;
  const GroupingNode root = build_grouping_tree(data, cfg);
  std::function<void(const GroupingNode&)> walk = [&](const GroupingNode& n) {
    if (n.accepted && n.estimate) {
      CHECK(n.estimate->slope_pvalue < cfg.p_threshold);
      CHECK(n.estimate->slope_se * n.estimate->slope_se <= cfg.var_threshold);
      CHECK(n.resolved.slope == n.estimate->slope);
    }
    CHECK(n.revenue_share >= 0.0);
    CHECK(n.revenue_share <= 1.0);
    for (const auto& c : n.children) walk(c);
  };
  walk(root);
  const auto j = grouping_to_json(root, cfg);
  CHECK(j.contains("children"));
}

TEST_CASE("binned conversion keeps zero-sale offers") {
  std::vector<BookingRecord> recs(3);
  recs[0].offered_multiplier = 1.001;
  recs[0].offers = 3;
  recs[0].reservations = 0;
  recs[1].offered_multiplier = 0.999;
  recs[1].offers = 1;
  recs[1].reservations = 1;
  recs[2].offered_multiplier = 1.1;
  recs[2].offers = 2;
  recs[2].reservations = 0;
  const auto per_record = conversion_points(recs);
  REQUIRE(per_record.size() == 1);
  CHECK(per_record[0].quantity == 1.0);
  const auto binned = conversion_points(recs, 0.01);
  REQUIRE(binned.size() == 1);
  CHECK(binned[0].quantity == doctest::Approx(0.25));
  CHECK(binned[0].multiplier == doctest::Approx((3 * 1.001 + 0.999) / 4));
}

TEST_CASE("root fit failure surfaces") {
  std::vector<BookingRecord> none;
  CHECK_THROWS_AS(make_root(none), Error);
}
