#include "fleetpricer/market.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "fleetpricer/error.hpp"

namespace fleetpricer {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kConversionStream = 0xC0;
constexpr std::uint64_t kPriceStream = 0x9E;
constexpr std::uint64_t kShockStream = 0x5E;

std::uint64_t as_u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

}  // namespace

void GridDims::validate() const {
  require(pickup_days > 0 && max_abt > 0 && max_lor > 0, ErrorCode::InvalidArgument,
          "grid dimensions must be strictly positive");
}

CellIndex decode_cell(const GridDims& dims, std::size_t flat) {
  const int k = static_cast<int>(flat % dims.max_lor) + 1;
  flat /= dims.max_lor;
  const int j = static_cast<int>(flat % dims.max_abt);
  const int i = static_cast<int>(flat / dims.max_abt);
  return {i, j, k};
}

MarketGrid::MarketGrid(GridDims dims, std::vector<int> fleet, std::vector<double> price,
                       std::vector<double> cost, std::vector<double> true_elasticity,
                       double expected_utilization, Date first_pickup)
    : dims_(dims),
      fleet_(std::move(fleet)),
      price_(std::move(price)),
      cost_(std::move(cost)),
      true_elasticity_(std::move(true_elasticity)),
      expected_utilization_(expected_utilization),
      first_pickup_(first_pickup) {
  dims_.validate();
  require(fleet_.size() == static_cast<std::size_t>(dims_.pickup_days),
          ErrorCode::InvalidArgument, "fleet length must equal the number of pickup days");
  require(std::all_of(fleet_.begin(), fleet_.end(), [](int f) { return f >= 1; }),
          ErrorCode::InvalidArgument, "every fleet entry must be >= 1");
  require(price_.size() == dims_.cell_count() && cost_.size() == dims_.cell_count(),
          ErrorCode::InvalidArgument, "price/cost must have one entry per cell");
  require(std::all_of(price_.begin(), price_.end(), [](double p) { return p > 0.0; }),
          ErrorCode::InvalidArgument, "prices must be positive");
  require(std::all_of(cost_.begin(), cost_.end(), [](double c) { return c >= 0.0; }),
          ErrorCode::InvalidArgument, "costs must be non-negative");
  require(true_elasticity_.size() == dims_.segment_count(), ErrorCode::InvalidArgument,
          "elasticity must have one entry per (abt, lor) segment");
  require(std::all_of(true_elasticity_.begin(), true_elasticity_.end(),
                      [](double e) { return e < 0.0; }),
          ErrorCode::InvalidArgument, "elasticities must be negative");
  require(expected_utilization_ >= 0.0 && expected_utilization_ <= 100.0,
          ErrorCode::InvalidArgument, "expected utilization must lie in [0, 100]");
}

FeatureMap BookingRecord::covariates() const {
  return {{"branch_type", branch_type},
          {"car_group", car_group},
          {"peak_flag", peak ? "1" : "0"},
          {"lor", std::to_string(lor)},
          {"abt", std::to_string(abt())}};
}

void BookingRecord::validate() const {
  require(pickup_date >= booking_date, ErrorCode::SchemaError,
          "pickup_date precedes booking_date");
  require(lor >= 1, ErrorCode::SchemaError, "lor must be >= 1");
  require(offered_multiplier > 0.0, ErrorCode::SchemaError, "offered_multiplier must be > 0");
  require(offers >= 0 && reservations >= 0, ErrorCode::SchemaError, "counts must be >= 0");
  require(reservations <= offers, ErrorCode::SchemaError, "reservations exceed offers");
}

bool HeuristicRule::matches(const FeatureMap& covariates) const {
  for (const auto& [key, value] : conditions) {
    const auto it = covariates.find(key);
    if (it == covariates.end() || it->second != value) return false;
  }
  return true;
}

void HeuristicRuleSet::validate() const {
  require(!rules.empty(), ErrorCode::InvalidArgument, "rule set is empty");
  for (const auto& r : rules) {
    require(r.price > 0.0, ErrorCode::InvalidArgument, "rule prices must be positive");
  }
}

double baseline_price(const HeuristicRuleSet& rules, const FeatureMap& covariates) {
  rules.validate();
  double sum = 0.0;
  int matched = 0;
  for (const auto& r : rules.rules) {
    if (r.matches(covariates)) {
      sum += r.price;
      ++matched;
    }
  }
  if (matched == 0) throw Error(ErrorCode::NoMatchingRule, "no heuristic rule matches");
  return sum / matched;
}

void RandomizationConfig::validate() const {
  require(multiplier_low > 0.0 && multiplier_low <= multiplier_high, ErrorCode::InvalidArgument,
          "need 0 < multiplier_low <= multiplier_high");
  require(randomized_fraction >= 0.0 && randomized_fraction <= 1.0, ErrorCode::InvalidArgument,
          "randomized_fraction must lie in [0, 1]");
  require(noise_sd >= 0.0 && demand_shock_sd >= 0.0, ErrorCode::InvalidArgument,
          "noise levels must be non-negative");
}

double ElasticityDrift::offset(int day) const {
  double v = per_day * day;
  if (amplitude != 0.0) v += amplitude * std::sin(2.0 * std::numbers::pi * day / period_days);
  return v;
}

void MarketScenario::validate() const {
  const auto& d = grid.dims();
  require(offer_rate.size() == d.cell_count(), ErrorCode::InvalidArgument,
          "offer_rate must have one entry per cell");
  require(std::all_of(offer_rate.begin(), offer_rate.end(), [](double r) { return r >= 0.0; }),
          ErrorCode::InvalidArgument, "offer rates must be non-negative");
  require(base_cvr.size() == d.segment_count(), ErrorCode::InvalidArgument,
          "base_cvr must have one entry per segment");
  require(std::all_of(base_cvr.begin(), base_cvr.end(), [](double c) { return c > 0.0 && c <= 1.0; }),
          ErrorCode::InvalidArgument, "base conversion rates must lie in (0, 1]");
  require(peak_row.empty() || peak_row.size() == static_cast<std::size_t>(d.pickup_days),
          ErrorCode::InvalidArgument, "peak_row must be empty or have one entry per pickup row");
}

int MarketScenario::row_of(Date pickup) const {
  const int n = grid.dims().pickup_days;
  const int off = pickup - grid.first_pickup();
  return ((off % n) + n) % n;
}

bool MarketScenario::is_peak(Date pickup) const {
  return !peak_row.empty() && peak_row[static_cast<std::size_t>(row_of(pickup))];
}

double MarketScenario::true_elasticity(Date booking, int j, int k) const {
  return grid.elasticity(j, k) + drift.offset(booking - epoch);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x2545F4914F6CDD1DULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

CellOutcome simulate_cell(const MarketScenario& scenario, std::uint64_t seed, Date booking, int j,
                          int k, double multiplier, double noise_sd, double demand_shock) {
  const Date pickup = booking + j;
  const auto& dims = scenario.grid.dims();
  const double rate = scenario.offer_rate[dims.cell(scenario.row_of(pickup), j, k)];
  const double eps = scenario.true_elasticity(booking, j, k);
  double cvr = scenario.base_cvr[dims.segment(j, k)] * (1.0 - eps * (1.0 - multiplier)) *
               std::exp(demand_shock);

  CellOutcome out;
  if (noise_sd == 0.0) {
    out.offers = static_cast<int>(std::llround(rate));
    out.reservations = static_cast<int>(std::llround(out.offers * std::clamp(cvr, 0.0, 1.0)));
    return out;
  }
  std::mt19937_64 rng(mix_seed({seed, kConversionStream, as_u64(booking.days),
                                static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)}));
  std::normal_distribution<double> noise(0.0, noise_sd);
  cvr = std::clamp(cvr * std::exp(noise(rng)), 0.0, 1.0);
  std::poisson_distribution<int> arrivals(rate > 0.0 ? rate : 1e-300);
  out.offers = rate > 0.0 ? arrivals(rng) : 0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < out.offers; ++n) {
    if (u(rng) < cvr) ++out.reservations;
  }
  return out;
}

BookingRecord make_record(const MarketScenario& scenario, Date booking, int j, int k,
                          double multiplier, CellOutcome outcome) {
  const Date pickup = booking + j;
  BookingRecord r;
  r.booking_date = booking;
  r.pickup_date = pickup;
  r.lor = k;
  r.offered_multiplier = quantize6(multiplier);
  r.offers = outcome.offers;
  r.reservations = outcome.reservations;
  r.revenue_per_day =
      quantize6(scenario.grid.price(scenario.row_of(pickup), j, k) * r.offered_multiplier / k);
  r.branch_type = scenario.branch_type;
  r.car_group = scenario.car_group;
  r.peak = scenario.is_peak(pickup);
  return r;
}

std::vector<BookingRecord> generate_history(const MarketScenario& scenario,
                                            const RandomizationConfig& rand, int horizon) {
  scenario.validate();
  rand.validate();
  const auto& dims = scenario.grid.dims();
  if (horizon < dims.max_abt) {
    throw Error(ErrorCode::InvalidHorizon,
                "horizon " + std::to_string(horizon) + " shorter than max ABT " +
                    std::to_string(dims.max_abt));
  }

  auto shock_of = [&](Date pickup) {
    if (rand.demand_shock_sd <= 0.0) return 0.0;
    std::mt19937_64 rng(mix_seed({rand.seed, kShockStream, as_u64(pickup.days)}));
    return std::normal_distribution<double>(0.0, rand.demand_shock_sd)(rng);
  };

  // Endogenous mode state: booking pace per pickup date (observed, expected).
  struct Pace {
    double observed = 0.0;
    double expected = 0.0;
  };
  std::unordered_map<std::int32_t, Pace> pace;

  std::vector<BookingRecord> out;
  out.reserve(static_cast<std::size_t>(horizon) * dims.segment_count());
  for (int b = 0; b < horizon; ++b) {
    const Date booking = scenario.epoch + b;
    std::vector<std::pair<std::int32_t, Pace>> updates;
    for (int j = 0; j < dims.max_abt; ++j) {
      const Date pickup = booking + j;
      for (int k = 1; k <= dims.max_lor; ++k) {
        std::mt19937_64 prng(mix_seed({rand.seed, kPriceStream, as_u64(booking.days),
                                       static_cast<std::uint64_t>(j),
                                       static_cast<std::uint64_t>(k)}));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double pick = u(prng);
        const double draw = rand.multiplier_low + (rand.multiplier_high - rand.multiplier_low) * u(prng);
        double m = 1.0;
        if (pick < rand.randomized_fraction) {
          m = draw;
        } else if (rand.endogenous) {
          const auto it = pace.find(pickup.days);
          if (it != pace.end() && it->second.expected > 0.0 && it->second.observed > 0.0) {
            const double ratio = it->second.observed / it->second.expected;
            m = std::clamp(1.0 + rand.endogenous_gain * std::log(ratio), rand.multiplier_low,
                           rand.multiplier_high);
          }
        }
        m = quantize6(m);
        const CellOutcome o =
            simulate_cell(scenario, rand.seed, booking, j, k, m, rand.noise_sd, shock_of(pickup));
        out.push_back(make_record(scenario, booking, j, k, m, o));
        if (rand.endogenous) {
          const double expected = scenario.offer_rate[dims.cell(scenario.row_of(pickup), j, k)] *
                                  scenario.base_cvr[dims.segment(j, k)];
          updates.push_back({pickup.days, Pace{static_cast<double>(o.reservations), expected}});
        }
      }
    }
    for (const auto& [day, p] : updates) {
      auto& acc = pace[day];
      acc.observed += p.observed;
      acc.expected += p.expected;
    }
  }
  return out;
}

long on_rents(std::span<const BookingRecord> records, Date day) {
  long total = 0;
  for (const auto& r : records) {
    if (r.pickup_date <= day && day < r.pickup_date + r.lor) total += r.reservations;
  }
  return total;
}

double quantize6(double v) { return static_cast<double>(std::llround(v * 1e6)) / 1e6; }

}  // namespace fleetpricer
