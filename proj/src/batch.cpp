#include "fleetpricer/batch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fleetpricer/analysis.hpp"
#include "fleetpricer/error.hpp"
#include "fleetpricer/numfmt.hpp"
#include "fleetpricer/records_io.hpp"
#include "fleetpricer/report.hpp"

namespace fleetpricer {

using nlohmann::json;

namespace {

std::vector<BookingRecord> booked_before(std::span<const BookingRecord> records, Date as_of) {
  std::vector<BookingRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.booking_date < as_of) out.push_back(r);
  }
  return out;
}

Date first_booking(std::span<const BookingRecord> records, Date fallback) {
  if (records.empty()) return fallback;
  Date d = records.front().booking_date;
  for (const auto& r : records) d = std::min(d, r.booking_date);
  return d;
}

FeatureMap probe_covariates(const RunConfig& c, const MarketScenario& s, Date pickup, int j, int k,
                            bool peak) {
  BookingRecord probe;
  probe.pickup_date = pickup;
  probe.booking_date = pickup - j;
  probe.lor = k;
  probe.branch_type = s.branch_type;
  probe.car_group = s.car_group;
  probe.peak = peak;
  return split_covariates(probe, c.estimation.grouping);
}

Elasticity cell_elasticity(const ElasticityModel& m, const RunConfig& c, const FeatureMap& cov) {
  Elasticity e = resolve_elasticity(m.tree, cov);
  const Elasticity& root = m.tree.resolved;
  if (m.tvc_current && e.slope == root.slope && e.slope_se == root.slope_se) e = *m.tvc_current;
  e.slope = std::min(e.slope, c.estimation.max_elasticity);
  return e;
}

Error with_context(const Error& e, int day, Date date) {
  std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
  return Error(e.code(), "day " + std::to_string(day) + " (" + format_iso_date(date) + "): " + what);
}

json elasticity_json(const Elasticity& e) {
  return {{"slope", sig9(e.slope)}, {"slope_se", sig9(e.slope_se)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

ElasticityModel fit_elasticity_model(const RunConfig& c, std::span<const BookingRecord> records,
                                     Date epoch, Date as_of) {
  const auto rows = booked_before(records, as_of);
  ElasticityModel m;
  m.tree = build_grouping_tree(rows, c.estimation.grouping);
  if (!c.estimation.tvc) return m;

  const int period_days = c.estimation.tvc_period_days;
  TvcSeries series = tvc_series_from_records(rows, epoch, period_days, c.estimation.grouping.bin_width);
  const auto complete = static_cast<std::size_t>(std::max(0, (as_of - epoch) / period_days));
  if (series.periods.size() > complete) series.periods.resize(complete);
  if (series.periods.size() < static_cast<std::size_t>(c.estimation.tvc_min_periods)) return m;
  TvcOptions options;
  options.prior_mean = m.tree.resolved.slope;
  try {
    m.tvc = fit_tvc(series, options);
  } catch (const Error&) {
    return m;
  }
  m.tvc_current = Elasticity{m.tvc->beta_mean.back(), std::sqrt(m.tvc->beta_var.back())};
  return m;
}

std::vector<double> segment_elasticities(const ElasticityModel& m, const RunConfig& c,
                                         const MarketScenario& s) {
  const auto& d = s.grid.dims();
  std::vector<double> out(d.segment_count());
  for (int j = 0; j < d.max_abt; ++j) {
    for (int k = 1; k <= d.max_lor; ++k) {
      out[d.segment(j, k)] = cell_elasticity(m, c, probe_covariates(c, s, s.epoch + j, j, k, false)).slope;
    }
  }
  return out;
}

MarketGrid window_grid(const MarketScenario& s, Date first_pickup) {
  const auto& d = s.grid.dims();
  std::vector<int> fleet(static_cast<std::size_t>(d.pickup_days));
  std::vector<double> price(d.cell_count()), cost(d.cell_count());
  for (int i = 0; i < d.pickup_days; ++i) {
    const int row = s.row_of(first_pickup + i);
    fleet[static_cast<std::size_t>(i)] = s.grid.fleet()[static_cast<std::size_t>(row)];
    for (int j = 0; j < d.max_abt; ++j) {
      for (int k = 1; k <= d.max_lor; ++k) {
        price[d.cell(i, j, k)] = s.grid.price(row, j, k);
        cost[d.cell(i, j, k)] = s.grid.cost(row, j, k);
      }
    }
  }
  const auto e = s.grid.true_elasticity();
  return MarketGrid(d, std::move(fleet), std::move(price), std::move(cost),
                    std::vector<double>(e.begin(), e.end()), s.grid.expected_utilization(),
                    first_pickup);
}

std::vector<double> window_carryover(std::span<const BookingRecord> records, Date first_pickup,
                                     int days) {
  std::vector<double> out(static_cast<std::size_t>(std::max(days, 0)), 0.0);
  for (const auto& r : records) {
    if (r.reservations <= 0 || !(r.pickup_date < first_pickup)) continue;
    for (int t = 0; t < days; ++t) {
      const Date day = first_pickup + t;
      if (r.pickup_date <= day && day < r.pickup_date + r.lor) {
        out[static_cast<std::size_t>(t)] += r.reservations;
      }
    }
  }
  return out;
}

PricingProblem build_window_problem(const RunConfig& c, const MarketScenario& s,
                                    std::span<const BookingRecord> records, Date as_of,
                                    const ElasticityModel& model) {
  const auto rows = booked_before(records, as_of);
  MarketGrid grid = window_grid(s, as_of);
  const auto& d = grid.dims();

  const Forecaster f = fit_forecaster(rows, c.forecaster, segment_elasticities(model, c, s));
  const auto curves = open_curves_from_records(rows, grid, as_of);
  DemandForecast demand = forecast(f, curves, grid, as_of);

  std::vector<double> mean(d.cell_count()), sd(d.cell_count());
  for (int i = 0; i < d.pickup_days; ++i) {
    const Date pickup = as_of + i;
    const bool peak = s.is_peak(pickup);
    for (int j = 0; j < d.max_abt; ++j) {
      for (int k = 1; k <= d.max_lor; ++k) {
        const Elasticity e = cell_elasticity(model, c, probe_covariates(c, s, pickup, j, k, peak));
        mean[d.cell(i, j, k)] = e.slope;
        sd[d.cell(i, j, k)] = e.slope_se;
      }
    }
  }

  const auto& o = c.optimizer;
  PricingProblem p{
      .grid = std::move(grid),
      .forecast = std::move(demand),
      .elasticity_mean = std::move(mean),
      .elasticity_sd = std::move(sd),
      .box_lo = o.box_lo,
      .box_hi = o.box_hi,
      .band_a = o.band_a,
      .band_b = o.band_b,
      .utilization_constraints = o.utilization_constraints,
      .risk = o.risk,
      .cost_mode = o.cost_mode,
      .index_set = o.index_set,
      .variance_mode = o.variance_mode,
      .carryover = window_carryover(rows, as_of, d.pickup_days),
  };
  p.validate();
  return p;
}

std::vector<BookingRecord> initial_records(const RunConfig& c, const MarketScenario& s) {
  if (!c.input_records.empty()) return ingest(c.input_records);
  RandomizationConfig rand = c.randomization;
  rand.seed = c.seed;
  return generate_history(s, rand, c.history_days);
}

Date next_booking_day(const RunConfig& c, std::span<const BookingRecord> records) {
  if (records.empty()) return c.scenario.epoch;
  Date last = records.front().booking_date;
  for (const auto& r : records) last = std::max(last, r.booking_date);
  return last + 1;
}

double BatchState::cumulative_margin() const {
  double total = 0.0;
  for (const auto& h : history) total += h.realized_margin;
  return total;
}

double BatchState::cumulative_heuristic_margin() const {
  double total = 0.0;
  for (const auto& h : history) total += h.heuristic_margin;
  return total;
}

BatchState start_batch(const RunConfig& c, const MarketScenario& s) {
  BatchState state;
  state.records = initial_records(c, s);
  state.start = next_booking_day(c, state.records);
  return state;
}

void step_batch(BatchState& state, const RunConfig& c, const MarketScenario& s) {
  const Date as_of = state.start + state.day;
  const auto& d = s.grid.dims();
  DayLog log;
  log.day = state.day;
  log.date = as_of;

  ElasticityModel model;
  std::optional<PricingProblem> problem;
  try {
    model = fit_elasticity_model(c, state.records, first_booking(state.records, s.epoch), as_of);
    problem.emplace(build_window_problem(c, s, state.records, as_of, model));
  } catch (const Error& e) {
    throw with_context(e, state.day, as_of);
  }

  PricingPolicy policy;
  try {
    auto [pol, report] = solve(*problem, c.optimizer.solve);
    policy = std::move(pol);
    log.report = report;
    log.status = to_string(report.status);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw with_context(e, state.day, as_of);
    policy = evaluate_policy(*problem, heuristic_multipliers(*problem));
    log.fallback = true;
    log.status = "fallback";
    log.report.status = QpStatus::infeasible;
    state.events.push_back("day " + std::to_string(state.day) + " (" + format_iso_date(as_of) +
                           "): infeasible, heuristic multipliers applied");
  }
  log.expected_margin = policy.expected_margin;

  // Today's bookings: pickup as_of + j at ABT j, window row j.
  const double noise = c.randomization.noise_sd;
  for (int j = 0; j < d.max_abt; ++j) {
    const Date pickup = as_of + j;
    const int row = s.row_of(pickup);
    for (int k = 1; k <= d.max_lor; ++k) {
      const double x = j < d.pickup_days
                           ? policy.multipliers[d.cell(j, j, k)]
                           : std::clamp(1.0, c.optimizer.box_lo, c.optimizer.box_hi);
      const double xq = quantize6(x);
      const double price = s.grid.price(row, j, k);
      const double cost = s.grid.cost(row, j, k);
      const CellOutcome got = simulate_cell(s, c.seed, as_of, j, k, xq, noise);
      const CellOutcome base = simulate_cell(s, c.seed, as_of, j, k, 1.0, noise);
      state.records.push_back(make_record(s, as_of, j, k, xq, got));
      log.realized_margin += got.reservations * (price * xq - cost);
      log.heuristic_margin += base.reservations * (price - cost);
      log.reservations += got.reservations;
      log.heuristic_reservations += base.reservations;
    }
  }

  state.model = std::move(model);
  state.forecast = problem->forecast;
  state.policy = std::move(policy);
  state.problem = std::move(problem);
  state.history.push_back(log);
  ++state.day;
}

BatchState run_batch(const RunConfig& c) {
  c.validate();
  const MarketScenario s = make_scenario(c);
  BatchState state = start_batch(c, s);
  for (int day = 0; day < c.batch_days; ++day) step_batch(state, c, s);
  return state;
}

std::vector<BookingRecord> ingest(const std::filesystem::path& path) {
  return read_records_csv(path);
}

json batch_to_json(const BatchState& state, const RunConfig& c) {
  json days = json::array();
  for (const auto& h : state.history) {
    days.push_back({{"day", h.day},
                    {"date", format_iso_date(h.date)},
                    {"status", h.status},
                    {"fallback", h.fallback},
                    {"solver", solver_report_to_json(h.report)},
                    {"expected_margin", sig9(h.expected_margin)},
                    {"realized_margin", sig9(h.realized_margin)},
                    {"heuristic_margin", sig9(h.heuristic_margin)},
                    {"reservations", h.reservations},
                    {"heuristic_reservations", h.heuristic_reservations}});
  }
  const double opt = state.cumulative_margin();
  const double heu = state.cumulative_heuristic_margin();
  json out{{"command", "batch"},
           {"config", to_json(c)},
           {"start", format_iso_date(state.start)},
           {"days", days},
           {"totals",
            {{"days", state.day},
             {"realized_margin", sig9(opt)},
             {"heuristic_margin", sig9(heu)},
             {"margin_gain", sig9(opt - heu)},
             {"dominates", opt >= heu}}},
           {"events", state.events}};
  if (state.day > 0) {
    out["grouping"] = grouping_to_json(state.model.tree, c.estimation.grouping);
    if (state.model.tvc_current) out["tvc_current"] = elasticity_json(*state.model.tvc_current);
  }
  return out;
}

void export_batch(const BatchState& state, const RunConfig& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  write_records_csv(dir / "records.csv", state.records);
  {
    std::ofstream out(dir / "forecast.csv", std::ios::binary);
    if (state.forecast) {
      write_forecast_csv(out, *state.forecast);
    } else {
      out << "pickup_day,abt,lor,mean,sd\n";
    }
  }
  std::vector<BenchmarkRow> rows;
  {
    std::ofstream out(dir / "policy.csv", std::ios::binary);
    if (state.problem && state.policy) {
      write_policy_csv(out, *state.problem, *state.policy);
      const std::vector<std::pair<std::string, std::vector<double>>> policies{
          {"heuristic", heuristic_multipliers(*state.problem)},
          {"optimized", state.policy->multipliers}};
      rows = benchmark(*state.problem, policies);
    } else {
      out << "pickup_day,abt,lor,multiplier,expected_demand,expected_margin\n";
    }
  }
  {
    std::ofstream out(dir / "benchmark.csv", std::ios::binary);
    write_benchmark_csv(out, rows);
  }
  std::vector<double> opt, heu;
  double a = 0.0, b = 0.0;
  for (const auto& h : state.history) {
    opt.push_back(a += h.realized_margin);
    heu.push_back(b += h.heuristic_margin);
  }
  const std::vector<std::pair<std::string, std::vector<double>>> series{{"optimized", opt},
                                                                       {"heuristic", heu}};
  write_text(dir / "report.svg", trace_svg(series, "cumulative realized margin", "margin"));
  write_text(dir / "run.json", batch_to_json(state, c).dump(2) + "\n");
}

}  // namespace fleetpricer
