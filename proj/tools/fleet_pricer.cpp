#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fleetpricer/analysis.hpp"
#include "fleetpricer/batch.hpp"
#include "fleetpricer/config.hpp"
#include "fleetpricer/error.hpp"
#include "fleetpricer/kernels.hpp"
#include "fleetpricer/numfmt.hpp"
#include "fleetpricer/records_io.hpp"
#include "fleetpricer/report.hpp"
#include "json.hpp"

namespace fp = fleetpricer;
using nlohmann::json;

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

fp::RunConfig load(const Args& a) {
  std::vector<std::string> overrides = a.sets;
  if (a.seed) overrides.push_back("seed=" + std::to_string(*a.seed));
  if (!a.out.empty()) overrides.push_back("output_dir=" + json(a.out).dump());
  return fp::load_run_config(a.config, overrides);
}

std::filesystem::path prepare_dir(const fp::RunConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw fp::Error(fp::ErrorCode::IoError, "cannot create " + c.output_dir.string());
  return c.output_dir;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fp::Error(fp::ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fp::Error(fp::ErrorCode::IoError, "cannot write " + path.string());
  fn(out);
}

// timestamps live here and nowhere else
void write_metadata(const std::filesystem::path& dir, const std::string& command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  write_json(dir / "run_meta.json", {{"command", command},
                                     {"created_utc", stamp},
                                     {"simd", fp::kernels::active().name}});
}

json header(const std::string& command, const fp::RunConfig& c) {
  return {{"command", command}, {"config", fp::to_json(c)}};
}

struct Window {
  fp::MarketScenario scenario;
  std::vector<fp::BookingRecord> records;
  fp::Date as_of;
  fp::ElasticityModel model;
  fp::PricingProblem problem;
};

Window prepare_window(const fp::RunConfig& c) {
  fp::MarketScenario s = fp::make_scenario(c);
  auto records = fp::initial_records(c, s);
  const fp::Date as_of = fp::next_booking_day(c, records);
  fp::Date epoch = as_of;
  for (const auto& r : records) epoch = std::min(epoch, r.booking_date);
  auto model = fp::fit_elasticity_model(c, records, epoch, as_of);
  auto problem = fp::build_window_problem(c, s, records, as_of, model);
  return Window{std::move(s), std::move(records), as_of, std::move(model), std::move(problem)};
}

json vec_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(fp::sig9(x));
  return out;
}

int cmd_simulate(const fp::RunConfig& c) {
  const auto s = fp::make_scenario(c);
  const auto records = fp::initial_records(c, s);
  const auto dir = prepare_dir(c);
  fp::write_records_csv(dir / "records.csv", records);
  json j = header("simulate", c);
  j["records"] = records.size();
  if (!records.empty()) {
    j["first_booking"] = fp::format_iso_date(records.front().booking_date);
    j["next_booking"] = fp::format_iso_date(fp::next_booking_day(c, records));
  }
  write_json(dir / "run.json", j);
  write_metadata(dir, "simulate");
  return 0;
}

int cmd_estimate(const fp::RunConfig& c) {
  const auto s = fp::make_scenario(c);
  const auto records = fp::initial_records(c, s);
  const fp::Date as_of = fp::next_booking_day(c, records);
  fp::Date epoch = as_of;
  for (const auto& r : records) epoch = std::min(epoch, r.booking_date);
  const auto model = fp::fit_elasticity_model(c, records, epoch, as_of);

  json j = header("estimate", c);
  j["grouping"] = fp::grouping_to_json(model.tree, c.estimation.grouping);

  const auto& e = c.estimation;
  const auto series = fp::tvc_series_from_records(records, epoch, e.tvc_period_days, e.grouping.bin_width);
  const auto slopes = fp::per_period_slopes(series);
  std::vector<double> betas, rpd;
  json per_period = json::array();
  for (std::size_t t = 0; t < slopes.size(); ++t) {
    if (slopes[t]) {
      per_period.push_back({{"period", t + 1},
                            {"slope", fp::sig9(slopes[t]->slope)},
                            {"slope_se", fp::sig9(slopes[t]->slope_se)}});
      betas.push_back(slopes[t]->slope);
      rpd.push_back(series.periods[t].rpd);
    } else {
      per_period.push_back({{"period", t + 1}, {"slope", nullptr}});
    }
  }
  j["period_slopes"] = per_period;
  if (model.tvc) {
    j["tvc"] = {{"alpha", fp::sig9(model.tvc->alpha)},
                {"obs_sd", fp::sig9(model.tvc->obs_sd)},
                {"state_sd", fp::sig9(model.tvc->state_sd)},
                {"log_marginal_likelihood", fp::sig9(model.tvc->log_marginal_likelihood)},
                {"beta_mean", vec_json(model.tvc->beta_mean)},
                {"beta_var", vec_json(model.tvc->beta_var)}};
  }
  // every period observed is needed for the seasonal basis; gaps skip both
  if (betas.size() == slopes.size()) {
    try {
      j["cv"] = fp::cv_report_to_json(
          fp::rolling_cv(betas, rpd, e.cv_initial_train, e.cv_step, e.cv_horizon, e.elasticity_forecast));
    } catch (const fp::Error& err) {
      j["cv"] = {{"skipped", err.what()}};
    }
  } else {
    j["cv"] = {{"skipped", "periods without a slope estimate"}};
  }
  const auto dir = prepare_dir(c);
  write_json(dir / "run.json", j);
  write_metadata(dir, "estimate");
  return 0;
}

int cmd_forecast(const fp::RunConfig& c) {
  const Window w = prepare_window(c);
  const auto dir = prepare_dir(c);
  write_file(dir / "forecast.csv", [&](std::ostream& os) { fp::write_forecast_csv(os, w.problem.forecast); });
  double total = 0.0;
  for (double m : w.problem.forecast.mean) total += m;
  json j = header("forecast", c);
  j["as_of"] = fp::format_iso_date(w.as_of);
  j["total_mean"] = fp::sig9(total);
  j["clipped_increments"] = w.problem.forecast.clipped_increments;
  write_json(dir / "run.json", j);
  write_metadata(dir, "forecast");
  return 0;
}

int cmd_optimize(const fp::RunConfig& c) {
  const Window w = prepare_window(c);
  const auto [policy, report] = fp::solve(w.problem, c.optimizer.solve);
  const auto dir = prepare_dir(c);
  write_file(dir / "forecast.csv", [&](std::ostream& os) { fp::write_forecast_csv(os, w.problem.forecast); });
  write_file(dir / "policy.csv", [&](std::ostream& os) { fp::write_policy_csv(os, w.problem, policy); });
  json j = header("optimize", c);
  j["as_of"] = fp::format_iso_date(w.as_of);
  j["solver"] = fp::solver_report_to_json(report);
  j["expected_margin"] = fp::sig9(policy.expected_margin);
  j["objective"] = fp::sig9(policy.objective);
  j["margin_variance"] = fp::sig9(policy.margin_variance);
  j["days"] = fp::policy_days_to_json(policy);
  write_json(dir / "run.json", j);
  write_metadata(dir, "optimize");
  return 0;
}

int cmd_benchmark(const fp::RunConfig& c) {
  const Window w = prepare_window(c);
  std::vector<std::pair<std::string, std::vector<double>>> policies{
      {"heuristic", fp::heuristic_multipliers(w.problem)}};
  json solvers = json::object();
  json skipped = json::array();

  auto attempt = [&](const std::string& label, fp::PricingProblem p) {
    try {
      auto [policy, report] = fp::solve(p, c.optimizer.solve);
      policies.emplace_back(label, policy.multipliers);
      solvers[label] = fp::solver_report_to_json(report);
    } catch (const fp::Error& e) {
      if (e.code() != fp::ErrorCode::Infeasible) throw;
      skipped.push_back({{"label", label}, {"reason", e.what()}});
    }
  };
  fp::PricingProblem margin_only = w.problem;
  margin_only.risk.lambda = 0.0;
  margin_only.risk.chance_constraints = false;
  attempt("margin_only", margin_only);
  attempt("configured", w.problem);
  fp::PricingProblem chance = w.problem;
  chance.risk.chance_constraints = true;
  attempt("chance_constrained", chance);

  const auto rows = fp::benchmark(w.problem, policies);
  json mc = json::object();
  for (const auto& [label, x] : policies) {
    mc[label] = fp::monte_carlo_to_json(fp::monte_carlo_eval(
        w.problem, x, static_cast<std::uint64_t>(c.monte_carlo_samples), c.seed));
  }

  const auto dir = prepare_dir(c);
  write_file(dir / "benchmark.csv", [&](std::ostream& os) { fp::write_benchmark_csv(os, rows); });
  write_file(dir / "report.svg", [&](std::ostream& os) {
    os << fp::benchmark_svg(rows, "expected margin and risk by policy");
  });
  json j = header("benchmark", c);
  j["as_of"] = fp::format_iso_date(w.as_of);
  j["solvers"] = solvers;
  j["skipped"] = skipped;
  j["monte_carlo"] = mc;
  write_json(dir / "run.json", j);
  write_metadata(dir, "benchmark");
  return 0;
}

int cmd_opportunity_cost(const fp::RunConfig& c) {
  const Window w = prepare_window(c);
  const auto f = fp::fleet_opportunity_cost(w.problem, c.optimizer.solve);
  const auto dir = prepare_dir(c);
  json j = header("opportunity-cost", c);
  j["as_of"] = fp::format_iso_date(w.as_of);
  j["fleet"] = fp::fleet_counterfactual_to_json(f);
  write_json(dir / "run.json", j);
  write_metadata(dir, "opportunity-cost");
  return 0;
}

int cmd_batch(const fp::RunConfig& c) {
  const auto state = fp::run_batch(c);
  const auto dir = prepare_dir(c);
  fp::export_batch(state, c, dir);
  write_metadata(dir, "batch");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fleet pricing toolkit: simulate, estimate, forecast and optimize rental prices"};
  app.require_subcommand(1);
  Args args;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const fp::RunConfig&);
  };
  const Command commands[] = {
      {"simulate", "simulate a booking history and write records.csv", cmd_simulate},
      {"estimate", "fit the elasticity tree and the time-varying slope", cmd_estimate},
      {"forecast", "forecast demand for the next pricing window", cmd_forecast},
      {"optimize", "solve the pricing program for the next window", cmd_optimize},
      {"batch", "run the daily re-fit / re-solve loop", cmd_batch},
      {"benchmark", "compare heuristic and optimized policies", cmd_benchmark},
      {"opportunity-cost", "fleet-size opportunity cost of the utilization band", cmd_opportunity_cost},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", args.config, "JSON config file")->required();
    sub->add_option("--seed", args.seed, "overrides the config seed");
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--set", args.sets, "dotted override, e.g. optimizer.lambda=0.1");
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    const fp::RunConfig config = load(args);
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->run(config);
    }
  } catch (const fp::Error& e) {
    std::cerr << "fleet-pricer: " << e.what() << '\n';
    return e.code() == fp::ErrorCode::ConfigError ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "fleet-pricer: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
