#include "fleetpricer/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fleetpricer/error.hpp"

namespace fleetpricer {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, "field '" + field + "': " + msg);
}

void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) fail(field, msg);
}

// Keys of `user` must exist in `reference`; free-form maps are skipped.
void reject_unknown(const json& user, const json& reference, const std::string& prefix) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!reference.contains(key)) fail(path, "unknown field");
    if (key == "options" || key == "conditions") continue;
    if (value.is_object()) {
      if (!reference[key].is_object()) fail(path, "expected " + std::string(reference[key].type_name()));
      reject_unknown(value, reference[key], path);
    }
  }
}

class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) fail(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  Reader sub(const std::string& key) const { return Reader(j_.at(key), path(key)); }

  void number(const std::string& key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    check(v.is_number(), path(key), "expected a number");
    out = v.get<double>();
    check(std::isfinite(out), path(key), "must be finite");
  }
  void integer(const std::string& key, int& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    check(v.is_number_integer(), path(key), "expected an integer");
    const auto wide = v.get<long long>();
    check(wide >= -2147483647LL && wide <= 2147483647LL, path(key), "out of range");
    out = static_cast<int>(wide);
  }
  void boolean(const std::string& key, bool& out) const {
    if (!has(key)) return;
    check(j_.at(key).is_boolean(), path(key), "expected true or false");
    out = j_.at(key).get<bool>();
  }
  void string(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    check(j_.at(key).is_string(), path(key), "expected a string");
    out = j_.at(key).get<std::string>();
  }
  void ints(const std::string& key, std::vector<int>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    check(v.is_array(), path(key), "expected an array of integers");
    out.clear();
    for (const auto& e : v) {
      check(e.is_number_integer(), path(key), "expected an array of integers");
      out.push_back(e.get<int>());
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    check(v.is_array(), path(key), "expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      check(e.is_number(), path(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }
  void pair(const std::string& key, double& a, double& b) const {
    if (!has(key)) return;
    std::vector<double> v;
    numbers(key, v);
    check(v.size() == 2, path(key), "expected [low, high]");
    a = v[0];
    b = v[1];
  }
  template <class E, class Parse>
  void enumeration(const std::string& key, E& out, Parse parse) const {
    if (!has(key)) return;
    std::string s;
    string(key, s);
    try {
      out = parse(s);
    } catch (const Error& e) {
      fail(path(key), e.what());
    }
  }

 private:
  const json& j_;
  std::string prefix_;
};

json rules_to_json(const HeuristicRuleSet& rules) {
  json out = json::array();
  for (const auto& r : rules.rules) {
    json cond = json::object();
    for (const auto& [k, v] : r.conditions) cond[k] = v;
    out.push_back({{"conditions", cond}, {"price", r.price}});
  }
  return out;
}

HeuristicRuleSet rules_from_json(const json& j, const std::string& field) {
  check(j.is_array(), field, "expected an array of rules");
  HeuristicRuleSet out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = field + "[" + std::to_string(i) + "]";
    const json& r = j[i];
    check(r.is_object(), at, "expected {conditions, price}");
    for (const auto& [k, v] : r.items()) {
      check(k == "conditions" || k == "price", at + "." + k, "unknown field");
    }
    HeuristicRule rule;
    check(r.contains("price") && r["price"].is_number(), at + ".price", "expected a number");
    rule.price = r["price"].get<double>();
    if (r.contains("conditions")) {
      check(r["conditions"].is_object(), at + ".conditions", "expected an object of strings");
      for (const auto& [k, v] : r["conditions"].items()) {
        check(v.is_string(), at + ".conditions." + k, "expected a string");
        rule.conditions[k] = v.get<std::string>();
      }
    }
    out.rules.push_back(std::move(rule));
  }
  return out;
}

bool ascending(const std::vector<int>& v) {
  return !v.empty() && std::is_sorted(v.begin(), v.end()) &&
         std::adjacent_find(v.begin(), v.end()) == v.end();
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.scenario.epoch = parse_iso_date("2024-01-01");
  c.scenario.rules.rules = {HeuristicRule{{}, 55.0}, HeuristicRule{{{"peak_flag", "1"}}, 75.0}};
  c.estimation.grouping.bin_width = 0.01;
  c.randomization.seed = c.seed;
  return c;
}

json to_json(const RunConfig& c) {
  const auto& s = c.scenario;
  const auto& r = c.randomization;
  const auto& e = c.estimation;
  const auto& o = c.optimizer;
  json options = json::object();
  for (const auto& [k, v] : c.forecaster.options) options[k] = v;
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir.generic_string()},
      {"input_records", c.input_records.generic_string()},
      {"history_days", c.history_days},
      {"batch_days", c.batch_days},
      {"monte_carlo_samples", c.monte_carlo_samples},
      {"scenario",
       {{"pickup_days", s.dims.pickup_days},
        {"max_abt", s.dims.max_abt},
        {"max_lor", s.dims.max_lor},
        {"epoch", format_iso_date(s.epoch)},
        {"fleet", s.fleet},
        {"expected_utilization", s.expected_utilization},
        {"elasticity_min", s.elasticity_min},
        {"elasticity_max", s.elasticity_max},
        {"cost_ratio", s.cost_ratio},
        {"offer_rate", s.offer_rate},
        {"base_cvr", s.base_cvr},
        {"peak_rows", s.peak_rows},
        {"peak_boost", s.peak_boost},
        {"branch_type", s.branch_type},
        {"car_group", s.car_group},
        {"drift",
         {{"per_day", s.drift.per_day},
          {"amplitude", s.drift.amplitude},
          {"period_days", s.drift.period_days}}},
        {"heuristic_rules", rules_to_json(s.rules)}}},
      {"randomization",
       {{"multiplier_low", r.multiplier_low},
        {"multiplier_high", r.multiplier_high},
        {"randomized_fraction", r.randomized_fraction},
        {"noise_sd", r.noise_sd},
        {"endogenous", r.endogenous},
        {"endogenous_gain", r.endogenous_gain},
        {"demand_shock_sd", r.demand_shock_sd}}},
      {"forecaster",
       {{"kind", to_string(c.forecaster.kind)},
        {"window", c.forecaster.window},
        {"options", options}}},
      {"estimation",
       {{"p_threshold", e.grouping.p_threshold},
        {"var_threshold", e.grouping.var_threshold},
        {"score_alpha", e.grouping.score_alpha},
        {"score_beta", e.grouping.score_beta},
        {"bin_width", e.grouping.bin_width},
        {"lor_edges", e.lor_edges},
        {"abt_edges", e.abt_edges},
        {"max_elasticity", e.max_elasticity},
        {"tvc", e.tvc},
        {"tvc_period_days", e.tvc_period_days},
        {"tvc_min_periods", e.tvc_min_periods},
        {"seasonal_order", e.elasticity_forecast.seasonal_order},
        {"seasonal_period", e.elasticity_forecast.seasonal_period},
        {"holidays", e.elasticity_forecast.holidays},
        {"use_regressor", e.elasticity_forecast.use_regressor},
        {"ridge", e.elasticity_forecast.ridge},
        {"cv_initial_train", e.cv_initial_train},
        {"cv_step", e.cv_step},
        {"cv_horizon", e.cv_horizon}}},
      {"optimizer",
       {{"box", {o.box_lo, o.box_hi}},
        {"band", {o.band_a, o.band_b}},
        {"utilization_constraints", o.utilization_constraints},
        {"lambda", o.risk.lambda},
        {"threshold_c", o.risk.threshold_c},
        {"affordable_p", o.risk.affordable_p},
        {"chance_constraints", o.risk.chance_constraints},
        {"cost_mode", to_string(o.cost_mode)},
        {"index_set", to_string(o.index_set)},
        {"variance_mode", to_string(o.variance_mode)},
        {"method", to_string(o.solve.method)},
        {"tolerance", o.solve.qp.tolerance},
        {"max_iterations", o.solve.qp.max_iterations},
        {"polish", o.solve.qp.polish},
        {"max_outer", o.solve.max_outer},
        {"outer_tolerance", o.solve.outer_tolerance}}},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c = default_run_config();
  reject_unknown(j, to_json(c), "");
  const Reader root(j, "");

  if (root.has("seed")) {
    check(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0),
          "seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  std::string text;
  if (root.has("output_dir")) {
    root.string("output_dir", text);
    c.output_dir = text;
  }
  if (root.has("input_records")) {
    root.string("input_records", text);
    c.input_records = text;
  }
  root.integer("history_days", c.history_days);
  root.integer("batch_days", c.batch_days);
  root.integer("monte_carlo_samples", c.monte_carlo_samples);

  if (root.has("scenario")) {
    const Reader r = root.sub("scenario");
    auto& s = c.scenario;
    r.integer("pickup_days", s.dims.pickup_days);
    r.integer("max_abt", s.dims.max_abt);
    r.integer("max_lor", s.dims.max_lor);
    if (r.has("epoch")) {
      r.string("epoch", text);
      try {
        s.epoch = parse_iso_date(text);
      } catch (const Error& e) {
        fail(r.path("epoch"), e.what());
      }
    }
    r.integer("fleet", s.fleet);
    r.number("expected_utilization", s.expected_utilization);
    r.number("elasticity_min", s.elasticity_min);
    r.number("elasticity_max", s.elasticity_max);
    r.number("cost_ratio", s.cost_ratio);
    r.number("offer_rate", s.offer_rate);
    r.number("base_cvr", s.base_cvr);
    r.ints("peak_rows", s.peak_rows);
    r.number("peak_boost", s.peak_boost);
    r.string("branch_type", s.branch_type);
    r.string("car_group", s.car_group);
    if (r.has("drift")) {
      const Reader d = r.sub("drift");
      d.number("per_day", s.drift.per_day);
      d.number("amplitude", s.drift.amplitude);
      d.number("period_days", s.drift.period_days);
    }
    if (r.has("heuristic_rules")) {
      s.rules = rules_from_json(r.at("heuristic_rules"), r.path("heuristic_rules"));
    }
  }

  if (root.has("randomization")) {
    const Reader r = root.sub("randomization");
    auto& z = c.randomization;
    r.number("multiplier_low", z.multiplier_low);
    r.number("multiplier_high", z.multiplier_high);
    r.number("randomized_fraction", z.randomized_fraction);
    r.number("noise_sd", z.noise_sd);
    r.boolean("endogenous", z.endogenous);
    r.number("endogenous_gain", z.endogenous_gain);
    r.number("demand_shock_sd", z.demand_shock_sd);
  }
  c.randomization.seed = c.seed;

  if (root.has("forecaster")) {
    const Reader r = root.sub("forecaster");
    r.enumeration("kind", c.forecaster.kind, parse_forecaster_kind);
    r.integer("window", c.forecaster.window);
    if (r.has("options")) {
      const json& opts = r.at("options");
      check(opts.is_object(), r.path("options"), "expected an object of numbers");
      c.forecaster.options.clear();
      for (const auto& [k, v] : opts.items()) {
        check(v.is_number(), r.path("options") + "." + k, "expected a number");
        c.forecaster.options[k] = v.get<double>();
      }
    }
  }

  if (root.has("estimation")) {
    const Reader r = root.sub("estimation");
    auto& e = c.estimation;
    r.number("p_threshold", e.grouping.p_threshold);
    r.number("var_threshold", e.grouping.var_threshold);
    r.number("score_alpha", e.grouping.score_alpha);
    r.number("score_beta", e.grouping.score_beta);
    r.number("bin_width", e.grouping.bin_width);
    r.ints("lor_edges", e.lor_edges);
    r.ints("abt_edges", e.abt_edges);
    r.number("max_elasticity", e.max_elasticity);
    r.boolean("tvc", e.tvc);
    r.integer("tvc_period_days", e.tvc_period_days);
    r.integer("tvc_min_periods", e.tvc_min_periods);
    r.integer("seasonal_order", e.elasticity_forecast.seasonal_order);
    r.number("seasonal_period", e.elasticity_forecast.seasonal_period);
    r.numbers("holidays", e.elasticity_forecast.holidays);
    r.boolean("use_regressor", e.elasticity_forecast.use_regressor);
    r.number("ridge", e.elasticity_forecast.ridge);
    r.integer("cv_initial_train", e.cv_initial_train);
    r.integer("cv_step", e.cv_step);
    r.integer("cv_horizon", e.cv_horizon);
  }

  if (root.has("optimizer")) {
    const Reader r = root.sub("optimizer");
    auto& o = c.optimizer;
    r.pair("box", o.box_lo, o.box_hi);
    r.pair("band", o.band_a, o.band_b);
    r.boolean("utilization_constraints", o.utilization_constraints);
    r.number("lambda", o.risk.lambda);
    r.number("threshold_c", o.risk.threshold_c);
    r.number("affordable_p", o.risk.affordable_p);
    r.boolean("chance_constraints", o.risk.chance_constraints);
    r.enumeration("cost_mode", o.cost_mode, parse_cost_mode);
    r.enumeration("index_set", o.index_set, parse_index_set);
    r.enumeration("variance_mode", o.variance_mode, parse_variance_mode);
    r.enumeration("method", o.solve.method, parse_qp_method);
    r.number("tolerance", o.solve.qp.tolerance);
    r.integer("max_iterations", o.solve.qp.max_iterations);
    r.boolean("polish", o.solve.qp.polish);
    r.integer("max_outer", o.solve.max_outer);
    r.number("outer_tolerance", o.solve.outer_tolerance);
  }

  c.estimation.grouping.features =
      default_split_features(c.estimation.lor_edges, c.estimation.abt_edges);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  const auto& s = scenario;
  check(s.dims.pickup_days >= 1, "scenario.pickup_days", "must be >= 1");
  check(s.dims.max_abt >= 1, "scenario.max_abt", "must be >= 1");
  check(s.dims.max_lor >= 1, "scenario.max_lor", "must be >= 1");
  check(s.fleet >= 1, "scenario.fleet", "must be >= 1");
  check(s.expected_utilization > 0.0 && s.expected_utilization <= 100.0,
        "scenario.expected_utilization", "must lie in (0, 100]");
  check(s.elasticity_max < 0.0, "scenario.elasticity_max", "must be < 0");
  check(s.elasticity_min <= s.elasticity_max, "scenario.elasticity_min",
        "must be <= elasticity_max");
  check(s.cost_ratio >= 0.0 && s.cost_ratio < 1.0, "scenario.cost_ratio", "must lie in [0, 1)");
  check(s.offer_rate >= 0.0, "scenario.offer_rate", "must be >= 0");
  check(s.base_cvr > 0.0 && s.base_cvr <= 1.0, "scenario.base_cvr", "must lie in (0, 1]");
  for (int row : s.peak_rows) {
    check(row >= 0 && row < s.dims.pickup_days, "scenario.peak_rows",
          "row " + std::to_string(row) + " outside [0, pickup_days)");
  }
  check(s.peak_boost > 0.0, "scenario.peak_boost", "must be > 0");
  check(s.drift.period_days > 0.0, "scenario.drift.period_days", "must be > 0");
  check(!s.rules.rules.empty(), "scenario.heuristic_rules", "need at least one rule");
  for (std::size_t i = 0; i < s.rules.rules.size(); ++i) {
    check(s.rules.rules[i].price > 0.0,
          "scenario.heuristic_rules[" + std::to_string(i) + "].price", "must be > 0");
  }

  const auto& r = randomization;
  check(r.multiplier_low > 0.0, "randomization.multiplier_low", "must be > 0");
  check(r.multiplier_low <= r.multiplier_high, "randomization.multiplier_high",
        "must be >= multiplier_low");
  check(r.randomized_fraction >= 0.0 && r.randomized_fraction <= 1.0,
        "randomization.randomized_fraction", "must lie in [0, 1]");
  check(r.noise_sd >= 0.0, "randomization.noise_sd", "must be >= 0");
  check(r.demand_shock_sd >= 0.0, "randomization.demand_shock_sd", "must be >= 0");

  if (input_records.empty()) {
    check(history_days >= s.dims.max_abt, "history_days", "must be >= scenario.max_abt");
  }
  check(batch_days >= 0, "batch_days", "must be >= 0");
  check(monte_carlo_samples >= 1, "monte_carlo_samples", "must be >= 1");

  check(forecaster.window >= 1, "forecaster.window", "must be >= 1");
  try {
    forecaster.validate();
  } catch (const Error& e) {
    fail("forecaster.options", e.what());
  }

  const auto& e = estimation;
  check(e.grouping.p_threshold > 0.0 && e.grouping.p_threshold < 1.0, "estimation.p_threshold",
        "must lie in (0, 1)");
  check(e.grouping.var_threshold > 0.0, "estimation.var_threshold", "must be > 0");
  check(e.grouping.bin_width >= 0.0, "estimation.bin_width", "must be >= 0");
  check(ascending(e.lor_edges), "estimation.lor_edges", "must be strictly ascending");
  check(ascending(e.abt_edges), "estimation.abt_edges", "must be strictly ascending");
  check(e.max_elasticity < 0.0, "estimation.max_elasticity", "must be < 0");
  check(e.tvc_period_days >= 1, "estimation.tvc_period_days", "must be >= 1");
  check(e.tvc_min_periods >= 2, "estimation.tvc_min_periods", "must be >= 2");
  check(e.elasticity_forecast.seasonal_order >= 0, "estimation.seasonal_order", "must be >= 0");
  check(e.elasticity_forecast.seasonal_period > 0.0, "estimation.seasonal_period", "must be > 0");
  check(e.elasticity_forecast.ridge >= 0.0, "estimation.ridge", "must be >= 0");
  check(e.cv_initial_train >= 1, "estimation.cv_initial_train", "must be >= 1");
  check(e.cv_step >= 1, "estimation.cv_step", "must be >= 1");
  check(e.cv_horizon >= 1, "estimation.cv_horizon", "must be >= 1");

  const auto& o = optimizer;
  check(o.box_lo > 0.0 && o.box_lo <= o.box_hi, "optimizer.box", "need 0 < low <= high");
  check(o.band_a > 0.0 && o.band_a <= o.band_b, "optimizer.band", "need 0 < a <= b");
  check(o.risk.lambda >= 0.0, "optimizer.lambda", "must be >= 0");
  check(o.risk.threshold_c >= 0.0 && o.risk.threshold_c <= 100.0, "optimizer.threshold_c",
        "must lie in [0, 100]");
  check(o.risk.affordable_p > 0.0 && o.risk.affordable_p < 1.0, "optimizer.affordable_p",
        "must lie in (0, 1)");
  check(o.solve.qp.tolerance > 0.0, "optimizer.tolerance", "must be > 0");
  check(o.solve.qp.max_iterations >= 1, "optimizer.max_iterations", "must be >= 1");
  check(o.solve.max_outer >= 1, "optimizer.max_outer", "must be >= 1");
  check(o.solve.outer_tolerance > 0.0, "optimizer.outer_tolerance", "must be > 0");
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const bool last = i + 1 == path.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(path[i]);
      } catch (const std::exception&) {
        fail(key, "'" + path[i] + "' is not an array index");
      }
      if (idx >= node->size()) fail(key, "index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) fail(key, "cannot descend into a scalar");
      node = &(*node)[path[i]];
    }
    if (last) *node = value;
  }
}

RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + file.string());
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "config " + file.string() + " is not valid JSON");
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return run_config_from_json(j);
}

MarketScenario make_scenario(const RunConfig& c) {
  const auto& s = c.scenario;
  const GridDims d = s.dims;
  std::vector<bool> peak(static_cast<std::size_t>(d.pickup_days), false);
  for (int row : s.peak_rows) peak[static_cast<std::size_t>(row)] = true;

  std::vector<double> abt_w(static_cast<std::size_t>(d.max_abt));
  std::vector<double> lor_w(static_cast<std::size_t>(d.max_lor));
  const double tau = std::max(d.max_abt / 3.0, 1.0);
  for (int j = 0; j < d.max_abt; ++j) abt_w[static_cast<std::size_t>(j)] = std::exp(-j / tau);
  for (int k = 1; k <= d.max_lor; ++k) lor_w[static_cast<std::size_t>(k - 1)] = d.max_lor + 1 - k;
  auto normalize = [](std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x /= mean;
  };
  normalize(abt_w);
  normalize(lor_w);

  std::vector<double> price(d.cell_count()), cost(d.cell_count()), rate(d.cell_count());
  for (int i = 0; i < d.pickup_days; ++i) {
    for (int j = 0; j < d.max_abt; ++j) {
      for (int k = 1; k <= d.max_lor; ++k) {
        BookingRecord probe;
        probe.pickup_date = s.epoch + i;
        probe.booking_date = probe.pickup_date - j;
        probe.lor = k;
        probe.branch_type = s.branch_type;
        probe.car_group = s.car_group;
        probe.peak = peak[static_cast<std::size_t>(i)];
        double rate_per_day = 0.0;
        try {
          rate_per_day = baseline_price(s.rules, probe.covariates());
        } catch (const Error& e) {
          fail("scenario.heuristic_rules", e.what());
        }
        const std::size_t cell = d.cell(i, j, k);
        price[cell] = rate_per_day * k;
        cost[cell] = s.cost_ratio * price[cell];
        rate[cell] = s.offer_rate * abt_w[static_cast<std::size_t>(j)] *
                     lor_w[static_cast<std::size_t>(k - 1)] * (probe.peak ? s.peak_boost : 1.0);
      }
    }
  }

  std::vector<double> elasticity(d.segment_count());
  for (int j = 0; j < d.max_abt; ++j) {
    for (int k = 1; k <= d.max_lor; ++k) {
      const double fj = d.max_abt > 1 ? static_cast<double>(j) / (d.max_abt - 1) : 0.0;
      const double fk = d.max_lor > 1 ? static_cast<double>(k - 1) / (d.max_lor - 1) : 0.0;
      elasticity[d.segment(j, k)] =
          s.elasticity_max + (s.elasticity_min - s.elasticity_max) * (0.6 * fj + 0.4 * fk);
    }
  }

  MarketScenario out{
      MarketGrid(d, std::vector<int>(static_cast<std::size_t>(d.pickup_days), s.fleet),
                 std::move(price), std::move(cost), std::move(elasticity), s.expected_utilization,
                 s.epoch),
      std::move(rate),
      std::vector<double>(d.segment_count(), s.base_cvr),
      s.branch_type,
      s.car_group,
      std::move(peak),
      s.drift,
      s.epoch};
  out.validate();
  return out;
}

}  // namespace fleetpricer
