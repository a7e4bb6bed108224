#include "fleetpricer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "fleetpricer/error.hpp"
#include "fleetpricer/kernels.hpp"
#include "fleetpricer/numfmt.hpp"

namespace fleetpricer {

RiskAggregate aggregate_risk(std::span<const RiskDecision> decisions, bool normalize) {
  double rms_bf = 1.0, rms_e = 1.0;
  if (normalize && !decisions.empty()) {
    double s_bf = 0.0, s_e = 0.0;
    for (const auto& d : decisions) {
      s_bf += d.sigma_bf * d.sigma_bf;
      s_e += d.sigma_e * d.sigma_e;
    }
    const auto n = static_cast<double>(decisions.size());
    if (s_bf > 0.0) rms_bf = std::sqrt(s_bf / n);
    if (s_e > 0.0) rms_e = std::sqrt(s_e / n);
  }
  RiskAggregate out;
  for (const auto& d : decisions) {
    if (!(d.sigma_bf >= 0.0) || !(d.sigma_e >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "risk sigmas must be non-negative");
    }
    const double a = d.sigma_bf / rms_bf;
    const double b = d.sigma_e / rms_e;
    const double c = std::sqrt(a * a + b * b);
    out.per_decision.push_back({d.sigma_bf, d.sigma_e, c});
    out.total += c;
  }
  return out;
}

std::vector<double> opportunity_cost(std::span<const Choice> choices) {
  if (choices.empty()) throw Error(ErrorCode::InvalidArgument, "choice set is empty");
  double best = choices.front().value;
  for (const auto& c : choices) best = std::max(best, c.value);
  std::vector<double> out;
  out.reserve(choices.size());
  for (const auto& c : choices) out.push_back(best - c.value);
  return out;
}

FleetCounterfactual fleet_opportunity_cost(const PricingProblem& p, const SolveOptions& o) {
  const auto [pc, rc] = solve(p, o);
  PricingProblem relaxed = p;
  relaxed.utilization_constraints = false;
  relaxed.risk.chance_constraints = false;
  auto [pu, ru] = solve(relaxed, o);
  (void)rc;
  (void)ru;

  FleetCounterfactual f;
  const QpStandardForm form = assemble_qp(p, pu.multipliers);
  const Eigen::VectorXd xu =
      Eigen::Map<const Eigen::VectorXd>(pu.multipliers.data(), static_cast<Eigen::Index>(pu.multipliers.size()));
  bool feasible = true;
  if (form.ineq.rows() > 0) {
    const Eigen::VectorXd ax = form.ineq * xu;
    for (Eigen::Index r = 0; r < ax.size(); ++r) {
      const double ub = form.ineq_upper[static_cast<std::size_t>(r)];
      if (ax(r) > ub + 1e-9 * (1.0 + std::abs(ub))) feasible = false;
    }
  }
  if (feasible) {
    // The relaxed optimum is admissible, so both programs share it.
    f.constrained_margin = pu.objective;
    f.constrained_multipliers = pu.multipliers;
  } else {
    f.constrained_margin = pc.objective;
    f.constrained_multipliers = pc.multipliers;
  }
  f.unconstrained_margin = std::max(pu.objective, f.constrained_margin);
  f.unconstrained_multipliers = pu.multipliers;

  const auto fleet = p.grid.fleet();
  f.n_constrained = *std::max_element(fleet.begin(), fleet.end());
  f.n_optimal = 0.0;
  for (std::size_t t = 0; t < pu.utilization.size(); ++t) {
    f.n_optimal = std::max(f.n_optimal, pu.utilization[t] * fleet[t] / 100.0);
  }
  f.delta_n = f.n_optimal - f.n_constrained;
  if (std::abs(f.delta_n) < 1e-9) {
    f.zero_delta_n = true;
    f.oc_per_vehicle = 0.0;
  } else {
    f.oc_per_vehicle = (f.unconstrained_margin - f.constrained_margin) / f.delta_n;
  }
  return f;
}

namespace {

struct BlockStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::vector<std::uint64_t> upper, lower, either;
  std::vector<double> u_sum, u_sq;
};

void merge(BlockStats& a, const BlockStats& b) {
  if (b.n == 0) return;
  const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n);
  const double delta = b.mean - a.mean;
  const double n = na + nb;
  a.mean += delta * nb / n;
  a.m2 += b.m2 + delta * delta * na * nb / n;
  a.n += b.n;
  for (std::size_t t = 0; t < a.upper.size(); ++t) {
    a.upper[t] += b.upper[t];
    a.lower[t] += b.lower[t];
    a.either[t] += b.either[t];
    a.u_sum[t] += b.u_sum[t];
    a.u_sq[t] += b.u_sq[t];
  }
}

}  // namespace

MonteCarloResult monte_carlo_eval(const PricingProblem& p, std::span<const double> multipliers,
                                  std::uint64_t samples, std::uint64_t seed,
                                  const MonteCarloOptions& options) {
  p.validate();
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "monte carlo needs at least one sample");
  if (multipliers.size() != p.cells()) {
    throw Error(ErrorCode::InvalidArgument, "one multiplier per cell required");
  }
  const std::size_t n = p.cells();
  const auto N = static_cast<std::size_t>(p.grid.dims().pickup_days);
  std::vector<std::vector<std::size_t>> day_cells(N);
  for (std::size_t t = 0; t < N; ++t) {
    for (std::size_t c = 0; c < n; ++c) {
      if (p.on_day(c, static_cast<int>(t))) day_cells[t].push_back(c);
    }
  }
  const std::uint64_t bs = std::max<std::uint64_t>(1, options.block_size);
  const std::uint64_t blocks = (samples + bs - 1) / bs;
  std::vector<BlockStats> stats(blocks);

  auto run_block = [&](std::uint64_t b) {
    BlockStats s;
    s.upper.assign(N, 0);
    s.lower.assign(N, 0);
    s.either.assign(N, 0);
    s.u_sum.assign(N, 0.0);
    s.u_sq.assign(N, 0.0);
    std::mt19937_64 rng(mix_seed({seed, 0x3C, b}));
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> d(n), e(n), w(n), dw(n);
    const std::uint64_t count = std::min(bs, samples - b * bs);
    for (std::uint64_t k = 0; k < count; ++k) {
      for (std::size_t c = 0; c < n; ++c) {
        d[c] = std::max(0.0, p.forecast.mean[c] + p.forecast.sd[c] * z(rng));
        e[c] = p.elasticity_mean[c] + p.elasticity_sd[c] * z(rng);
      }
      kernels::demand_weights(e, multipliers, w);
      kernels::mul(d, w, dw);
      double margin = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double q = std::max(0.0, dw[c]);
        const double P = p.grid.price()[c];
        const double C = p.grid.cost()[c];
        margin += p.cost_mode == CostMode::per_booking ? q * (P * multipliers[c] - C)
                                                       : q * P * multipliers[c] - d[c] * C;
      }
      ++s.n;
      const double delta = margin - s.mean;
      s.mean += delta / static_cast<double>(s.n);
      s.m2 += delta * (margin - s.mean);
      for (std::size_t t = 0; t < N; ++t) {
        double on = p.carryover.empty() ? 0.0 : p.carryover[t];
        for (std::size_t c : day_cells[t]) on += std::max(0.0, dw[c]);
        const double u = 100.0 / p.grid.fleet()[t] * on;
        const bool hi = u > 100.0;
        const bool lo = u < p.risk.threshold_c;
        s.upper[t] += hi;
        s.lower[t] += lo;
        s.either[t] += hi || lo;
        s.u_sum[t] += u;
        s.u_sq[t] += u * u;
      }
    }
    stats[b] = std::move(s);
  };

  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, blocks));
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t b = t; b < blocks; b += threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  BlockStats total = std::move(stats[0]);
  for (std::uint64_t b = 1; b < blocks; ++b) merge(total, stats[b]);
  MonteCarloResult out;
  out.samples = total.n;
  out.margin_mean = total.mean;
  out.margin_sd = total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1)) : 0.0;
  const auto ns = static_cast<double>(total.n);
  for (std::size_t t = 0; t < N; ++t) {
    out.violation_frequency.push_back(static_cast<double>(total.either[t]) / ns);
    out.upper_frequency.push_back(static_cast<double>(total.upper[t]) / ns);
    out.lower_frequency.push_back(static_cast<double>(total.lower[t]) / ns);
    const double m = total.u_sum[t] / ns;
    out.utilization_mean.push_back(m);
    out.utilization_var.push_back(total.n > 1 ? std::max(0.0, (total.u_sq[t] - ns * m * m) / (ns - 1.0)) : 0.0);
  }
  return out;
}

std::vector<BenchmarkRow> benchmark(const PricingProblem& p,
                                    std::span<const std::pair<std::string, std::vector<double>>> policies) {
  std::vector<BenchmarkRow> rows;
  const double u0 = p.grid.expected_utilization();
  for (const auto& [label, x] : policies) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (x[c] < p.box_lo - 1e-12 || x[c] > p.box_hi + 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "policy '" + label + "' leaves the box");
      }
    }
    const PricingPolicy pol = evaluate_policy(p, x);
    BenchmarkRow row;
    row.label = label;
    row.expected_margin = pol.expected_margin;
    row.objective = pol.objective;
    std::vector<RiskDecision> decisions;
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (std::abs(x[c] - 1.0) > 1e-9) decisions.push_back({p.forecast.sd[c], p.elasticity_sd[c]});
    }
    row.risk_total = aggregate_risk(decisions).total;
    double r = 0.0;
    for (std::size_t t = 0; t < pol.utilization.size(); ++t) {
      r += pol.risk_per_day[t];
      const double u = pol.utilization[t];
      const double tol = 1e-9 * (1.0 + u0);
      if (u < p.band_a * u0 - tol || u > p.band_b * u0 + tol) ++row.band_violations;
    }
    row.mean_day_risk = pol.utilization.empty() ? 0.0 : r / static_cast<double>(pol.utilization.size());
    rows.push_back(row);
  }
  if (!rows.empty()) {
    std::vector<Choice> choices;
    for (const auto& r : rows) choices.push_back({r.label, r.expected_margin});
    const std::vector<double> oc = opportunity_cost(choices);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].opportunity_cost = oc[i];
  }
  return rows;
}

nlohmann::json fleet_counterfactual_to_json(const FleetCounterfactual& f) {
  return {{"constrained_margin", sig9(f.constrained_margin)},
          {"unconstrained_margin", sig9(f.unconstrained_margin)},
          {"n_constrained", sig9(f.n_constrained)},
          {"n_optimal", sig9(f.n_optimal)},
          {"delta_n", sig9(f.delta_n)},
          {"oc_per_vehicle", sig9(f.oc_per_vehicle)},
          {"zero_delta_n", f.zero_delta_n}};
}

nlohmann::json monte_carlo_to_json(const MonteCarloResult& r) {
  nlohmann::json days = nlohmann::json::array();
  for (std::size_t t = 0; t < r.violation_frequency.size(); ++t) {
    days.push_back({{"day", t},
                    {"violation_frequency", sig9(r.violation_frequency[t])},
                    {"upper_frequency", sig9(r.upper_frequency[t])},
                    {"lower_frequency", sig9(r.lower_frequency[t])}});
  }
  return {{"samples", r.samples},
          {"margin_mean", sig9(r.margin_mean)},
          {"margin_sd", sig9(r.margin_sd)},
          {"days", days}};
}

}  // namespace fleetpricer
