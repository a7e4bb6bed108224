#include "fleetpricer/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fleetpricer/error.hpp"
#include "fleetpricer/kernels.hpp"
#include "fleetpricer/numfmt.hpp"

namespace fleetpricer {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

// Calls fn(first_cell, count) for each contiguous LOR run of cells that are
// on rent on window day t.
template <typename Fn>
void for_each_day_run(const PricingProblem& p, int t, Fn&& fn) {
  const auto& d = p.grid.dims();
  for (int i = 0; i <= t && i < d.pickup_days; ++i) {
    const int gap = t - i;
    const int jmax = p.index_set == IndexSet::paper_verbatim ? std::min(gap, d.max_abt - 1)
                                                             : d.max_abt - 1;
    const int kmin = p.index_set == IndexSet::paper_verbatim ? std::max(1, gap) : gap + 1;
    if (kmin > d.max_lor) continue;
    for (int j = 0; j <= jmax; ++j) {
      fn(d.cell(i, j, kmin), static_cast<std::size_t>(d.max_lor - kmin + 1));
    }
  }
}

std::vector<double> weights(const PricingProblem& p, std::span<const double> x) {
  std::vector<double> w(p.cells());
  kernels::demand_weights(p.elasticity_mean, x, w);
  return w;
}

double carry(const PricingProblem& p, int t) {
  return p.carryover.empty() ? 0.0 : p.carryover[static_cast<std::size_t>(t)];
}

// Sensitivities of one cell's margin to its demand and elasticity, and
// their derivatives in the multiplier.
struct Sensitivity {
  double f_d, df_d, f_e, df_e;
};

Sensitivity sensitivity(const PricingProblem& p, std::size_t c, double x) {
  const double D = p.forecast.mean[c];
  const double P = p.grid.price()[c];
  const double C = p.grid.cost()[c];
  const double e = p.elasticity_mean[c];
  const double w = 1.0 - e * (1.0 - x);
  Sensitivity s{};
  if (p.cost_mode == CostMode::per_booking) {
    s.f_d = w * (P * x - C);
    s.df_d = e * (P * x - C) + P * w;
    s.f_e = -D * (1.0 - x) * (P * x - C);
    s.df_e = D * (2.0 * P * x - C - P);
  } else {
    s.f_d = w * P * x - C;
    s.df_d = P * (e * x + w);
    s.f_e = -D * P * (1.0 - x) * x;
    s.df_e = -D * P * (1.0 - 2.0 * x);
  }
  return s;
}

}  // namespace

CostMode parse_cost_mode(const std::string& s) {
  if (s == "fixed") return CostMode::fixed;
  if (s == "per_booking") return CostMode::per_booking;
  throw Error(ErrorCode::ConfigError, "unknown cost_mode '" + s + "'");
}

IndexSet parse_index_set(const std::string& s) {
  if (s == "full_abt") return IndexSet::full_abt;
  if (s == "paper_verbatim") return IndexSet::paper_verbatim;
  throw Error(ErrorCode::ConfigError, "unknown index_set '" + s + "'");
}

VarianceMode parse_variance_mode(const std::string& s) {
  if (s == "statistical") return VarianceMode::statistical;
  if (s == "paper_verbatim") return VarianceMode::paper_verbatim;
  throw Error(ErrorCode::ConfigError, "unknown variance_mode '" + s + "'");
}

std::string to_string(CostMode m) { return m == CostMode::fixed ? "fixed" : "per_booking"; }
std::string to_string(IndexSet m) {
  return m == IndexSet::full_abt ? "full_abt" : "paper_verbatim";
}
std::string to_string(VarianceMode m) {
  return m == VarianceMode::statistical ? "statistical" : "paper_verbatim";
}

std::string to_string(RowKind k) {
  switch (k) {
    case RowKind::utilization_lower: return "utilization_lower";
    case RowKind::utilization_upper: return "utilization_upper";
    case RowKind::risk_lower: return "risk_lower";
    case RowKind::risk_upper: return "risk_upper";
  }
  return "unknown";
}

void PricingProblem::validate() const {
  const auto& d = grid.dims();
  require(forecast.dims == d, "forecast grid does not match the market grid");
  forecast.validate();
  require(elasticity_mean.size() == d.cell_count() && elasticity_sd.size() == d.cell_count(),
          "elasticity mean/sd must have one entry per cell");
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    require(std::isfinite(elasticity_mean[c]), "elasticity must be finite");
    require(elasticity_sd[c] >= 0.0, "elasticity sd must be >= 0");
  }
  require(box_lo > 0.0 && box_lo <= box_hi, "need 0 < box_lo <= box_hi");
  require(band_a > 0.0 && band_a <= band_b, "need 0 < band_a <= band_b");
  require(risk.lambda >= 0.0, "lambda must be >= 0");
  require(risk.affordable_p > 0.0 && risk.affordable_p < 1.0, "affordable_p must lie in (0, 1)");
  require(carryover.empty() || carryover.size() == static_cast<std::size_t>(d.pickup_days),
          "carryover must be empty or have one entry per pickup day");
}

double PricingProblem::cell_lo(std::size_t c) const {
  return forecast.realized[c] ? std::clamp(1.0, box_lo, box_hi) : box_lo;
}

double PricingProblem::cell_hi(std::size_t c) const {
  return forecast.realized[c] ? std::clamp(1.0, box_lo, box_hi) : box_hi;
}

bool PricingProblem::on_day(std::size_t c, int t) const {
  const CellIndex idx = decode_cell(grid.dims(), c);
  const int gap = t - idx.pickup_day;
  if (gap < 0) return false;
  if (index_set == IndexSet::paper_verbatim) return idx.abt <= gap && idx.lor >= std::max(1, gap);
  return gap < idx.lor;
}

std::vector<double> broadcast_segments(const GridDims& dims, std::span<const double> per_segment) {
  require(per_segment.size() == dims.segment_count(), "need one value per (abt, lor) segment");
  std::vector<double> out(dims.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = per_segment[c % dims.segment_count()];
  return out;
}

double demand_response(double base_demand, double elasticity, double multiplier, bool* floored) {
  const double v = base_demand * (1.0 - elasticity * (1.0 - multiplier));
  if (floored != nullptr) *floored = v < 0.0;
  return std::max(0.0, v);
}

double group_margin(double base_demand, double price, double cost, double elasticity,
                    double multiplier, CostMode mode) {
  const double d = demand_response(base_demand, elasticity, multiplier);
  if (mode == CostMode::per_booking) return d * (price * multiplier - cost);
  return d * price * multiplier - cost;
}

SegmentTotals segment_totals(std::span<const SegmentInput> segments, double cost_per_booking) {
  require(!segments.empty(), "segment_totals needs at least one segment");
  SegmentTotals t;
  for (const auto& s : segments) {
    const double d = s.bookings * (1.0 + s.elasticity * s.pct_change);
    t.total_demand += d;
    t.revenue += s.new_price * d;
  }
  t.cost = t.total_demand * cost_per_booking;
  t.margin = t.revenue - t.cost;
  return t;
}

std::vector<double> utilization(const PricingProblem& p, std::span<const double> multipliers) {
  const auto& d = p.grid.dims();
  require(multipliers.size() == p.cells(), "one multiplier per cell required");
  const std::vector<double> w = weights(p, multipliers);
  std::vector<double> dw(p.cells());
  kernels::mul(p.forecast.mean, w, dw);
  std::vector<double> u(static_cast<std::size_t>(d.pickup_days));
  for (int t = 0; t < d.pickup_days; ++t) {
    double s = carry(p, t);
    for_each_day_run(p, t, [&](std::size_t first, std::size_t count) {
      for (std::size_t c = first; c < first + count; ++c) s += dw[c];
    });
    u[static_cast<std::size_t>(t)] = 100.0 / p.grid.fleet()[static_cast<std::size_t>(t)] * s;
  }
  return u;
}

std::vector<double> utilization_variance(const PricingProblem& p,
                                         std::span<const double> multipliers, VarianceMode mode) {
  const auto& d = p.grid.dims();
  require(multipliers.size() == p.cells(), "one multiplier per cell required");
  const std::vector<double> w = weights(p, multipliers);
  const auto& sd = p.forecast.sd;
  std::vector<double> sd2(p.cells());
  kernels::mul(sd, sd, sd2);
  const auto& kt = kernels::active();
  std::vector<double> v(static_cast<std::size_t>(d.pickup_days));
  for (int t = 0; t < d.pickup_days; ++t) {
    const double f = p.grid.fleet()[static_cast<std::size_t>(t)];
    double s = 0.0;
    for_each_day_run(p, t, [&](std::size_t first, std::size_t count) {
      if (mode == VarianceMode::statistical) {
        s += kt.weighted_sq_sum(w.data() + first, sd.data() + first, count);
      } else {
        s += kt.dot(w.data() + first, sd2.data() + first, count);
      }
    });
    v[static_cast<std::size_t>(t)] =
        mode == VarianceMode::statistical ? (100.0 * 100.0) / (f * f) * s : 100.0 / f * s;
  }
  return v;
}

double normal_cdf_approx(double z) {
  return 1.0 / (1.0 + std::exp(-(0.07056 * z * z * z + 1.5976 * z)));
}

double normal_cdf_approx_inverse(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "probability must lie in (0, 1)");
  }
  // The argument polynomial is monotone, so invert it on the logit scale.
  const double target = std::log(prob / (1.0 - prob));
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.07056 * mid * mid * mid + 1.5976 * mid < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double day_risk(double u_mean, double u_sd, double c) {
  if (u_sd <= 0.0) return (u_mean < c ? 1.0 : 0.0) + (u_mean > 100.0 ? 1.0 : 0.0);
  return normal_cdf_approx((c - u_mean) / u_sd) + (1.0 - normal_cdf_approx((100.0 - u_mean) / u_sd));
}

double margin_variance(const PricingProblem& p, std::span<const double> multipliers) {
  require(multipliers.size() == p.cells(), "one multiplier per cell required");
  double v = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const Sensitivity s = sensitivity(p, c, multipliers[c]);
    const double sd_d = p.forecast.sd[c];
    const double sd_e = p.elasticity_sd[c];
    v += s.f_d * s.f_d * sd_d * sd_d + s.f_e * s.f_e * sd_e * sd_e;
  }
  return v;
}

std::vector<double> heuristic_multipliers(const PricingProblem& p) {
  std::vector<double> x(p.cells());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = std::clamp(1.0, p.cell_lo(c), p.cell_hi(c));
  return x;
}

QpStandardForm assemble_qp(const PricingProblem& p, std::span<const double> sd_point) {
  p.validate();
  const auto& d = p.grid.dims();
  const std::size_t n = p.cells();
  QpStandardForm f;
  f.quad_diag.resize(n);
  f.linear.resize(n);
  f.box_lo.resize(n);
  f.box_hi.resize(n);
  f.var_index.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double D = p.forecast.mean[c];
    const double P = p.grid.price()[c];
    const double C = p.grid.cost()[c];
    const double e = p.elasticity_mean[c];
    f.quad_diag[c] = D * P * e;
    if (f.quad_diag[c] > 0.0) {
      const CellIndex idx = decode_cell(d, c);
      throw Error(ErrorCode::NonConcave, "positive elasticity " + fmt9(e) + " at cell (" +
                                             std::to_string(idx.pickup_day) + "," +
                                             std::to_string(idx.abt) + "," +
                                             std::to_string(idx.lor) + ")");
    }
    f.linear[c] = D * P * (1.0 - e);
    if (p.cost_mode == CostMode::per_booking) {
      f.linear[c] -= C * D * e;
      f.constant -= C * D * (1.0 - e);
    } else {
      f.constant -= D * C;
    }
    f.box_lo[c] = p.cell_lo(c);
    f.box_hi[c] = p.cell_hi(c);
    f.var_index[c] = c;
  }

  const int N = d.pickup_days;
  std::vector<Eigen::VectorXd> coef(static_cast<std::size_t>(N), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  std::vector<double> base(static_cast<std::size_t>(N), 0.0);
  for (int t = 0; t < N; ++t) {
    const double scale = 100.0 / p.grid.fleet()[static_cast<std::size_t>(t)];
    auto& row = coef[static_cast<std::size_t>(t)];
    double b = carry(p, t);
    for_each_day_run(p, t, [&](std::size_t first, std::size_t count) {
      for (std::size_t c = first; c < first + count; ++c) {
        row(static_cast<Eigen::Index>(c)) = scale * p.forecast.mean[c] * p.elasticity_mean[c];
        b += p.forecast.mean[c] * (1.0 - p.elasticity_mean[c]);
      }
    });
    base[static_cast<std::size_t>(t)] = scale * b;
  }

  std::vector<Eigen::VectorXd> rows;
  auto add_row = [&](const Eigen::VectorXd& a, double ub, RowKind kind, int t) {
    rows.push_back(a);
    f.ineq_upper.push_back(ub);
    f.row_kind.push_back(kind);
    f.row_day.push_back(t);
  };
  const double u0 = p.grid.expected_utilization();
  if (p.utilization_constraints) {
    for (int t = 0; t < N; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      add_row(coef[ts], p.band_b * u0 - base[ts], RowKind::utilization_upper, t);
    }
    for (int t = 0; t < N; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      add_row(-coef[ts], -(p.band_a * u0 - base[ts]), RowKind::utilization_lower, t);
    }
  }
  if (p.risk.chance_constraints) {
    const std::vector<double> at = sd_point.empty() ? heuristic_multipliers(p)
                                                    : std::vector<double>(sd_point.begin(), sd_point.end());
    const std::vector<double> var = utilization_variance(p, at, p.variance_mode);
    const double z = normal_cdf_approx_inverse(1.0 - p.risk.affordable_p);
    for (int t = 0; t < N; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const double sd = std::sqrt(std::max(0.0, var[ts]));
      add_row(coef[ts], 100.0 - z * sd - base[ts], RowKind::risk_upper, t);
    }
    for (int t = 0; t < N; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const double sd = std::sqrt(std::max(0.0, var[ts]));
      add_row(-coef[ts], -(p.risk.threshold_c + z * sd - base[ts]), RowKind::risk_lower, t);
    }
  }
  f.ineq.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) f.ineq.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return f;
}

PricingPolicy evaluate_policy(const PricingProblem& p, std::span<const double> multipliers) {
  p.validate();
  require(multipliers.size() == p.cells(), "one multiplier per cell required");
  PricingPolicy out;
  out.multipliers.assign(multipliers.begin(), multipliers.end());
  out.expected_demand.resize(p.cells());
  out.cell_margin.resize(p.cells());
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const double x = multipliers[c];
    const double D = p.forecast.mean[c];
    const double P = p.grid.price()[c];
    const double C = p.grid.cost()[c];
    const double e = p.elasticity_mean[c];
    out.expected_demand[c] = demand_response(D, e, x);
    out.cell_margin[c] = p.cost_mode == CostMode::per_booking
                             ? group_margin(D, P, C, e, x, CostMode::per_booking)
                             : group_margin(D, P, D * C, e, x, CostMode::fixed);
    out.expected_margin += out.cell_margin[c];
  }
  out.margin_variance = margin_variance(p, multipliers);
  out.objective = out.expected_margin - p.risk.lambda * out.margin_variance;
  out.utilization = utilization(p, multipliers);
  const std::vector<double> var = utilization_variance(p, multipliers, p.variance_mode);
  out.utilization_sd.resize(var.size());
  out.risk_per_day.resize(var.size());
  for (std::size_t t = 0; t < var.size(); ++t) {
    out.utilization_sd[t] = std::sqrt(std::max(0.0, var[t]));
    out.risk_per_day[t] = day_risk(out.utilization[t], out.utilization_sd[t], p.risk.threshold_c);
  }
  return out;
}

std::pair<PricingPolicy, SolverReport> solve(const PricingProblem& p, const SolveOptions& o) {
  p.validate();
  const std::size_t n = p.cells();
  std::vector<double> x = heuristic_multipliers(p);
  if (!o.warm_start.empty()) {
    require(o.warm_start.size() == n, "warm start must have one entry per cell");
    for (std::size_t c = 0; c < n; ++c) x[c] = std::clamp(o.warm_start[c], p.cell_lo(c), p.cell_hi(c));
  }
  const bool sequential = p.risk.chance_constraints || p.risk.lambda > 0.0;
  SolverReport report;
  report.method = o.method;
  report.status = QpStatus::max_iterations;
  const double inf = std::numeric_limits<double>::infinity();
  for (int outer = 1; outer <= std::max(1, o.max_outer); ++outer) {
    const QpStandardForm f = assemble_qp(p, x);
    QpProblem q;
    const auto ni = static_cast<Eigen::Index>(n);
    q.h.resize(ni);
    q.g.resize(ni);
    q.lo.resize(ni);
    q.hi.resize(ni);
    for (std::size_t c = 0; c < n; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      q.h(ci) = -2.0 * f.quad_diag[c];
      q.g(ci) = -f.linear[c];
      q.lo(ci) = f.box_lo[c];
      q.hi(ci) = f.box_hi[c];
      if (p.risk.lambda > 0.0) {
        // Gauss-Newton model of lambda * Var[M] around the current point.
        const Sensitivity s = sensitivity(p, c, x[c]);
        const double vd = p.forecast.sd[c] * p.forecast.sd[c];
        const double ve = p.elasticity_sd[c] * p.elasticity_sd[c];
        const double lam2 = 2.0 * p.risk.lambda;
        q.h(ci) += lam2 * (vd * s.df_d * s.df_d + ve * s.df_e * s.df_e);
        q.g(ci) += lam2 * (vd * s.df_d * (s.f_d - s.df_d * x[c]) + ve * s.df_e * (s.f_e - s.df_e * x[c]));
      }
    }
    q.A = f.ineq;
    q.row_lo = Eigen::VectorXd::Constant(q.A.rows(), -inf);
    q.row_hi = Eigen::Map<const Eigen::VectorXd>(f.ineq_upper.data(), static_cast<Eigen::Index>(f.ineq_upper.size()));
    const Eigen::VectorXd warm = Eigen::Map<const Eigen::VectorXd>(x.data(), ni);
    const QpResult r = solve_qp(q, o.qp, o.method, &warm);
    report.method = r.method;
    report.iterations += r.iterations;
    report.primal_residual = r.primal_residual;
    report.dual_residual = r.dual_residual;
    report.outer_loops = outer;
    if (r.status == QpStatus::infeasible) {
      throw Error(ErrorCode::Infeasible, "utilization constraints cannot be met inside the box");
    }
    double step = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      step = std::max(step, std::abs(r.x(static_cast<Eigen::Index>(c)) - x[c]));
      x[c] = r.x(static_cast<Eigen::Index>(c));
    }
    report.outer_step = step;
    report.status = r.status;
    if (!sequential) break;
    if (step < o.outer_tolerance) break;
    if (outer == std::max(1, o.max_outer)) report.status = QpStatus::max_iterations;
  }
  // Cells without revenue at stake carry no signal; keep them at baseline.
  for (std::size_t c = 0; c < n; ++c) {
    if (p.forecast.mean[c] * p.grid.price()[c] == 0.0) x[c] = std::clamp(1.0, p.cell_lo(c), p.cell_hi(c));
  }
  return {evaluate_policy(p, x), report};
}

void write_policy_csv(std::ostream& os, const PricingProblem& p, const PricingPolicy& policy) {
  os << "pickup_day,abt,lor,multiplier,expected_demand,expected_margin\n";
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const CellIndex idx = decode_cell(p.grid.dims(), c);
    os << idx.pickup_day << ',' << idx.abt << ',' << idx.lor << ',' << fmt9(policy.multipliers[c])
       << ',' << fmt9(policy.expected_demand[c]) << ',' << fmt9(policy.cell_margin[c]) << '\n';
  }
}

nlohmann::json solver_report_to_json(const SolverReport& r) {
  return {{"status", to_string(r.status)},
          {"method", to_string(r.method)},
          {"iterations", r.iterations},
          {"primal_residual", sig9(r.primal_residual)},
          {"dual_residual", sig9(r.dual_residual)},
          {"outer_loops", r.outer_loops},
          {"outer_step", sig9(r.outer_step)}};
}

nlohmann::json policy_days_to_json(const PricingPolicy& policy) {
  nlohmann::json days = nlohmann::json::array();
  for (std::size_t t = 0; t < policy.utilization.size(); ++t) {
    days.push_back({{"day", t},
                    {"utilization", sig9(policy.utilization[t])},
                    {"utilization_sd", sig9(policy.utilization_sd[t])},
                    {"risk", sig9(policy.risk_per_day[t])}});
  }
  return {{"expected_margin", sig9(policy.expected_margin)},
          {"margin_variance", sig9(policy.margin_variance)},
          {"objective", sig9(policy.objective)},
          {"days", days}};
}

}  // namespace fleetpricer
