#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fleetpricer/forecast.hpp"
#include "fleetpricer/market.hpp"
#include "fleetpricer/qp_solver.hpp"
#include "json.hpp"

namespace fleetpricer {

enum class CostMode { fixed, per_booking };
enum class IndexSet { full_abt, paper_verbatim };
enum class VarianceMode { statistical, paper_verbatim };

CostMode parse_cost_mode(const std::string& s);
IndexSet parse_index_set(const std::string& s);
VarianceMode parse_variance_mode(const std::string& s);
std::string to_string(CostMode m);
std::string to_string(IndexSet m);
std::string to_string(VarianceMode m);

struct RiskParams {
  double lambda = 0.0;        // weight on the margin variance
  double threshold_c = 0.0;   // lower utilization threshold, percent
  double affordable_p = 0.05;
  bool chance_constraints = false;
};

struct PricingProblem {
  MarketGrid grid;
  DemandForecast forecast;
  std::vector<double> elasticity_mean;  // per cell
  std::vector<double> elasticity_sd;    // per cell
  double box_lo = 0.85;
  double box_hi = 1.15;
  double band_a = 0.5;  // multiples of expected utilization
  double band_b = 1.25;
  bool utilization_constraints = true;
  RiskParams risk;
  CostMode cost_mode = CostMode::per_booking;
  IndexSet index_set = IndexSet::full_abt;
  VarianceMode variance_mode = VarianceMode::statistical;
  /// Vehicles on rent per window day from pickups before the window.
  std::vector<double> carryover;

  void validate() const;
  std::size_t cells() const { return grid.dims().cell_count(); }
  /// Box of one cell; realized cells are pinned to clamp(1, box).
  double cell_lo(std::size_t c) const;
  double cell_hi(std::size_t c) const;
  /// Whether cell c is on rent on window day t under the index set.
  bool on_day(std::size_t c, int t) const;
};

/// Broadcast per-(j, k) elasticities over pickup days.
std::vector<double> broadcast_segments(const GridDims& dims, std::span<const double> per_segment);

/// base_demand * (1 - elasticity (1 - multiplier)), floored at 0.
double demand_response(double base_demand, double elasticity, double multiplier,
                       bool* floored = nullptr);

/// fixed: demand_response * price * multiplier - cost (cost of the slice);
/// per_booking: demand_response * (price * multiplier - cost).
double group_margin(double base_demand, double price, double cost, double elasticity,
                    double multiplier, CostMode mode);

struct SegmentInput {
  double bookings = 0.0;
  double elasticity = 0.0;
  double pct_change = 0.0;
  double new_price = 0.0;
};

struct SegmentTotals {
  double total_demand = 0.0;
  double revenue = 0.0;
  double cost = 0.0;
  double margin = 0.0;
};

SegmentTotals segment_totals(std::span<const SegmentInput> segments, double cost_per_booking);

/// Per window day, percent of fleet.
std::vector<double> utilization(const PricingProblem& p, std::span<const double> multipliers);
/// Per window day, percent squared.
std::vector<double> utilization_variance(const PricingProblem& p,
                                         std::span<const double> multipliers, VarianceMode mode);

/// 1 / (1 + exp(-(0.07056 z^3 + 1.5976 z))).
double normal_cdf_approx(double z);
/// z with normal_cdf_approx(z) = prob, prob in (0, 1).
double normal_cdf_approx_inverse(double prob);

/// Probability that utilization falls below c or above 100 percent.
double day_risk(double u_mean, double u_sd, double c);

/// Delta-method margin variance with independent demand and elasticity
/// errors per cell.
double margin_variance(const PricingProblem& p, std::span<const double> multipliers);

enum class RowKind { utilization_lower, utilization_upper, risk_lower, risk_upper };
std::string to_string(RowKind k);

/// Maximization form: sum quad_diag x^2 + linear x + constant, subject to
/// ineq x <= ineq_upper and the box. Variable v is cell var_index[v].
struct QpStandardForm {
  std::vector<double> quad_diag;
  std::vector<double> linear;
  double constant = 0.0;
  Eigen::MatrixXd ineq;
  std::vector<double> ineq_upper;
  std::vector<RowKind> row_kind;
  std::vector<int> row_day;
  std::vector<double> box_lo;
  std::vector<double> box_hi;
  std::vector<std::size_t> var_index;
};

/// Objective and utilization rows; chance rows (when enabled) use the
/// utilization sd at `sd_point` (default: every multiplier at 1).
/// Throws NonConcave when a cell with positive D*P has elasticity > 0.
QpStandardForm assemble_qp(const PricingProblem& p, std::span<const double> sd_point = {});

struct PricingPolicy {
  std::vector<double> multipliers;
  std::vector<double> expected_demand;  // per cell
  std::vector<double> cell_margin;      // per cell
  double expected_margin = 0.0;
  double margin_variance = 0.0;
  double objective = 0.0;  // expected margin - lambda * variance
  std::vector<double> utilization;
  std::vector<double> utilization_sd;
  std::vector<double> risk_per_day;
};

struct SolverReport {
  QpStatus status = QpStatus::optimal;
  QpMethod method = QpMethod::automatic;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int outer_loops = 0;
  double outer_step = 0.0;
};

/// Evaluate an arbitrary multiplier vector.
PricingPolicy evaluate_policy(const PricingProblem& p, std::span<const double> multipliers);

/// Baseline policy: every multiplier at clamp(1, box).
std::vector<double> heuristic_multipliers(const PricingProblem& p);

struct SolveOptions {
  QpMethod method = QpMethod::automatic;
  QpSettings qp;
  int max_outer = 20;
  double outer_tolerance = 1e-6;
  std::vector<double> warm_start;  // empty = heuristic point
};

/// Sequential convex solve of the margin program with frozen variance
/// sensitivities and chance-constraint sds. Throws Infeasible.
std::pair<PricingPolicy, SolverReport> solve(const PricingProblem& p, const SolveOptions& o = {});

/// pickup_day,abt,lor,multiplier,expected_demand,expected_margin
void write_policy_csv(std::ostream& os, const PricingProblem& p, const PricingPolicy& policy);
nlohmann::json solver_report_to_json(const SolverReport& r);
nlohmann::json policy_days_to_json(const PricingPolicy& policy);

}  // namespace fleetpricer
