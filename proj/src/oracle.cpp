#include "fleetpricer/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fleetpricer/error.hpp"

namespace fleetpricer {

namespace {

struct Lattice {
  std::vector<std::vector<double>> values;  // per cell
  std::vector<std::vector<double>> score;   // per cell per value: margin - lambda*var
};

double cell_score(const PricingProblem& p, std::size_t c, double x) {
  const double D = p.forecast.mean[c];
  const double P = p.grid.price()[c];
  const double C = p.grid.cost()[c];
  const double e = p.elasticity_mean[c];
  const double w = 1.0 - e * (1.0 - x);
  double margin, fd, fe;
  if (p.cost_mode == CostMode::per_booking) {
    margin = group_margin(D, P, C, e, x, CostMode::per_booking);
    fd = w * (P * x - C);
    fe = -D * (1.0 - x) * (P * x - C);
  } else {
    margin = group_margin(D, P, D * C, e, x, CostMode::fixed);
    fd = w * P * x - C;
    fe = -D * P * (1.0 - x) * x;
  }
  if (p.risk.lambda == 0.0) return margin;
  const double sd = p.forecast.sd[c];
  const double se = p.elasticity_sd[c];
  return margin - p.risk.lambda * (fd * fd * sd * sd + fe * fe * se * se);
}

// u_t = base_t + sum_c coef(t, c) x_c, with the band as row bounds.
struct Rows {
  std::vector<std::vector<double>> coef;  // [t][c]
  std::vector<double> base, lo, hi;
};

Rows utilization_rows(const PricingProblem& p) {
  const int N = p.grid.dims().pickup_days;
  Rows r;
  r.coef.assign(static_cast<std::size_t>(N), std::vector<double>(p.cells(), 0.0));
  r.base.assign(static_cast<std::size_t>(N), 0.0);
  const double u0 = p.grid.expected_utilization();
  for (int t = 0; t < N; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const double scale = 100.0 / p.grid.fleet()[ts];
    double b = p.carryover.empty() ? 0.0 : p.carryover[ts];
    for (std::size_t c = 0; c < p.cells(); ++c) {
      if (!p.on_day(c, t)) continue;
      r.coef[ts][c] = scale * p.forecast.mean[c] * p.elasticity_mean[c];
      b += p.forecast.mean[c] * (1.0 - p.elasticity_mean[c]);
    }
    r.base[ts] = scale * b;
    r.lo.push_back(p.utilization_constraints ? p.band_a * u0 : -std::numeric_limits<double>::infinity());
    r.hi.push_back(p.utilization_constraints ? p.band_b * u0 : std::numeric_limits<double>::infinity());
  }
  return r;
}

bool risk_ok(const PricingProblem& p, const std::vector<double>& x, const std::vector<double>& u) {
  if (!p.risk.chance_constraints) return true;
  const std::vector<double> var = utilization_variance(p, x, p.variance_mode);
  const double tol = 1e-12;
  for (std::size_t t = 0; t < var.size(); ++t) {
    const double sd = std::sqrt(std::max(0.0, var[t]));
    double lower, upper;
    if (sd <= 0.0) {
      lower = u[t] < p.risk.threshold_c ? 1.0 : 0.0;
      upper = u[t] > 100.0 ? 1.0 : 0.0;
    } else {
      lower = normal_cdf_approx((p.risk.threshold_c - u[t]) / sd);
      upper = 1.0 - normal_cdf_approx((100.0 - u[t]) / sd);
    }
    if (lower > p.risk.affordable_p + tol || upper > p.risk.affordable_p + tol) return false;
  }
  return true;
}

class Search {
 public:
  Search(const PricingProblem& p, Lattice lat, Rows rows, std::uint64_t budget, bool prune)
      : p_(p), lat_(std::move(lat)), rows_(std::move(rows)), budget_(budget), prune_(prune) {
    n_ = p.cells();
    T_ = rows_.base.size();
    x_.assign(n_, 0.0);
    acc_.assign(T_, 0.0);
    best_x_.assign(n_, 0.0);
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (prune_) prepare_bounds();
  }

  bool run() {
    dfs(0, 0.0);
    return found_;
  }

  const std::vector<double>& best_x() const { return best_x_; }
  double best() const { return best_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  double slack_tol(std::size_t t) const {
    return 1e-9 * (1.0 + std::abs(rows_.base[t]) + std::abs(rows_.hi[t]));
  }

  // Lagrangian multipliers from projected subgradient descent on the
  // lattice dual of the utilization rows, then suffix bounds.
  void prepare_bounds() {
    mu_lo_.assign(T_, 0.0);
    mu_hi_.assign(T_, 0.0);
    std::vector<double> best_mu_lo = mu_lo_, best_mu_hi = mu_hi_;
    double best_dual = dual_value(mu_lo_, mu_hi_, nullptr);
    double scale = 0.0;
    for (const auto& s : lat_.score) {
      for (double v : s) scale = std::max(scale, std::abs(v));
    }
    std::vector<std::size_t> arg(n_);
    for (int it = 0; it < 2000 && T_ > 0; ++it) {
      dual_value(mu_lo_, mu_hi_, &arg);
      // Subgradient: row activity at the Lagrangian maximizer.
      std::vector<double> act = rows_.base;
      for (std::size_t c = 0; c < n_; ++c) {
        const double v = lat_.values[c][arg[c]];
        for (std::size_t t = 0; t < T_; ++t) act[t] += rows_.coef[t][c] * v;
      }
      double norm = 0.0;
      std::vector<double> g_hi(T_), g_lo(T_);
      for (std::size_t t = 0; t < T_; ++t) {
        g_hi[t] = std::isfinite(rows_.hi[t]) ? rows_.hi[t] - act[t] : 0.0;
        g_lo[t] = std::isfinite(rows_.lo[t]) ? act[t] - rows_.lo[t] : 0.0;
        norm += g_hi[t] * g_hi[t] + g_lo[t] * g_lo[t];
      }
      if (norm == 0.0) break;
      const double alpha = (scale + 1.0) * 0.5 / (1.0 + it) / std::sqrt(norm);
      for (std::size_t t = 0; t < T_; ++t) {
        mu_hi_[t] = std::max(0.0, mu_hi_[t] - alpha * g_hi[t]);
        mu_lo_[t] = std::max(0.0, mu_lo_[t] - alpha * g_lo[t]);
      }
      const double d = dual_value(mu_lo_, mu_hi_, nullptr);
      if (d < best_dual) {
        best_dual = d;
        best_mu_lo = mu_lo_;
        best_mu_hi = mu_hi_;
      }
    }
    mu_lo_ = best_mu_lo;
    mu_hi_ = best_mu_hi;

    // Per-cell reduced scores and suffix sums in search order.
    reduced_.assign(n_, {});
    std::vector<double> cell_max(n_);
    for (std::size_t c = 0; c < n_; ++c) {
      reduced_[c].resize(lat_.values[c].size());
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < lat_.values[c].size(); ++k) {
        reduced_[c][k] = reduced_score(c, k);
        m = std::max(m, reduced_[c][k]);
      }
      cell_max[c] = m;
    }
    // Branch on the cells with the widest reduced-score spread first.
    std::vector<double> spread(n_);
    for (std::size_t c = 0; c < n_; ++c) {
      const auto [mn, mx] = std::minmax_element(reduced_[c].begin(), reduced_[c].end());
      spread[c] = *mx - *mn;
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return spread[a] > spread[b]; });
    suffix_.assign(n_ + 1, 0.0);
    row_min_.assign(n_ + 1, std::vector<double>(T_, 0.0));
    row_max_.assign(n_ + 1, std::vector<double>(T_, 0.0));
    for (std::size_t d = n_; d-- > 0;) {
      const std::size_t c = order_[d];
      suffix_[d] = suffix_[d + 1] + cell_max[c];
      for (std::size_t t = 0; t < T_; ++t) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : lat_.values[c]) {
          lo = std::min(lo, rows_.coef[t][c] * v);
          hi = std::max(hi, rows_.coef[t][c] * v);
        }
        row_min_[d][t] = row_min_[d + 1][t] + lo;
        row_max_[d][t] = row_max_[d + 1][t] + hi;
      }
    }
    mu_const_ = 0.0;
    for (std::size_t t = 0; t < T_; ++t) {
      if (std::isfinite(rows_.hi[t])) mu_const_ += mu_hi_[t] * (rows_.hi[t] - rows_.base[t]);
      if (std::isfinite(rows_.lo[t])) mu_const_ -= mu_lo_[t] * (rows_.lo[t] - rows_.base[t]);
    }
    // Value order per cell: most promising first.
    value_order_.assign(n_, {});
    for (std::size_t c = 0; c < n_; ++c) {
      auto& o = value_order_[c];
      o.resize(lat_.values[c].size());
      std::iota(o.begin(), o.end(), std::size_t{0});
      std::stable_sort(o.begin(), o.end(),
                       [&](std::size_t a, std::size_t b) { return reduced_[c][a] > reduced_[c][b]; });
    }
  }

  double reduced_score(std::size_t c, std::size_t k) const {
    const double v = lat_.values[c][k];
    double r = lat_.score[c][k];
    for (std::size_t t = 0; t < T_; ++t) r -= (mu_hi_[t] - mu_lo_[t]) * rows_.coef[t][c] * v;
    return r;
  }

  double dual_value(const std::vector<double>& mlo, const std::vector<double>& mhi,
                    std::vector<std::size_t>* arg) const {
    double total = 0.0;
    for (std::size_t c = 0; c < n_; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t bk = 0;
      for (std::size_t k = 0; k < lat_.values[c].size(); ++k) {
        const double v = lat_.values[c][k];
        double r = lat_.score[c][k];
        for (std::size_t t = 0; t < T_; ++t) r -= (mhi[t] - mlo[t]) * rows_.coef[t][c] * v;
        if (r > best) {
          best = r;
          bk = k;
        }
      }
      total += best;
      if (arg != nullptr) (*arg)[c] = bk;
    }
    for (std::size_t t = 0; t < T_; ++t) {
      if (std::isfinite(rows_.hi[t])) total += mhi[t] * (rows_.hi[t] - rows_.base[t]);
      if (std::isfinite(rows_.lo[t])) total -= mlo[t] * (rows_.lo[t] - rows_.base[t]);
    }
    return total;
  }

  void leaf(double score) {
    std::vector<double> u(T_);
    for (std::size_t t = 0; t < T_; ++t) {
      u[t] = rows_.base[t] + acc_[t];
      if (u[t] > rows_.hi[t] + slack_tol(t) || u[t] < rows_.lo[t] - slack_tol(t)) return;
    }
    if (found_ && score <= best_) return;
    if (!risk_ok(p_, x_, u)) return;
    found_ = true;
    best_ = score;
    best_x_ = x_;
  }

  void dfs(std::size_t depth, double score) {
    if (++nodes_ > budget_) {
      throw Error(ErrorCode::SearchSpaceTooLarge,
                  "oracle node budget of " + std::to_string(budget_) + " exhausted");
    }
    if (depth == n_) {
      leaf(score);
      return;
    }
    if (prune_) {
      for (std::size_t t = 0; t < T_; ++t) {
        const double lo = rows_.base[t] + acc_[t] + row_min_[depth][t];
        const double hi = rows_.base[t] + acc_[t] + row_max_[depth][t];
        if (lo > rows_.hi[t] + slack_tol(t) || hi < rows_.lo[t] - slack_tol(t)) return;
      }
      if (found_) {
        double bound = score + suffix_[depth] + mu_const_;
        for (std::size_t t = 0; t < T_; ++t) bound -= (mu_hi_[t] - mu_lo_[t]) * acc_[t];
        if (bound <= best_) return;
      }
    }
    const std::size_t c = order_[depth];
    const auto& vals = lat_.values[c];
    for (std::size_t idx = 0; idx < vals.size(); ++idx) {
      const std::size_t k = prune_ ? value_order_[c][idx] : idx;
      const double v = vals[k];
      x_[c] = v;
      for (std::size_t t = 0; t < T_; ++t) acc_[t] += rows_.coef[t][c] * v;
      dfs(depth + 1, score + lat_.score[c][k]);
      for (std::size_t t = 0; t < T_; ++t) acc_[t] -= rows_.coef[t][c] * v;
    }
  }

  const PricingProblem& p_;
  Lattice lat_;
  Rows rows_;
  std::uint64_t budget_;
  bool prune_;
  std::size_t n_ = 0, T_ = 0;
  std::vector<double> x_, acc_, best_x_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> value_order_;
  std::vector<double> mu_lo_, mu_hi_, suffix_;
  std::vector<std::vector<double>> reduced_, row_min_, row_max_;
  double mu_const_ = 0.0;
  double best_ = -std::numeric_limits<double>::infinity();
  bool found_ = false;
  std::uint64_t nodes_ = 0;
};

}  // namespace

OracleResult brute_force_oracle(const PricingProblem& p, double step, const OracleOptions& options) {
  p.validate();
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "oracle step must be > 0");
  Lattice lat;
  double points = 1.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    std::vector<double> vals;
    const double lo = p.cell_lo(c), hi = p.cell_hi(c);
    if (hi > lo) {
      const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
      for (long long m = 0; m < count; ++m) vals.push_back(lo + static_cast<double>(m) * step);
    } else {
      vals.push_back(lo);
    }
    points *= static_cast<double>(vals.size());
    std::vector<double> sc;
    for (double v : vals) sc.push_back(cell_score(p, c, v));
    lat.values.push_back(std::move(vals));
    lat.score.push_back(std::move(sc));
  }
  const bool exhaustive = points <= static_cast<double>(options.enumeration_limit);
  Search search(p, std::move(lat), utilization_rows(p), exhaustive ? ~std::uint64_t{0} : options.node_budget,
                !exhaustive);
  if (!search.run()) throw Error(ErrorCode::Infeasible, "no lattice point satisfies the constraints");
  OracleResult out;
  out.multipliers = search.best_x();
  out.objective = search.best();
  out.nodes = search.nodes();
  out.exhaustive = exhaustive;
  return out;
}

}  // namespace fleetpricer
