#include "fleetpricer/forecast.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <set>

#include "fleetpricer/error.hpp"
#include "fleetpricer/numfmt.hpp"

namespace fleetpricer {

namespace {

int positive_mod(int a, int m) { return ((a % m) + m) % m; }

}  // namespace

double BookingCurve::increment(int j) const {
  const auto n = static_cast<int>(cumulative.size());
  const double after = j + 1 < n ? cumulative[static_cast<std::size_t>(j + 1)] : 0.0;
  return cumulative[static_cast<std::size_t>(j)] - after;
}

void DemandForecast::validate() const {
  const std::size_t n = dims.cell_count();
  if (mean.size() != n || sd.size() != n || realized.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "forecast arrays must match the grid");
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!(mean[c] >= 0.0) || !(sd[c] >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "forecast mean and sd must be non-negative");
    }
  }
}

ForecasterKind parse_forecaster_kind(const std::string& name) {
  if (name == "pickup_additive") return ForecasterKind::pickup_additive;
  if (name == "pickup_multiplicative") return ForecasterKind::pickup_multiplicative;
  if (name == "seasonal_naive") return ForecasterKind::seasonal_naive;
  throw Error(ErrorCode::ConfigError, "unknown forecaster kind '" + name + "'");
}

std::string to_string(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::pickup_additive: return "pickup_additive";
    case ForecasterKind::pickup_multiplicative: return "pickup_multiplicative";
    case ForecasterKind::seasonal_naive: return "seasonal_naive";
  }
  return "unknown";
}

void ForecasterSpec::validate() const {
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "forecaster window must be >= 1");
  if (cycle() < 1) throw Error(ErrorCode::InvalidArgument, "forecaster cycle must be >= 1");
  if (min_class_curves() < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_class_curves must be >= 1");
  }
}

int ForecasterSpec::cycle() const {
  const auto it = options.find("cycle");
  return it == options.end() ? 7 : static_cast<int>(it->second);
}

int ForecasterSpec::min_class_curves() const {
  const auto it = options.find("min_class_curves");
  return it == options.end() ? 2 : static_cast<int>(it->second);
}

double Forecaster::base_cvr(int j, int k) const {
  if (j < 0 || j >= max_abt_ || k < 1 || k > max_lor_) return base_cvr_.back();
  return base_cvr_[static_cast<std::size_t>(j * max_lor_ + k - 1)];
}

double Forecaster::step_sd(int j) const {
  if (j < 0 || j >= max_abt_) return 0.0;
  return step_sd_[static_cast<std::size_t>(j)];
}

const Forecaster::Profile* Forecaster::resolve(Date pickup, int lor) const {
  const int need = spec_.min_class_curves();
  const ClassKey keys[] = {{lor, positive_mod(pickup.days, spec_.cycle())}, {lor, -1}, {0, -1}};
  for (const auto& key : keys) {
    const auto it = profiles_.find(key);
    if (it != profiles_.end() && it->second.curves >= need) return &it->second;
  }
  const auto it = profiles_.find({0, -1});
  return it == profiles_.end() ? nullptr : &it->second;
}

double Forecaster::additive_mean(const Profile& p, int j) const {
  const auto s = static_cast<std::size_t>(j);
  return p.inc_n[s] > 0 ? p.inc_sum[s] / p.inc_n[s] : 0.0;
}

std::optional<double> Forecaster::seasonal_lookup(Date pickup, int lor, int j) const {
  if (curves_.empty()) return std::nullopt;
  const std::int32_t earliest = curves_.begin()->first.first;
  for (Date p = pickup - spec_.cycle(); p.days >= earliest; p = p - spec_.cycle()) {
    const auto it = curves_.find({p.days, lor});
    if (it != curves_.end() && it->second.seen[static_cast<std::size_t>(j)]) {
      return it->second.offers[static_cast<std::size_t>(j)];
    }
  }
  return std::nullopt;
}

double Forecaster::predict_increment(Date pickup, int lor, int j, double cum_after) const {
  if (j < 0 || j >= max_abt_) return 0.0;
  if (spec_.kind == ForecasterKind::seasonal_naive) {
    if (const auto v = seasonal_lookup(pickup, lor, j)) return *v;
  }
  const Profile* p = resolve(pickup, lor);
  if (p == nullptr) return 0.0;
  if (spec_.kind == ForecasterKind::pickup_multiplicative && cum_after > 0.0) {
    const auto s = static_cast<std::size_t>(j);
    if (p->ratio_n[s] > 0) return cum_after * (p->ratio_sum[s] / p->ratio_n[s] - 1.0);
  }
  return additive_mean(*p, j);
}

Forecaster fit_forecaster(std::span<const BookingRecord> history, const ForecasterSpec& spec,
                          std::span<const double> segment_elasticity) {
  spec.validate();
  Forecaster f;
  f.spec_ = spec;
  for (const auto& r : history) {
    f.max_abt_ = std::max(f.max_abt_, r.abt() + 1);
    f.max_lor_ = std::max(f.max_lor_, r.lor);
  }
  if (history.empty()) throw Error(ErrorCode::InsufficientHistory, "empty booking history");
  const int M = f.max_abt_;
  const int L = f.max_lor_;
  const auto Ms = static_cast<std::size_t>(M);
  if (!segment_elasticity.empty() && segment_elasticity.size() != static_cast<std::size_t>(M * L)) {
    throw Error(ErrorCode::InvalidArgument, "segment elasticity must have one entry per (abt, lor)");
  }

  // Curves and conversion totals.
  std::vector<double> res_sum(static_cast<std::size_t>(M * L), 0.0);
  std::vector<double> off_sum(static_cast<std::size_t>(M * L), 0.0);
  double res_all = 0.0, off_all = 0.0;
  for (const auto& r : history) {
    auto& c = f.curves_[{r.pickup_date.days, r.lor}];
    if (c.offers.empty()) {
      c.offers.assign(Ms, 0.0);
      c.seen.assign(Ms, false);
    }
    const auto j = static_cast<std::size_t>(r.abt());
    c.offers[j] += r.offers;
    c.seen[j] = true;
    const std::size_t seg = j * static_cast<std::size_t>(L) + static_cast<std::size_t>(r.lor - 1);
    double w = 1.0;
    if (!segment_elasticity.empty()) w = std::max(1e-6, 1.0 - segment_elasticity[seg] * (1.0 - r.offered_multiplier));
    res_sum[seg] += r.reservations;
    off_sum[seg] += r.offers * w;
    res_all += r.reservations;
    off_all += r.offers * w;
  }
  const double global_cvr = off_all > 0.0 ? res_all / off_all : 0.0;
  f.base_cvr_.resize(static_cast<std::size_t>(M * L) + 1);
  for (std::size_t s = 0; s < res_sum.size(); ++s) {
    f.base_cvr_[s] = off_sum[s] > 0.0 ? std::min(1.0, res_sum[s] / off_sum[s]) : global_cvr;
  }
  f.base_cvr_.back() = global_cvr;

  // Training window: the most recent `window` complete pickup dates.
  std::set<std::int32_t> complete_dates;
  for (const auto& [key, c] : f.curves_) {
    if (std::all_of(c.seen.begin(), c.seen.end(), [](bool b) { return b; })) {
      complete_dates.insert(key.first);
    }
  }
  if (static_cast<int>(complete_dates.size()) < spec.window) {
    throw Error(ErrorCode::InsufficientHistory,
                std::to_string(complete_dates.size()) + " complete pickup dates, window needs " +
                    std::to_string(spec.window));
  }
  auto first_it = complete_dates.end();
  std::advance(first_it, -spec.window);
  const std::set<std::int32_t> window_dates(first_it, complete_dates.end());

  struct Train {
    Date pickup;
    int lor;
    std::vector<double> inc, cum;
  };
  std::vector<Train> train;
  for (const auto& [key, c] : f.curves_) {
    if (!window_dates.contains(key.first)) continue;
    if (!std::all_of(c.seen.begin(), c.seen.end(), [](bool b) { return b; })) continue;
    Train t{Date{key.first}, key.second, c.offers, std::vector<double>(Ms + 1, 0.0)};
    for (int j = M - 1; j >= 0; --j) {
      t.cum[static_cast<std::size_t>(j)] = t.cum[static_cast<std::size_t>(j + 1)] + t.inc[static_cast<std::size_t>(j)];
    }
    train.push_back(std::move(t));
  }

  const int cycle = spec.cycle();
  auto keys_of = [&](const Train& t) {
    return std::array<Forecaster::ClassKey, 3>{
        Forecaster::ClassKey{t.lor, positive_mod(t.pickup.days, cycle)},
        Forecaster::ClassKey{t.lor, -1}, Forecaster::ClassKey{0, -1}};
  };
  auto touch = [&](const Forecaster::ClassKey& key) -> Forecaster::Profile& {
    auto& p = f.profiles_[key];
    if (p.inc_sum.empty()) {
      p.inc_sum.assign(Ms, 0.0);
      p.ratio_sum.assign(Ms, 0.0);
      p.inc_n.assign(Ms, 0);
      p.ratio_n.assign(Ms, 0);
    }
    return p;
  };
  for (const auto& t : train) {
    for (const auto& key : keys_of(t)) {
      auto& p = touch(key);
      ++p.curves;
      for (std::size_t j = 0; j < Ms; ++j) {
        p.inc_sum[j] += t.inc[j];
        ++p.inc_n[j];
        if (t.cum[j + 1] > 0.0) {
          p.ratio_sum[j] += t.cum[j] / t.cum[j + 1];
          ++p.ratio_n[j];
        }
      }
    }
  }

  // Leave-one-out one-step residuals per ABT.
  std::vector<double> sq(Ms, 0.0);
  std::vector<int> cnt(Ms, 0);
  const int need = spec.min_class_curves();
  for (const auto& t : train) {
    for (std::size_t j = 0; j < Ms; ++j) {
      double pred = 0.0;
      bool have = false;
      if (spec.kind == ForecasterKind::seasonal_naive) {
        const auto prev = f.curves_.find({t.pickup.days - cycle, t.lor});
        if (prev != f.curves_.end() && prev->second.seen[j]) {
          pred = prev->second.offers[j];
          have = true;
        }
      }
      for (const auto& key : keys_of(t)) {
        if (have) break;
        const auto& p = f.profiles_.at(key);
        if (p.curves - 1 < std::max(1, key.first == 0 ? 1 : need)) continue;
        const bool use_ratio = spec.kind == ForecasterKind::pickup_multiplicative &&
                               t.cum[j + 1] > 0.0 && p.ratio_n[j] - 1 > 0;
        if (use_ratio) {
          const double r = (p.ratio_sum[j] - t.cum[j] / t.cum[j + 1]) / (p.ratio_n[j] - 1);
          pred = t.cum[j + 1] * (r - 1.0);
        } else {
          pred = (p.inc_sum[j] - t.inc[j]) / (p.inc_n[j] - 1);
        }
        have = true;
      }
      if (!have) continue;
      const double e = t.inc[j] - std::max(0.0, pred);
      sq[j] += e * e;
      ++cnt[j];
    }
  }
  f.step_sd_.assign(Ms, 0.0);
  for (std::size_t j = 0; j < Ms; ++j) {
    if (cnt[j] > 0) f.step_sd_[j] = std::sqrt(sq[j] / cnt[j]);
  }
  return f;
}

std::vector<BookingCurve> open_curves_from_records(std::span<const BookingRecord> records,
                                                   const MarketGrid& grid, Date as_of) {
  const auto& d = grid.dims();
  const Date first = grid.first_pickup();
  const Date last = first + (d.pickup_days - 1);
  std::map<std::pair<std::int32_t, int>, BookingCurve> by_key;
  for (const auto& r : records) {
    if (r.pickup_date < first || r.pickup_date > last || r.booking_date >= as_of) continue;
    if (r.abt() >= d.max_abt || r.lor > d.max_lor) continue;
    auto& c = by_key[{r.pickup_date.days, r.lor}];
    if (c.cumulative.empty()) {
      c.pickup_date = r.pickup_date;
      c.lor = r.lor;
      c.cumulative.assign(static_cast<std::size_t>(d.max_abt), 0.0);
      c.reservations.assign(static_cast<std::size_t>(d.max_abt), 0.0);
    }
    c.cumulative[static_cast<std::size_t>(r.abt())] += r.offers;
    c.reservations[static_cast<std::size_t>(r.abt())] += r.reservations;
  }
  std::vector<BookingCurve> out;
  for (auto& [key, c] : by_key) {
    for (int j = d.max_abt - 2; j >= 0; --j) {
      c.cumulative[static_cast<std::size_t>(j)] += c.cumulative[static_cast<std::size_t>(j + 1)];
    }
    c.observed_to = std::clamp((c.pickup_date - as_of) + 1, 0, d.max_abt);
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

// Fills increments below observed_to; returns the number of clipped steps.
int complete_increments(const Forecaster& f, Date pickup, int lor, int max_abt, int observed_to,
                        std::vector<double>& inc) {
  int clipped = 0;
  double cum_after = 0.0;
  for (int j = max_abt - 1; j >= observed_to; --j) cum_after += inc[static_cast<std::size_t>(j)];
  for (int j = observed_to - 1; j >= 0; --j) {
    double v = f.predict_increment(pickup, lor, j, cum_after);
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    }
    inc[static_cast<std::size_t>(j)] = v;
    cum_after += v;
  }
  return clipped;
}

}  // namespace

std::vector<double> project_cumulative(const Forecaster& f, const BookingCurve& curve) {
  const int M = static_cast<int>(curve.cumulative.size());
  std::vector<double> inc(static_cast<std::size_t>(M), 0.0);
  const int obs = std::clamp(curve.observed_to, 0, M);
  for (int j = obs; j < M; ++j) inc[static_cast<std::size_t>(j)] = curve.increment(j);
  complete_increments(f, curve.pickup_date, curve.lor, M, obs, inc);
  std::vector<double> cum(static_cast<std::size_t>(M), 0.0);
  double acc = 0.0;
  for (int j = M - 1; j >= 0; --j) {
    acc += inc[static_cast<std::size_t>(j)];
    cum[static_cast<std::size_t>(j)] = acc;
  }
  return cum;
}

DemandForecast forecast(const Forecaster& f, std::span<const BookingCurve> open_curves,
                        const MarketGrid& grid, Date as_of) {
  const auto& d = grid.dims();
  const Date first = grid.first_pickup();
  std::map<std::pair<std::int32_t, int>, const BookingCurve*> lookup;
  for (const auto& c : open_curves) {
    const int row = c.pickup_date - first;
    if (row < 0 || row >= d.pickup_days) {
      throw Error(ErrorCode::UnknownPickupDate,
                  format_iso_date(c.pickup_date) + " is outside the forecast window");
    }
    if (c.lor < 1 || c.lor > d.max_lor || c.cumulative.size() != static_cast<std::size_t>(d.max_abt)) {
      throw Error(ErrorCode::InvalidArgument, "open curve does not match the grid");
    }
    lookup[{c.pickup_date.days, c.lor}] = &c;
  }

  DemandForecast out;
  out.dims = d;
  out.first_pickup = first;
  out.as_of = as_of;
  const std::size_t n = d.cell_count();
  out.mean.assign(n, 0.0);
  out.sd.assign(n, 0.0);
  out.offers.assign(n, 0.0);
  out.realized.assign(n, 0);
  std::vector<double> inc(static_cast<std::size_t>(d.max_abt));
  for (int i = 0; i < d.pickup_days; ++i) {
    const Date pickup = first + i;
    const int observed_to = std::clamp((pickup - as_of) + 1, 0, d.max_abt);
    for (int k = 1; k <= d.max_lor; ++k) {
      const auto it = lookup.find({pickup.days, k});
      const BookingCurve* c = it == lookup.end() ? nullptr : it->second;
      std::fill(inc.begin(), inc.end(), 0.0);
      for (int j = observed_to; j < d.max_abt && c != nullptr; ++j) inc[static_cast<std::size_t>(j)] = c->increment(j);
      out.clipped_increments += complete_increments(f, pickup, k, d.max_abt, observed_to, inc);
      for (int j = 0; j < d.max_abt; ++j) {
        const std::size_t cell = d.cell(i, j, k);
        const auto js = static_cast<std::size_t>(j);
        out.offers[cell] = inc[js];
        if (j >= observed_to) {
          out.realized[cell] = 1;
          out.mean[cell] = c != nullptr && !c->reservations.empty() ? c->reservations[js] : 0.0;
        } else {
          const double cvr = f.base_cvr(j, k);
          out.mean[cell] = inc[js] * cvr;
          out.sd[cell] = f.step_sd(j) * cvr;
        }
      }
    }
  }
  return out;
}

double expected_reservations(double offers, double base_cvr, double elasticity, double multiplier) {
  return std::max(0.0, offers * base_cvr * (1.0 - elasticity * (1.0 - multiplier)));
}

void write_forecast_csv(std::ostream& os, const DemandForecast& f) {
  os << "pickup_day,abt,lor,mean,sd\n";
  for (std::size_t c = 0; c < f.dims.cell_count(); ++c) {
    const CellIndex idx = decode_cell(f.dims, c);
    os << idx.pickup_day << ',' << idx.abt << ',' << idx.lor << ',' << fmt9(f.mean[c]) << ','
       << fmt9(f.sd[c]) << '\n';
  }
}

}  // namespace fleetpricer
