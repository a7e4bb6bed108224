#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fleetpricer/analysis.hpp"

namespace fleetpricer {

/// label,expected_margin,objective,risk_total,mean_day_risk,band_violations,opportunity_cost
void write_benchmark_csv(std::ostream& os, std::span<const BenchmarkRow> rows);

/// Bars of expected margin per policy with the risk total drawn as a line on
/// a secondary axis.
std::string benchmark_svg(std::span<const BenchmarkRow> rows, const std::string& title);

/// One polyline per named series over a shared x index (batch days).
std::string trace_svg(std::span<const std::pair<std::string, std::vector<double>>> series,
                      const std::string& title, const std::string& y_label);

}  // namespace fleetpricer
