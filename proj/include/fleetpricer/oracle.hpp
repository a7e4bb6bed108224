#pragma once

#include <cstdint>
#include <vector>

#include "fleetpricer/pricing.hpp"

namespace fleetpricer {

struct OracleResult {
  std::vector<double> multipliers;
  double objective = 0.0;  // expected margin - lambda * variance
  std::uint64_t nodes = 0;
  bool exhaustive = false;  // plain enumeration rather than branch-and-bound
};

struct OracleOptions {
  std::uint64_t enumeration_limit = 100'000'000;  // lattice points
  std::uint64_t node_budget = 100'000'000;        // branch-and-bound nodes
};

/// Best lattice point (box_lo + m * step) over every free cell, checking
/// utilization band and chance constraints exactly at each candidate.
/// Lattices up to enumeration_limit points are enumerated outright; larger
/// ones use depth-first branch-and-bound with Lagrangian bounds, which
/// returns the same optimum. Throws SearchSpaceTooLarge when the node budget
/// is exhausted and Infeasible when no lattice point is feasible.
OracleResult brute_force_oracle(const PricingProblem& p, double step,
                                const OracleOptions& options = {});

}  // namespace fleetpricer
