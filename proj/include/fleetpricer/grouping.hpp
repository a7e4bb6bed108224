#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fleetpricer/market.hpp"
#include "fleetpricer/ols.hpp"
#include "json.hpp"

namespace fleetpricer {

/// A covariate the grouping tree may split on; `category` maps a record to
/// its branch label.
struct SplitFeature {
  std::string name;
  std::function<std::string(const BookingRecord&)> category;
};

/// Band label for `value` given ascending lower edges, e.g. edges {1, 3, 6}
/// yield "1-2", "3-5", "6+".
std::string band_label(int value, std::span<const int> edges);

/// branch type -> car group -> peak flag -> LOR band -> ABT band.
std::vector<SplitFeature> default_split_features(std::vector<int> lor_edges = {1, 3, 6},
                                                 std::vector<int> abt_edges = {0, 3, 7});

struct GroupingConfig {
  double p_threshold = 0.01;
  double var_threshold = 1.0;  // on slope_se^2
  std::vector<SplitFeature> features = default_split_features();
  double score_alpha = 1.0;
  double score_beta = 1.0;
  // multiplier bin for pooling records before the log-log fit; 0 = per record
  double bin_width = 0.0;
};

struct Elasticity {
  double slope = 0.0;
  double slope_se = 0.0;
};

struct GroupingNode {
  std::vector<std::pair<std::string, std::string>> feature_path;
  std::optional<RegressionResult> estimate;
  bool accepted = false;
  /// Estimate of the nearest accepted ancestor-or-self.
  Elasticity resolved;
  /// Share of the parent's revenue carried by this group, in [0, 1].
  double revenue_share = 1.0;
  std::vector<GroupingNode> children;
};

/// Fits the global (root) elasticity on all records; throws when that fit
/// fails since every fallback chain ends at the root.
GroupingNode make_root(std::span<const BookingRecord> data, double bin_width = 0.0);

/// Depth-first refinement: a child is accepted iff its slope p-value is
/// below p_threshold and slope_se^2 <= var_threshold. Only accepted nodes
/// are expanded; failed fits count as rejections. Returns a new tree.
GroupingNode refine_grouping(const GroupingNode& root, std::span<const BookingRecord> data,
                             const GroupingConfig& config);

GroupingNode build_grouping_tree(std::span<const BookingRecord> data, const GroupingConfig& config);

/// Nearest accepted ancestor-or-self estimate of `node`.
Elasticity fallback_elasticity(const GroupingNode& node);

/// Feature name -> category of `r` for every split feature, the keys
/// resolve_elasticity matches on.
FeatureMap split_covariates(const BookingRecord& r, const GroupingConfig& config);

/// Descend along children whose path matches `covariates`, then fall back.
Elasticity resolve_elasticity(const GroupingNode& root, const FeatureMap& covariates);

/// Grouping score of a node: uncertainty = slope_se^2, margin = revenue share.
double node_score(const GroupingNode& node, const GroupingConfig& config);

nlohmann::json grouping_to_json(const GroupingNode& root, const GroupingConfig& config);

}  // namespace fleetpricer
