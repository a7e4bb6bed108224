#include "fleetpricer/grouping.hpp"

#include <algorithm>
#include <map>

#include "fleetpricer/error.hpp"
#include "fleetpricer/numfmt.hpp"

namespace fleetpricer {

namespace {

double revenue_of(const BookingRecord& r) {
  return static_cast<double>(r.reservations) * r.revenue_per_day * r.lor;
}

std::optional<RegressionResult> try_fit(std::span<const BookingRecord> rows, double bin_width) {
  try {
    const auto points = conversion_points(rows, bin_width);
    return fit_loglog(points);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool passes(const RegressionResult& r, const GroupingConfig& c) {
  return r.slope_pvalue < c.p_threshold && r.slope_se * r.slope_se <= c.var_threshold;
}

void expand(GroupingNode& node, std::span<const BookingRecord> rows, std::size_t depth,
            const GroupingConfig& config) {
  node.children.clear();
  if (depth >= config.features.size()) return;
  const SplitFeature& feature = config.features[depth];

  std::map<std::string, std::vector<BookingRecord>> parts;
  double parent_revenue = 0.0;
  for (const auto& r : rows) {
    parts[feature.category(r)].push_back(r);
    parent_revenue += revenue_of(r);
  }

  for (auto& [label, subset] : parts) {
    GroupingNode child;
    child.feature_path = node.feature_path;
    child.feature_path.emplace_back(feature.name, label);
    double revenue = 0.0;
    for (const auto& r : subset) revenue += revenue_of(r);
    child.revenue_share = parent_revenue > 0.0 ? revenue / parent_revenue : 0.0;
    child.estimate = try_fit(subset, config.bin_width);
    child.accepted = child.estimate && passes(*child.estimate, config);
    child.resolved = child.accepted ? Elasticity{child.estimate->slope, child.estimate->slope_se}
                                    : node.resolved;
    if (child.accepted) expand(child, subset, depth + 1, config);
    node.children.push_back(std::move(child));
  }
}

}  // namespace

std::string band_label(int value, std::span<const int> edges) {
  if (edges.empty() || value < edges.front()) return "<" + std::to_string(edges.empty() ? 0 : edges.front());
  std::size_t b = 0;
  while (b + 1 < edges.size() && value >= edges[b + 1]) ++b;
  if (b + 1 == edges.size()) return std::to_string(edges[b]) + "+";
  return std::to_string(edges[b]) + "-" + std::to_string(edges[b + 1] - 1);
}

std::vector<SplitFeature> default_split_features(std::vector<int> lor_edges,
                                                 std::vector<int> abt_edges) {
  std::vector<SplitFeature> f;
  f.push_back({"branch_type", [](const BookingRecord& r) { return r.branch_type; }});
  f.push_back({"car_group", [](const BookingRecord& r) { return r.car_group; }});
  f.push_back({"peak_flag", [](const BookingRecord& r) { return std::string(r.peak ? "1" : "0"); }});
  f.push_back({"lor_band", [edges = std::move(lor_edges)](const BookingRecord& r) {
                 return band_label(r.lor, edges);
               }});
  f.push_back({"abt_band", [edges = std::move(abt_edges)](const BookingRecord& r) {
                 return band_label(r.abt(), edges);
               }});
  return f;
}

GroupingNode make_root(std::span<const BookingRecord> data, double bin_width) {
  GroupingNode root;
  root.estimate = fit_loglog(conversion_points(data, bin_width));
  root.accepted = true;
  root.resolved = {root.estimate->slope, root.estimate->slope_se};
  return root;
}

GroupingNode refine_grouping(const GroupingNode& root, std::span<const BookingRecord> data,
                             const GroupingConfig& config) {
  if (!root.estimate) {
    throw Error(ErrorCode::InvalidArgument, "root must hold the global elasticity estimate");
  }
  if (!(config.p_threshold > 0.0 && config.p_threshold < 1.0) || !(config.var_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need p_threshold in (0,1) and var_threshold > 0");
  }
  GroupingNode out = root;
  out.accepted = true;
  out.resolved = {root.estimate->slope, root.estimate->slope_se};
  out.revenue_share = 1.0;
  expand(out, data, 0, config);
  return out;
}

GroupingNode build_grouping_tree(std::span<const BookingRecord> data, const GroupingConfig& config) {
  return refine_grouping(make_root(data, config.bin_width), data, config);
}

Elasticity fallback_elasticity(const GroupingNode& node) { return node.resolved; }

FeatureMap split_covariates(const BookingRecord& r, const GroupingConfig& config) {
  FeatureMap out;
  for (const auto& f : config.features) out[f.name] = f.category(r);
  return out;
}

Elasticity resolve_elasticity(const GroupingNode& root, const FeatureMap& covariates) {
  const GroupingNode* node = &root;
  for (;;) {
    const GroupingNode* next = nullptr;
    for (const auto& child : node->children) {
      const auto& [name, value] = child.feature_path.back();
      const auto it = covariates.find(name);
      if (it != covariates.end() && it->second == value) {
        next = &child;
        break;
      }
    }
    if (!next) break;
    node = next;
  }
  return fallback_elasticity(*node);
}

double node_score(const GroupingNode& node, const GroupingConfig& config) {
  const double uncertainty =
      node.estimate ? node.estimate->slope_se * node.estimate->slope_se : node.resolved.slope_se * node.resolved.slope_se;
  return score_grouping(uncertainty, node.revenue_share, config.score_alpha, config.score_beta);
}

nlohmann::json grouping_to_json(const GroupingNode& node, const GroupingConfig& config) {
  nlohmann::json j;
  j["feature_path"] = nlohmann::json::array();
  for (const auto& [name, value] : node.feature_path) {
    j["feature_path"].push_back({{"feature", name}, {"value", value}});
  }
  if (node.estimate) {
    j["slope"] = sig9(node.estimate->slope);
    j["slope_se"] = sig9(node.estimate->slope_se);
    j["p_value"] = sig9(node.estimate->slope_pvalue);
    j["n"] = node.estimate->n;
  } else {
    j["slope"] = nullptr;
    j["slope_se"] = nullptr;
    j["p_value"] = nullptr;
    j["n"] = 0;
  }
  j["accepted"] = node.accepted;
  j["resolved_slope"] = sig9(node.resolved.slope);
  j["resolved_slope_se"] = sig9(node.resolved.slope_se);
  j["score"] = sig9(node_score(node, config));
  j["children"] = nlohmann::json::array();
  for (const auto& c : node.children) j["children"].push_back(grouping_to_json(c, config));
  return j;
}

}  // namespace fleetpricer
