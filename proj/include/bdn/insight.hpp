#pragma once

// Sensitivity, node emphasis, and explanations referenced to the generic model.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdn/assessment.hpp"

namespace bdn {

/// Quantile levels i / (g + 1), i = 1..g.
std::vector<double> quantile_grid(int g);

/// Values a parameter takes along its one-way sweep. Scalars give one value
/// per quantile level. Rows give, for each component with positive marginal
/// variance, the component at its marginal quantiles with the remaining mass
/// spread in proportion to the mean row. Point masses give no values.
std::vector<Eigen::VectorXd> sweep_values(const Parameter& p, int grid);

struct SensitivityRecord {
  ParameterRef parameter;
  double swing = 0.0;   ///< max |gap(theta) - gap(mean)|
  bool flips = false;   ///< argmax changes somewhere on the sweep
  double size_score = 0.0;
};

/// One-way quantile sweep of every registry parameter with all others held
/// at their means. `gap` is EU(leader at the means) minus the best other
/// alternative, so a flip always registers as a swing. Sorted by name.
std::vector<SensitivityRecord> sensitivity_scan(const ConsultationState& state);

struct DisplayNode {
  NodeId id;
  std::string display_name;
  NodeKind kind = NodeKind::chance;
  double size_score = 0.0;
  bool pruned = false;
  bool unusual = false;
  double max_z = 0.0;  ///< largest defined divergence among the node's parameters
};

struct DisplayArc {
  NodeId from;
  NodeId to;
};

struct DisplayGraph {
  std::vector<DisplayNode> nodes;  ///< topological order
  std::vector<DisplayArc> arcs;
};

/// Largest defined z-score of a parameter's current distribution against its
/// generic prior, or nullopt when the prior has no spread.
std::optional<double> parameter_z(const ConsultationState& state, std::string_view parameter);

DisplayGraph display_graph(const ConsultationState& state, std::span<const SensitivityRecord> scan,
                           double prune_threshold);
DisplayGraph display_graph(const ConsultationState& state, std::span<const SensitivityRecord> scan);
DisplayGraph display_graph(const ConsultationState& state);

enum class ItemKind { unusual_value, decision_critical, top_sensitivity };

std::string_view to_string(ItemKind kind);

struct ExplanationItem {
  ItemKind kind = ItemKind::unusual_value;
  std::string reference;  ///< parameter name or question id
  double z = 0.0;
  double swing = 0.0;
  std::vector<std::string> dependents;  ///< display names of affected descendant nodes
  std::string sentence;
};

/// Unusual-value items for every parameter at or above the z-threshold and
/// decision-critical items for every applied answer that changed the
/// recommendation or left the winning margin below the margin threshold.
/// Ordered by swing, then z, descending.
std::vector<ExplanationItem> flag_explanation_items(const ConsultationState& state);
std::vector<ExplanationItem> flag_explanation_items(const ConsultationState& state,
                                                    std::span<const SensitivityRecord> scan);

/// Template text: recommendation line, one sentence per item, and optionally
/// a summary of the generic model.
std::string render_explanation(const ConsultationState& state, bool generic_summary);

/// Default explanation templates; a model's `templates` map overrides them by key.
const std::map<std::string, std::string, std::less<>>& default_templates();

}  // namespace bdn
