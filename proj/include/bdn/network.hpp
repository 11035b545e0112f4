#pragma once

// Bayesian decision network structure: chance, decision and utility nodes,
// their parameter bindings, and the assessment questions shipped with a model.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdn/distribution.hpp"
#include "bdn/errors.hpp"

namespace bdn {

using NodeId = std::string;

enum class NodeKind { chance, decision, utility };

std::string_view to_string(NodeKind kind);

/// A table indexed by parent configuration. A missing cell is an incomplete
/// table; validate_network reports it.
using ParameterTable = std::vector<std::optional<ParameterRef>>;

struct ChanceNode {
  NodeId id;
  std::string display_name;
  std::vector<std::string> outcomes;
  std::vector<NodeId> parents;
  ParameterTable cpt;  ///< one row parameter per parent configuration
  std::vector<ParameterRef> covariates;  ///< scalar descriptors shown with the node
};

struct DecisionNode {
  NodeId id;
  std::string display_name;
  std::vector<std::string> alternatives;
  std::vector<NodeId> parents;  ///< information predecessors
  std::vector<ParameterRef> covariates;
};

struct UtilityNode {
  NodeId id;
  std::string display_name;
  std::vector<NodeId> parents;
  ParameterTable table;  ///< one utility parameter per parent configuration
};

struct Answer {
  std::string label;
  double weight = 0.0;  ///< population share of this answer
  Refinement refinement;
};

struct AssessmentQuestion {
  std::string id;
  std::string prompt;
  std::vector<Answer> answers;
  double cost = 0.0;

  const Answer* find_answer(std::string_view label) const;
};

struct Thresholds {
  double z = 2.0;            ///< unusual-value z-score
  double margin = 0.02;      ///< decision-critical EU margin
  double prune = 0.05;       ///< prune below this fraction of the largest swing
  int grid = 9;              ///< quantile sweep points
  double coherence = 1e-3;   ///< subgroup-mixture vs generic EU tolerance
};

struct MonteCarloDefaults {
  std::size_t samples = 10000;
  std::uint64_t seed = 42;
  std::size_t bins = 50;
};

struct NetworkModel {
  std::string id;
  std::string title;
  std::vector<ChanceNode> chance_nodes;
  std::vector<DecisionNode> decision_nodes;  ///< in decision order
  UtilityNode utility_node;
  ParameterRegistry parameters;
  std::map<ParameterRef, std::string, std::less<>> parameter_names;
  std::vector<AssessmentQuestion> questions;
  double cost_scale_lambda = 1.0;
  MonteCarloDefaults mc;
  Thresholds thresholds;
  std::map<std::string, std::string, std::less<>> templates;

  const ChanceNode* find_chance(std::string_view id) const;
  const DecisionNode* find_decision(std::string_view id) const;
  const AssessmentQuestion* find_question(std::string_view id) const;
  std::optional<NodeKind> kind_of(std::string_view id) const;

  /// All node ids: decisions, chance nodes, then the utility node.
  std::vector<NodeId> node_ids() const;
  const std::vector<NodeId>& parents_of(std::string_view id) const;
  std::vector<NodeId> children_of(std::string_view id) const;
  /// Outcomes of a chance node or alternatives of a decision node.
  const std::vector<std::string>& states_of(std::string_view id) const;
  std::string display_name(std::string_view id) const;
  std::string parameter_display_name(std::string_view name) const;
  /// Nodes whose tables or covariate lists mention `parameter`.
  std::vector<NodeId> nodes_using(std::string_view parameter) const;
  /// Parameters bound to a node (table cells and covariates, deduplicated, sorted).
  std::vector<ParameterRef> parameters_of(std::string_view id) const;
};

/// Row-major enumeration of parent configurations: the first parent varies
/// slowest, the last fastest.
class ConfigurationSpace {
 public:
  explicit ConfigurationSpace(std::vector<std::size_t> cardinalities);

  std::size_t size() const { return size_; }
  std::size_t dimensions() const { return cardinalities_.size(); }
  std::size_t index(std::span<const std::size_t> states) const;
  std::vector<std::size_t> states(std::size_t index) const;

 private:
  std::vector<std::size_t> cardinalities_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

ConfigurationSpace parent_space(const NetworkModel& model, std::string_view node);

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool ok() const { return errors.empty(); }
  bool has_error(std::string_view code) const;
  std::string summary() const;
};

ValidationReport validate_network(const NetworkModel& model);

/// Parents before children, ties broken by id. Throws ValidationError on a cycle.
std::vector<NodeId> topological_order(const NetworkModel& model);

/// Chance and decision nodes with a directed path to the utility node.
std::vector<NodeId> relevant_nodes(const NetworkModel& model);

/// Every descendant of `id` (excluding `id`), in topological order.
std::vector<NodeId> descendants_of(const NetworkModel& model, std::string_view id);

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const char* kind() const noexcept override { return "validation"; }
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace bdn
