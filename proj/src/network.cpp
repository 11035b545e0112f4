#include "bdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <set>

namespace bdn {

namespace {

constexpr double kWeightTolerance = 1e-9;
constexpr double kSupportSlack = 1e-12;

const std::vector<NodeId> kNoParents;
const std::vector<std::string> kNoStates;

bool within_unit_interval(const UncertainQuantity& q) {
  return q.lower() >= -kSupportSlack && q.upper() <= 1.0 + kSupportSlack;
}

// Kahn's algorithm over the node ids in `graph` (id -> parents). Returns the
// order, which is shorter than the node count iff the graph has a cycle.
std::vector<NodeId> kahn(const std::map<NodeId, std::vector<NodeId>, std::less<>>& graph) {
  std::map<NodeId, std::size_t, std::less<>> pending;
  std::map<NodeId, std::vector<NodeId>, std::less<>> children;
  for (const auto& [id, parents] : graph) {
    std::size_t count = 0;
    for (const auto& p : parents) {
      if (graph.contains(p)) {
        ++count;
        children[p].push_back(id);
      }
    }
    pending[id] = count;
  }
  std::set<NodeId, std::less<>> ready;
  for (const auto& [id, count] : pending) {
    if (count == 0) ready.insert(id);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    NodeId next = *ready.begin();
    ready.erase(ready.begin());
    for (const auto& child : children[next]) {
      if (--pending[child] == 0) ready.insert(child);
    }
    order.push_back(std::move(next));
  }
  return order;
}

std::map<NodeId, std::vector<NodeId>, std::less<>> parent_graph(const NetworkModel& model) {
  std::map<NodeId, std::vector<NodeId>, std::less<>> graph;
  for (const auto& id : model.node_ids()) graph.emplace(id, model.parents_of(id));
  return graph;
}

class ReportBuilder {
 public:
  template <class... Args>
  void error(std::string code, fmt::format_string<Args...> f, Args&&... args) {
    report_.errors.push_back({std::move(code), fmt::format(f, std::forward<Args>(args)...)});
  }
  template <class... Args>
  void warning(std::string code, fmt::format_string<Args...> f, Args&&... args) {
    report_.warnings.push_back({std::move(code), fmt::format(f, std::forward<Args>(args)...)});
  }
  ValidationReport take() { return std::move(report_); }

 private:
  ValidationReport report_;
};

void check_table(const NetworkModel& model, ReportBuilder& out, std::string_view node,
                 const ParameterTable& table, const std::function<void(const Parameter&, std::string_view, std::size_t)>& check_cell) {
  std::size_t expected = 1;
  for (const auto& parent : model.parents_of(node)) {
    if (model.kind_of(parent)) expected *= model.states_of(parent).size();
  }
  if (table.size() != expected) {
    out.error("incomplete-table", "incomplete table at '{}': {} entries for {} parent configurations",
              node, table.size(), expected);
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i]) {
      out.error("incomplete-table", "incomplete table at '{}': configuration {} has no entry", node, i);
      continue;
    }
    const Parameter* p = model.parameters.find(*table[i]);
    if (p == nullptr) {
      out.error("unknown-parameter", "'{}' references unknown parameter '{}'", node, *table[i]);
      continue;
    }
    check_cell(*p, *table[i], i);
  }
}

void check_refinement(const NetworkModel& model, ReportBuilder& out, const AssessmentQuestion& q,
                      const Answer& a) {
  for (const auto& [name, replacement] : a.refinement) {
    const Parameter* original = model.parameters.find(name);
    if (original == nullptr) {
      out.error("unknown-parameter", "question '{}' answer '{}' refines unknown parameter '{}'", q.id,
                a.label, name);
      continue;
    }
    try {
      Refinement single;
      single.emplace(name, replacement);
      ParameterRegistry probe;
      probe.insert(name, *original);
      (void)refine(probe, single);
    } catch (const Error& e) {
      out.error("refinement-schema", "question '{}' answer '{}': {}", q.id, a.label, e.what());
      continue;
    }
    if (const auto* u = std::get_if<UncertainQuantity>(&replacement)) {
      if (u->role() != Role::covariate && !within_unit_interval(*u)) {
        out.error("support", "question '{}' answer '{}': '{}' support leaves [0, 1]", q.id, a.label, name);
      }
    }
  }
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::chance: return "chance";
    case NodeKind::decision: return "decision";
    case NodeKind::utility: return "utility";
  }
  return "unknown";
}

const Answer* AssessmentQuestion::find_answer(std::string_view label) const {
  for (const auto& a : answers) {
    if (a.label == label) return &a;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// NetworkModel lookups

const ChanceNode* NetworkModel::find_chance(std::string_view id) const {
  for (const auto& n : chance_nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const DecisionNode* NetworkModel::find_decision(std::string_view id) const {
  for (const auto& n : decision_nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const AssessmentQuestion* NetworkModel::find_question(std::string_view id) const {
  for (const auto& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::optional<NodeKind> NetworkModel::kind_of(std::string_view id) const {
  if (find_chance(id)) return NodeKind::chance;
  if (find_decision(id)) return NodeKind::decision;
  if (!utility_node.id.empty() && utility_node.id == id) return NodeKind::utility;
  return std::nullopt;
}

std::vector<NodeId> NetworkModel::node_ids() const {
  std::vector<NodeId> ids;
  for (const auto& d : decision_nodes) ids.push_back(d.id);
  for (const auto& c : chance_nodes) ids.push_back(c.id);
  if (!utility_node.id.empty()) ids.push_back(utility_node.id);
  return ids;
}

const std::vector<NodeId>& NetworkModel::parents_of(std::string_view id) const {
  if (const auto* c = find_chance(id)) return c->parents;
  if (const auto* d = find_decision(id)) return d->parents;
  if (utility_node.id == id) return utility_node.parents;
  return kNoParents;
}

std::vector<NodeId> NetworkModel::children_of(std::string_view id) const {
  std::vector<NodeId> out;
  for (const auto& n : node_ids()) {
    const auto& ps = parents_of(n);
    if (std::find(ps.begin(), ps.end(), id) != ps.end()) out.push_back(n);
  }
  return out;
}

const std::vector<std::string>& NetworkModel::states_of(std::string_view id) const {
  if (const auto* c = find_chance(id)) return c->outcomes;
  if (const auto* d = find_decision(id)) return d->alternatives;
  return kNoStates;
}

std::string NetworkModel::display_name(std::string_view id) const {
  std::string name;
  if (const auto* c = find_chance(id)) name = c->display_name;
  else if (const auto* d = find_decision(id)) name = d->display_name;
  else if (utility_node.id == id) name = utility_node.display_name;
  return name.empty() ? std::string(id) : name;
}

std::string NetworkModel::parameter_display_name(std::string_view name) const {
  const auto it = parameter_names.find(name);
  return it == parameter_names.end() || it->second.empty() ? std::string(name) : it->second;
}

std::vector<NodeId> NetworkModel::nodes_using(std::string_view parameter) const {
  std::vector<NodeId> out;
  auto mentions = [&](const ParameterTable& t, const std::vector<ParameterRef>& covariates) {
    for (const auto& cell : t) {
      if (cell && *cell == parameter) return true;
    }
    return std::find(covariates.begin(), covariates.end(), parameter) != covariates.end();
  };
  for (const auto& d : decision_nodes) {
    if (mentions({}, d.covariates)) out.push_back(d.id);
  }
  for (const auto& c : chance_nodes) {
    if (mentions(c.cpt, c.covariates)) out.push_back(c.id);
  }
  if (mentions(utility_node.table, {})) out.push_back(utility_node.id);
  return out;
}

std::vector<ParameterRef> NetworkModel::parameters_of(std::string_view id) const {
  std::set<ParameterRef> names;
  auto add_table = [&](const ParameterTable& t) {
    for (const auto& cell : t) {
      if (cell) names.insert(*cell);
    }
  };
  if (const auto* c = find_chance(id)) {
    add_table(c->cpt);
    names.insert(c->covariates.begin(), c->covariates.end());
  } else if (const auto* d = find_decision(id)) {
    names.insert(d->covariates.begin(), d->covariates.end());
  } else if (utility_node.id == id) {
    add_table(utility_node.table);
  }
  return {names.begin(), names.end()};
}

// ---------------------------------------------------------------------------
// ConfigurationSpace

ConfigurationSpace::ConfigurationSpace(std::vector<std::size_t> cardinalities)
    : cardinalities_(std::move(cardinalities)), strides_(cardinalities_.size(), 1) {
  for (std::size_t i = cardinalities_.size(); i-- > 0;) {
    strides_[i] = size_;
    size_ *= cardinalities_[i];
  }
}

std::size_t ConfigurationSpace::index(std::span<const std::size_t> states) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < states.size(); ++i) idx += states[i] * strides_[i];
  return idx;
}

std::vector<std::size_t> ConfigurationSpace::states(std::size_t index) const {
  std::vector<std::size_t> out(cardinalities_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = index / strides_[i];
    index %= strides_[i];
  }
  return out;
}

ConfigurationSpace parent_space(const NetworkModel& model, std::string_view node) {
  std::vector<std::size_t> cards;
  for (const auto& p : model.parents_of(node)) cards.push_back(model.states_of(p).size());
  return ConfigurationSpace(std::move(cards));
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::has_error(std::string_view code) const {
  return std::any_of(errors.begin(), errors.end(), [&](const Finding& f) { return f.code == code; });
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& e : errors) out += fmt::format("error: {}\n", e.message);
  for (const auto& w : warnings) out += fmt::format("warning: {}\n", w.message);
  return out;
}

ValidationError::ValidationError(ValidationReport report)
    : Error(report.errors.empty() ? std::string("validation failed")
                                  : fmt::format("{} validation error(s); first: {}", report.errors.size(),
                                                report.errors.front().message)),
      report_(std::move(report)) {}

ValidationReport validate_network(const NetworkModel& model) {
  ReportBuilder out;

  // Ids and state lists.
  std::set<NodeId, std::less<>> seen;
  for (const auto& id : model.node_ids()) {
    if (id.empty()) out.error("empty-id", "node id must be non-empty");
    else if (!seen.insert(id).second) out.error("duplicate-id", "duplicate node id '{}'", id);
  }
  if (model.utility_node.id.empty()) out.error("missing-utility", "model has no utility node");
  for (const auto& c : model.chance_nodes) {
    if (c.outcomes.size() < 2) out.error("few-states", "chance node '{}' needs at least 2 outcomes", c.id);
    if (std::set<std::string>(c.outcomes.begin(), c.outcomes.end()).size() != c.outcomes.size())
      out.error("duplicate-state", "chance node '{}' repeats an outcome label", c.id);
  }
  for (const auto& d : model.decision_nodes) {
    if (d.alternatives.size() < 2)
      out.error("few-states", "decision node '{}' needs at least 2 alternatives", d.id);
    if (std::set<std::string>(d.alternatives.begin(), d.alternatives.end()).size() != d.alternatives.size())
      out.error("duplicate-state", "decision node '{}' repeats an alternative label", d.id);
  }
  if (model.decision_nodes.empty()) out.error("missing-decision", "model has no decision node");

  // Arcs.
  bool arcs_ok = true;
  for (const auto& id : model.node_ids()) {
    const auto& parents = model.parents_of(id);
    std::set<NodeId, std::less<>> unique(parents.begin(), parents.end());
    if (unique.size() != parents.size()) out.error("duplicate-parent", "node '{}' lists a parent twice", id);
    for (const auto& p : parents) {
      const auto kind = model.kind_of(p);
      if (!kind) {
        out.error("unknown-node", "node '{}' has unknown parent '{}'", id, p);
        arcs_ok = false;
      } else if (*kind == NodeKind::utility) {
        out.error("utility-parent", "utility node cannot be a parent of '{}'", id);
      }
    }
  }
  const auto graph = parent_graph(model);
  if (kahn(graph).size() != graph.size()) {
    out.error("cycle", "cycle detected among the network's arcs");
    arcs_ok = false;
  }

  // No-forgetting across the declared decision order.
  for (std::size_t later = 1; later < model.decision_nodes.size(); ++later) {
    const auto& d = model.decision_nodes[later];
    for (std::size_t earlier = 0; earlier < later; ++earlier) {
      const auto& e = model.decision_nodes[earlier];
      auto has = [&](const NodeId& x) { return std::find(d.parents.begin(), d.parents.end(), x) != d.parents.end(); };
      if (!has(e.id)) out.error("no-forgetting", "decision '{}' must list earlier decision '{}' as a parent", d.id, e.id);
      for (const auto& p : e.parents) {
        if (!has(p)) out.error("no-forgetting", "decision '{}' must also observe '{}' (observed by '{}')", d.id, p, e.id);
      }
    }
  }

  // Tables and parameter bindings.
  std::set<ParameterRef, std::less<>> used;
  for (const auto& c : model.chance_nodes) {
    for (const auto& cell : c.cpt) {
      if (cell) used.insert(*cell);
    }
    if (!arcs_ok) continue;
    check_table(model, out, c.id, c.cpt, [&](const Parameter& p, std::string_view name, std::size_t) {
      const auto* row = std::get_if<RowDistribution>(&p);
      if (row == nullptr) {
        out.error("row-kind", "'{}' uses scalar parameter '{}' as a probability row", c.id, name);
      } else if (static_cast<std::size_t>(row->dimension()) != c.outcomes.size()) {
        out.error("row-dimension", "'{}' row '{}' has dimension {} but the node has {} outcomes", c.id,
                  name, row->dimension(), c.outcomes.size());
      }
    });
  }
  const auto& u = model.utility_node;
  for (const auto& cell : u.table) {
    if (cell) used.insert(*cell);
  }
  if (arcs_ok) {
    check_table(model, out, u.id, u.table, [&](const Parameter& p, std::string_view name, std::size_t) {
      const auto* q = std::get_if<UncertainQuantity>(&p);
      if (q == nullptr || q->role() != Role::utility) {
        out.error("utility-kind", "utility table cell '{}' must be a utility-role quantity", name);
      }
    });
  }
  auto check_covariates = [&](const NodeId& id, const std::vector<ParameterRef>& covariates) {
    for (const auto& name : covariates) {
      used.insert(name);
      const Parameter* p = model.parameters.find(name);
      if (p == nullptr) out.error("unknown-parameter", "'{}' references unknown parameter '{}'", id, name);
      else if (is_row(*p)) out.error("covariate-kind", "covariate '{}' of '{}' must be a scalar", name, id);
    }
  };
  for (const auto& c : model.chance_nodes) check_covariates(c.id, c.covariates);
  for (const auto& d : model.decision_nodes) check_covariates(d.id, d.covariates);

  for (const auto& [name, p] : model.parameters) {
    if (!used.contains(name)) out.error("orphan-parameter", "parameter '{}' is not used by any node", name);
    if (const auto* q = std::get_if<UncertainQuantity>(&p)) {
      if (q->role() != Role::covariate && !within_unit_interval(*q)) {
        out.error("support", "{} parameter '{}' has support [{}, {}] outside [0, 1]", to_string(q->role()),
                  name, q->lower(), q->upper());
      }
    }
  }

  // Reachability of the utility node.
  if (arcs_ok && !model.utility_node.id.empty()) {
    const auto relevant = relevant_nodes(model);
    for (const auto& c : model.chance_nodes) {
      if (std::find(relevant.begin(), relevant.end(), c.id) == relevant.end())
        out.warning("unreachable", "chance node '{}' has no directed path to the utility node", c.id);
    }
    for (const auto& d : model.decision_nodes) {
      if (std::find(relevant.begin(), relevant.end(), d.id) == relevant.end())
        out.warning("unreachable", "decision node '{}' has no directed path to the utility node", d.id);
    }
  }

  // Questions.
  std::set<std::string, std::less<>> question_ids;
  for (const auto& q : model.questions) {
    if (q.id.empty()) out.error("question", "question id must be non-empty");
    else if (!question_ids.insert(q.id).second) out.error("question", "duplicate question id '{}'", q.id);
    if (!(q.cost >= 0.0)) out.error("question", "question '{}' has negative cost", q.id);
    if (q.answers.empty()) out.error("question", "question '{}' has no answers", q.id);
    double total = 0.0;
    std::set<std::string> labels;
    for (const auto& a : q.answers) {
      if (!(a.weight > 0.0)) out.error("question", "question '{}' answer '{}' needs a positive weight", q.id, a.label);
      if (!labels.insert(a.label).second) out.error("question", "question '{}' repeats answer '{}'", q.id, a.label);
      total += a.weight;
      check_refinement(model, out, q, a);
    }
    if (!q.answers.empty() && std::fabs(total - 1.0) > kWeightTolerance)
      out.error("question", "question '{}' answer weights sum to {}, not 1", q.id, total);
  }

  if (!(model.cost_scale_lambda >= 0.0)) out.error("lambda", "cost scale must be nonnegative");
  if (model.thresholds.grid < 1) out.error("thresholds", "sweep grid needs at least one point");
  if (!(model.thresholds.z > 0.0)) out.error("thresholds", "z threshold must be positive");
  if (!(model.thresholds.coherence >= 0.0)) out.error("thresholds", "coherence tolerance must be nonnegative");
  if (model.mc.samples < 1) out.error("mc", "Monte Carlo sample count must be positive");
  if (model.mc.bins < 1) out.error("mc", "histogram needs at least one bin");

  return out.take();
}

std::vector<NodeId> topological_order(const NetworkModel& model) {
  const auto graph = parent_graph(model);
  auto order = kahn(graph);
  if (order.size() != graph.size()) {
    ValidationReport report;
    report.errors.push_back({"cycle", "cycle detected among the network's arcs"});
    throw ValidationError(std::move(report));
  }
  return order;
}

std::vector<NodeId> relevant_nodes(const NetworkModel& model) {
  std::set<NodeId, std::less<>> reach;
  std::vector<NodeId> stack = model.parents_of(model.utility_node.id);
  while (!stack.empty()) {
    NodeId id = std::move(stack.back());
    stack.pop_back();
    if (!reach.insert(id).second) continue;
    for (const auto& p : model.parents_of(id)) stack.push_back(p);
  }
  std::vector<NodeId> out;
  for (const auto& id : topological_order(model)) {
    if (reach.contains(id)) out.push_back(id);
  }
  return out;
}

std::vector<NodeId> descendants_of(const NetworkModel& model, std::string_view id) {
  std::set<NodeId, std::less<>> reach;
  std::vector<NodeId> stack = model.children_of(id);
  while (!stack.empty()) {
    NodeId next = std::move(stack.back());
    stack.pop_back();
    if (!reach.insert(next).second) continue;
    for (auto& c : model.children_of(next)) stack.push_back(std::move(c));
  }
  std::vector<NodeId> out;
  for (const auto& n : topological_order(model)) {
    if (reach.contains(n)) out.push_back(n);
  }
  return out;
}

}  // namespace bdn
