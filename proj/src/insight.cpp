#include "bdn/insight.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/args.h>
#include <fmt/format.h>
#include <set>

namespace bdn {

namespace {

using TemplateArgs = std::vector<std::pair<std::string, std::string>>;

std::string fill(const NetworkModel& model, std::string_view key, const TemplateArgs& args) {
  std::string pattern;
  if (const auto it = model.templates.find(key); it != model.templates.end()) {
    pattern = it->second;
  } else {
    pattern = default_templates().at(std::string(key));
  }
  fmt::dynamic_format_arg_store<fmt::format_context> store;
  for (const auto& [name, value] : args) store.push_back(fmt::arg(name.c_str(), value));
  try {
    return fmt::vformat(pattern, store);
  } catch (const fmt::format_error& e) {
    throw SchemaError(fmt::format("template '{}': {}", key, e.what()));
  }
}

std::string number(double x) { return fmt::format("{:.3f}", x); }

std::string value_text(double x) { return fmt::format("{:.4g}", x); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// EU of the leader minus the best other alternative.
double gap(const Eigen::VectorXd& eu, std::size_t leader) {
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < eu.size(); ++a) {
    if (static_cast<std::size_t>(a) != leader) other = std::max(other, eu[a]);
  }
  return eu[static_cast<Eigen::Index>(leader)] - other;
}

std::vector<std::string> others_text(const Recommendation& r) {
  std::vector<std::string> out;
  for (Eigen::Index a = 0; a < r.eu.size(); ++a) {
    if (static_cast<std::size_t>(a) != r.index) out.push_back(number(r.eu[a]));
  }
  return out;
}

/// Display names of nodes downstream of the nodes that use `parameters`.
std::vector<std::string> dependents_of(const NetworkModel& model, const std::vector<ParameterRef>& parameters,
                                       bool include_owners) {
  std::set<NodeId> owners;
  for (const auto& p : parameters) {
    for (auto& n : model.nodes_using(p)) owners.insert(std::move(n));
  }
  std::set<NodeId> affected;
  for (const auto& o : owners) {
    if (include_owners) affected.insert(o);
    for (auto& d : descendants_of(model, o)) affected.insert(std::move(d));
  }
  std::vector<std::string> names;
  for (const auto& id : topological_order(model)) {
    if (affected.contains(id) && model.kind_of(id) != NodeKind::utility) names.push_back(model.display_name(id));
  }
  return names;
}

const SensitivityRecord* find_record(std::span<const SensitivityRecord> scan, std::string_view name) {
  for (const auto& r : scan) {
    if (r.parameter == name) return &r;
  }
  return nullptr;
}

/// "P(label) = x" for rows, the mean for scalars; rows report the component
/// with the largest generic z.
std::pair<std::string, std::string> describe_shift(const ConsultationState& state, std::string_view name) {
  const Parameter& current = state.registry().at(name);
  const Parameter& generic = state.generic_registry().at(name);
  if (const auto* q = std::get_if<UncertainQuantity>(&current)) {
    return {value_text(moments(*q).mean), value_text(moments(std::get<UncertainQuantity>(generic)).mean)};
  }
  const RowMoments c = row_moments(std::get<RowDistribution>(current));
  const RowMoments g = row_moments(std::get<RowDistribution>(generic));
  Eigen::Index best = 0;
  double best_z = -1.0;
  for (Eigen::Index i = 0; i < g.mean.size(); ++i) {
    if (!(g.variance[i] > 0.0)) continue;
    const double z = std::fabs(c.mean[i] - g.mean[i]) / std::sqrt(g.variance[i]);
    if (z > best_z) {
      best_z = z;
      best = i;
    }
  }
  std::string label = fmt::format("component {}", best + 1);
  for (const auto& node : state.model().nodes_using(name)) {
    const auto& outcomes = state.model().states_of(node);
    if (static_cast<std::size_t>(best) < outcomes.size()) {
      label = outcomes[static_cast<std::size_t>(best)];
      break;
    }
  }
  return {fmt::format("P({}) = {}", label, value_text(c.mean[best])),
          fmt::format("P({}) = {}", label, value_text(g.mean[best]))};
}

}  // namespace

const std::map<std::string, std::string, std::less<>>& default_templates() {
  static const std::map<std::string, std::string, std::less<>> templates{
      {"recommendation", "Recommended: {alternative} (mean EU {eu} vs {others})."},
      {"dominance",
       "It has the highest expected utility in {dominance}% of {samples} simulated cases."},
      {"tie", "Tied with {tied}; the first listed alternative is shown."},
      {"unusual_value",
       "Unusual: {parameter} is {current} against a generic {generic} (z = {z})."},
      {"unusual_dependents", "This bears on {dependents}."},
      {"decision_critical_flip",
       "Decision-critical: answering \"{answer}\" to \"{question}\" changed the recommendation from "
       "{from} to {to}."},
      {"decision_critical_margin",
       "Decision-critical: answering \"{answer}\" to \"{question}\" narrowed the lead of {to} to "
       "{margin}."},
      {"generic_header", "Generic model summary:"},
      {"generic_recommendation", "Typical case: {alternative} (mean EU {eu} vs {others})."},
      {"top_sensitivity", "Sensitive: {parameter} (swing {swing}{flip})."},
  };
  return templates;
}

std::string_view to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::unusual_value: return "unusual-value";
    case ItemKind::decision_critical: return "decision-critical";
    case ItemKind::top_sensitivity: return "top-sensitivity";
  }
  return "unknown";
}

std::vector<double> quantile_grid(int g) {
  std::vector<double> levels;
  for (int i = 1; i <= g; ++i) levels.push_back(static_cast<double>(i) / (g + 1));
  return levels;
}

std::vector<Eigen::VectorXd> sweep_values(const Parameter& p, int grid) {
  std::vector<Eigen::VectorXd> values;
  if (is_point(p)) return values;
  const auto levels = quantile_grid(grid);
  if (const auto* q = std::get_if<UncertainQuantity>(&p)) {
    for (double u : levels) values.push_back(Eigen::VectorXd::Constant(1, sample(*q, u)));
    return values;
  }
  const auto& row = std::get<RowDistribution>(p);
  if (const auto* b = std::get_if<BinaryRow>(&row.kind())) {
    for (double u : levels) {
      const double x = sample(b->p, u);
      Eigen::VectorXd v(2);
      v << x, 1.0 - x;
      values.push_back(std::move(v));
    }
    return values;
  }
  const auto& alpha = std::get<DirichletRow>(row.kind()).alpha;
  const double total = alpha.sum();
  const Eigen::VectorXd mean = alpha / total;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const auto marginal = UncertainQuantity::beta(alpha[i], total - alpha[i], Role::probability);
    for (double u : levels) {
      const double x = sample(marginal, u);
      Eigen::VectorXd v = mean * ((1.0 - x) / (1.0 - mean[i]));
      v[i] = x;
      values.push_back(std::move(v));
    }
  }
  return values;
}

std::vector<SensitivityRecord> sensitivity_scan(const ConsultationState& state) {
  const Evaluator& evaluator = state.evaluator();
  const Instantiation base = mean_instantiation(state.registry());
  const Eigen::VectorXd base_eu = evaluator.expected_utilities(base);
  const Recommendation leader = choose(evaluator.alternatives(), base_eu);
  const double base_gap = gap(base_eu, leader.index);
  const int grid = state.model().thresholds.grid;

  std::vector<SensitivityRecord> records;
  std::size_t slot = 0;
  for (const auto& [name, p] : state.registry()) {
    SensitivityRecord r{name};
    Instantiation probe = base;
    for (auto& v : sweep_values(p, grid)) {
      probe.values[slot] = std::move(v);
      const Eigen::VectorXd eu = evaluator.expected_utilities(probe);
      r.swing = std::max(r.swing, std::fabs(gap(eu, leader.index) - base_gap));
      if (choose(evaluator.alternatives(), eu).index != leader.index) r.flips = true;
    }
    records.push_back(std::move(r));
    ++slot;
  }
  double largest = 0.0;
  for (const auto& r : records) largest = std::max(largest, r.swing);
  if (largest > 0.0) {
    for (auto& r : records) r.size_score = r.swing / largest;
  }
  return records;
}

std::optional<double> parameter_z(const ConsultationState& state, std::string_view parameter) {
  try {
    return divergence_z(state.registry().at(parameter), state.generic_registry().at(parameter));
  } catch (const UndefinedDivergence&) {
    return std::nullopt;
  }
}

DisplayGraph display_graph(const ConsultationState& state, std::span<const SensitivityRecord> scan,
                           double prune_threshold) {
  const NetworkModel& model = state.model();
  DisplayGraph graph;
  for (const auto& id : topological_order(model)) {
    DisplayNode node;
    node.id = id;
    node.display_name = model.display_name(id);
    node.kind = *model.kind_of(id);
    bool flips = false;
    for (const auto& p : model.parameters_of(id)) {
      if (const auto* r = find_record(scan, p)) {
        node.size_score = std::max(node.size_score, r->size_score);
        flips = flips || r->flips;
      }
      if (const auto z = parameter_z(state, p)) {
        node.max_z = std::max(node.max_z, *z);
        if (*z >= model.thresholds.z) node.unusual = true;
      }
    }
    node.pruned = node.kind == NodeKind::chance && !flips && node.size_score < prune_threshold;
    for (const auto& parent : model.parents_of(id)) graph.arcs.push_back({parent, id});
    graph.nodes.push_back(std::move(node));
  }
  return graph;
}

DisplayGraph display_graph(const ConsultationState& state, std::span<const SensitivityRecord> scan) {
  return display_graph(state, scan, state.model().thresholds.prune);
}

DisplayGraph display_graph(const ConsultationState& state) {
  const auto scan = sensitivity_scan(state);
  return display_graph(state, scan);
}

std::vector<ExplanationItem> flag_explanation_items(const ConsultationState& state,
                                                    std::span<const SensitivityRecord> scan) {
  const NetworkModel& model = state.model();
  std::vector<ExplanationItem> items;

  for (const auto& [name, _] : state.registry()) {
    const auto z = parameter_z(state, name);
    if (!z || *z < model.thresholds.z) continue;
    ExplanationItem item;
    item.kind = ItemKind::unusual_value;
    item.reference = name;
    item.z = *z;
    if (const auto* r = find_record(scan, name)) item.swing = r->swing;
    item.dependents = dependents_of(model, {name}, false);
    const auto [current, generic] = describe_shift(state, name);
    item.sentence = fill(model, "unusual_value",
                         {{"parameter", model.parameter_display_name(name)},
                          {"current", current},
                          {"generic", generic},
                          {"z", fmt::format("{:.2f}", *z)}});
    if (!item.dependents.empty()) {
      item.sentence += " " + fill(model, "unusual_dependents", {{"dependents", join(item.dependents, ", ")}});
    }
    items.push_back(std::move(item));
  }

  // Replay the history to find answers that moved the decision.
  ConsultationState step = replay(state.model_ptr(), std::span<const AppliedAnswer>{}, state.seed());
  for (const auto& applied : state.applied()) {
    const Recommendation before = recommend(step.evaluator(), step.registry());
    step = apply_answer(step, applied.question_id, applied.answer);
    const Recommendation after = recommend(step.evaluator(), step.registry());
    const double margin_before = gap(before.eu, before.index);
    const double margin_after = gap(after.eu, after.index);
    const bool flipped = before.index != after.index;
    const bool narrowed = margin_after < model.thresholds.margin && margin_after < margin_before;
    if (!flipped && !narrowed) continue;

    const AssessmentQuestion* q = model.find_question(applied.question_id);
    const Answer* a = q->find_answer(applied.answer);
    std::vector<ParameterRef> refined;
    for (const auto& [p, _] : a->refinement) refined.push_back(p);

    ExplanationItem item;
    item.kind = ItemKind::decision_critical;
    item.reference = applied.question_id;
    item.swing = (after.eu - before.eu).cwiseAbs().maxCoeff();
    item.dependents = dependents_of(model, refined, true);
    TemplateArgs args{{"answer", applied.answer},
                      {"question", q->prompt.empty() ? q->id : q->prompt},
                      {"from", before.alternative},
                      {"to", after.alternative},
                      {"margin", number(margin_after)}};
    item.sentence = fill(model, flipped ? "decision_critical_flip" : "decision_critical_margin", args);
    items.push_back(std::move(item));
  }

  std::stable_sort(items.begin(), items.end(), [](const ExplanationItem& a, const ExplanationItem& b) {
    if (a.swing != b.swing) return a.swing > b.swing;
    return a.z > b.z;
  });
  return items;
}

std::vector<ExplanationItem> flag_explanation_items(const ConsultationState& state) {
  const auto scan = sensitivity_scan(state);
  return flag_explanation_items(state, scan);
}

std::string render_explanation(const ConsultationState& state, bool generic_summary) {
  const NetworkModel& model = state.model();
  const Recommendation rec = recommend(state.evaluator(), state.registry());
  const EuSummary& summary = state.eu_summary();

  auto recommendation_line = [&](std::string_view key, const Recommendation& r) {
    std::string line = fill(model, key,
                            {{"alternative", r.alternative},
                             {"eu", number(r.eu[static_cast<Eigen::Index>(r.index)])},
                             {"others", join(others_text(r), ", ")}});
    if (r.tie) {
      std::vector<std::string> tied;
      for (std::size_t i : r.tied) {
        if (i != r.index) tied.push_back(state.evaluator().alternatives()[i]);
      }
      line += " " + fill(model, "tie", {{"tied", join(tied, ", ")}});
    }
    return line;
  };

  std::string text = recommendation_line("recommendation", rec);
  text += " " + fill(model, "dominance",
                     {{"dominance", fmt::format("{:.1f}", 100.0 * summary.dominance[static_cast<Eigen::Index>(rec.index)])},
                      {"samples", std::to_string(summary.samples)}});
  text += "\n";
  for (const auto& item : flag_explanation_items(state)) text += item.sentence + "\n";

  if (generic_summary) {
    const ConsultationState generic = replay(state.model_ptr(), std::span<const AppliedAnswer>{}, state.seed());
    text += "\n" + fill(model, "generic_header", {}) + "\n";
    text += recommendation_line("generic_recommendation", recommend(generic.evaluator(), generic.registry())) + "\n";
    auto scan = sensitivity_scan(generic);
    std::stable_sort(scan.begin(), scan.end(),
                     [](const SensitivityRecord& a, const SensitivityRecord& b) { return a.swing > b.swing; });
    std::size_t shown = 0;
    for (const auto& r : scan) {
      if (shown == 3 || r.swing <= 0.0) break;
      text += fill(model, "top_sensitivity",
                   {{"parameter", model.parameter_display_name(r.parameter)},
                    {"swing", number(r.swing)},
                    {"flip", r.flips ? "; can change the recommendation" : ""}}) +
              "\n";
      ++shown;
    }
  }
  return text;
}

}  // namespace bdn
