#include "bdn/payloads.hpp"

#include <fmt/format.h>

namespace bdn::payload {

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json bars(const EuSummary& summary, int k) {
  json arr = json::array();
  for (const auto& bar : bdn::error_bars(summary, k)) arr.push_back({{"lo", bar.lo}, {"hi", bar.hi}});
  return arr;
}

}  // namespace

json eu_summary(const EuSummary& summary) {
  json alternatives = json::array();
  for (std::size_t i = 0; i < summary.alternatives.size(); ++i) {
    const auto& a = summary.alternatives[i];
    alternatives.push_back({{"alternative", a.alternative},
                            {"mean", a.mean},
                            {"sd", a.sd},
                            {"histogram", a.histogram},
                            {"dominance", summary.dominance[static_cast<Eigen::Index>(i)]}});
  }
  return {{"alternatives", std::move(alternatives)},
          {"samples", summary.samples},
          {"seed", summary.seed},
          {"bins", summary.bins}};
}

json error_bars(const EuSummary& summary) { return {{"1", bars(summary, 1)}, {"2", bars(summary, 2)}}; }

json display_graph(const DisplayGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"display_name", n.display_name},
                     {"kind", std::string(to_string(n.kind))},
                     {"size_score", n.size_score},
                     {"pruned", n.pruned},
                     {"unusual", n.unusual},
                     {"max_z", n.max_z}});
  }
  json arcs = json::array();
  for (const auto& a : graph.arcs) arcs.push_back({{"from", a.from}, {"to", a.to}});
  return {{"nodes", std::move(nodes)}, {"arcs", std::move(arcs)}};
}

json recommendation(const Recommendation& rec) {
  return {{"alternative", rec.alternative},
          {"index", rec.index},
          {"eu", vector_json(rec.eu)},
          {"tie", rec.tie},
          {"tied", rec.tied}};
}

json ranking(const QuestionRanking& ranking) {
  json entries = json::array();
  for (const auto& q : ranking.entries) {
    entries.push_back({{"id", q.id},
                       {"evoi", q.evoi},
                       {"cost", q.cost},
                       {"net_value", q.net_value},
                       {"coherence_warning", q.coherence_warning}});
  }
  return {{"entries", std::move(entries)}, {"stop", ranking.stop}};
}

json question(const AssessmentQuestion& q) {
  json answers = json::array();
  for (const auto& a : q.answers) answers.push_back({{"label", a.label}, {"weight", a.weight}});
  return {{"id", q.id}, {"prompt", q.prompt}, {"cost", q.cost}, {"answers", std::move(answers)}};
}

json parameter_summary(const Parameter& p) {
  json j{{"kind", describe_kind(p)}};
  if (const auto* q = std::get_if<UncertainQuantity>(&p)) {
    const Moments m = moments(*q);
    j["role"] = std::string(to_string(q->role()));
    j["mean"] = m.mean;
    j["sd"] = m.sd();
  } else {
    const RowMoments m = row_moments(std::get<RowDistribution>(p));
    j["role"] = "probability";
    j["mean"] = vector_json(m.mean);
    j["sd"] = vector_json(m.variance.cwiseSqrt());
  }
  return j;
}

json explanation_item(const ExplanationItem& item) {
  return {{"kind", std::string(to_string(item.kind))},
          {"reference", item.reference},
          {"z", item.z},
          {"swing", item.swing},
          {"dependents", item.dependents},
          {"sentence", item.sentence}};
}

json applied_answers(std::span<const AppliedAnswer> applied) {
  json arr = json::array();
  for (const auto& a : applied) arr.push_back({{"question_id", a.question_id}, {"answer", a.answer}});
  return arr;
}

json overview(const ConsultationState& state) {
  const EuSummary& summary = state.eu_summary();
  const auto scan = sensitivity_scan(state);
  return {{"model_id", state.model().id},
          {"seed", state.seed()},
          {"applied", applied_answers(state.applied())},
          {"eu_summary", eu_summary(summary)},
          {"error_bars", error_bars(summary)},
          {"display_graph", display_graph(bdn::display_graph(state, scan))},
          {"recommendation", recommendation(recommend(state.evaluator(), state.registry()))},
          {"stop", rank_questions(state).stop}};
}

json next_question(const ConsultationState& state) {
  const QuestionRanking r = rank_questions(state);
  json j{{"stop", r.stop}, {"ranking", ranking(r)}};
  if (!r.stop) j["question"] = question(*state.model().find_question(r.entries.front().id));
  return j;
}

json explanation(const ConsultationState& state, bool generic_summary) {
  json items = json::array();
  for (const auto& item : flag_explanation_items(state)) items.push_back(explanation_item(item));
  return {{"text", render_explanation(state, generic_summary)}, {"items", std::move(items)}};
}

json node_attributes(const ConsultationState& state, std::string_view node_id) {
  const NetworkModel& model = state.model();
  const auto kind = model.kind_of(node_id);
  if (!kind) throw LookupError(fmt::format("unknown node '{}'", node_id));

  const auto scan = sensitivity_scan(state);
  const DisplayGraph graph = bdn::display_graph(state, scan);
  const DisplayNode* shown = nullptr;
  for (const auto& n : graph.nodes) {
    if (n.id == node_id) shown = &n;
  }

  json parameters = json::array();
  for (const auto& name : model.parameters_of(node_id)) {
    json p{{"name", name},
           {"display_name", model.parameter_display_name(name)},
           {"generic", parameter_summary(state.generic_registry().at(name))},
           {"current", parameter_summary(state.registry().at(name))}};
    if (const auto z = parameter_z(state, name)) {
      p["z"] = *z;
      p["unusual"] = *z >= model.thresholds.z;
    } else {
      p["z"] = nullptr;
      p["unusual"] = false;
    }
    for (const auto& r : scan) {
      if (r.parameter == name) {
        p["swing"] = r.swing;
        p["flips"] = r.flips;
        p["size_score"] = r.size_score;
      }
    }
    parameters.push_back(std::move(p));
  }

  json j{{"id", std::string(node_id)},
         {"display_name", model.display_name(node_id)},
         {"kind", std::string(to_string(*kind))},
         {"parents", model.parents_of(node_id)},
         {"children", model.children_of(node_id)},
         {"parameters", std::move(parameters)},
         {"size_score", shown->size_score},
         {"pruned", shown->pruned},
         {"unusual", shown->unusual},
         {"max_z", shown->max_z}};
  if (*kind != NodeKind::utility) j["states"] = model.states_of(node_id);
  return j;
}

json error_record(std::string_view kind, std::string_view message) {
  return {{"error", {{"kind", std::string(kind)}, {"message", std::string(message)}}}};
}

std::string dump(const json& j) { return j.dump(); }

}  // namespace bdn::payload
