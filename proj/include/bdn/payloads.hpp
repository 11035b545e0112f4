#pragma once

// JSON bodies shared by the HTTP service and the CLI. Keys are emitted in
// sorted order, so equal states serialize to equal bytes.

#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

#include "bdn/assessment.hpp"
#include "bdn/evaluation.hpp"
#include "bdn/insight.hpp"

namespace bdn::payload {

using nlohmann::json;

json eu_summary(const EuSummary& summary);
/// {"1": [{lo, hi}...], "2": [...]}, one entry per alternative.
json error_bars(const EuSummary& summary);
json display_graph(const DisplayGraph& graph);
json recommendation(const Recommendation& rec);
json ranking(const QuestionRanking& ranking);
json question(const AssessmentQuestion& q);
json parameter_summary(const Parameter& p);
json explanation_item(const ExplanationItem& item);
json applied_answers(std::span<const AppliedAnswer> applied);

/// {eu_summary, error_bars, display_graph, recommendation, stop, applied, model_id, seed}
json overview(const ConsultationState& state);

/// {stop, question?, ranking}: the head question unless the stop signal is raised.
json next_question(const ConsultationState& state);

/// {text, items}
json explanation(const ConsultationState& state, bool generic_summary);

/// Inspector view of one node: its parameters with generic and current
/// summaries, divergence, sweep swing and flags. Throws LookupError.
json node_attributes(const ConsultationState& state, std::string_view node_id);

/// {"error": {"kind", "message"}}
json error_record(std::string_view kind, std::string_view message);

/// Canonical serialization used on the wire and by the CLI.
std::string dump(const json& j);

}  // namespace bdn::payload
