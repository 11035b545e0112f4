#include "bdn/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace bdn {

ConsultationState::ConsultationState(std::shared_ptr<const NetworkModel> model)
    : model_(std::move(model)), cache_(std::make_shared<SummaryCache>()) {
  auto report = validate_network(*model_);
  if (!report.ok()) throw ValidationError(std::move(report));
  evaluator_ = std::make_shared<const Evaluator>(*model_);
  registry_ = model_->parameters;
  seed_ = model_->mc.seed;
}

ConsultationState::ConsultationState(std::shared_ptr<const NetworkModel> model,
                                     std::shared_ptr<const Evaluator> evaluator,
                                     std::vector<AppliedAnswer> applied, ParameterRegistry registry,
                                     std::uint64_t seed)
    : model_(std::move(model)),
      evaluator_(std::move(evaluator)),
      applied_(std::move(applied)),
      registry_(std::move(registry)),
      seed_(seed),
      cache_(std::make_shared<SummaryCache>()) {}

bool ConsultationState::answered(std::string_view question_id) const {
  return std::any_of(applied_.begin(), applied_.end(),
                     [&](const AppliedAnswer& a) { return a.question_id == question_id; });
}

const EuSummary& ConsultationState::eu_summary() const {
  std::call_once(cache_->once, [this] {
    MonteCarloOptions options;
    options.samples = model_->mc.samples;
    options.seed = seed_;
    options.bins = model_->mc.bins;
    cache_->value = monte_carlo_eu(*evaluator_, registry_, options);
  });
  return *cache_->value;
}

ConsultationState ConsultationState::with_seed(std::uint64_t seed) const {
  return ConsultationState(model_, evaluator_, applied_, registry_, seed);
}

bool operator==(const ConsultationState& a, const ConsultationState& b) {
  return a.model_ == b.model_ && a.applied_ == b.applied_ && a.registry_ == b.registry_ &&
         a.seed_ == b.seed_;
}

// ---------------------------------------------------------------------------

EvoiResult evoi(const ConsultationState& state, const AssessmentQuestion& question) {
  if (state.answered(question.id)) {
    throw StateError(fmt::format("question '{}' has already been answered", question.id));
  }
  const Evaluator& evaluator = state.evaluator();
  const auto alternatives = static_cast<Eigen::Index>(evaluator.alternatives().size());

  double mean_of_max = 0.0;
  Eigen::VectorXd mixture = Eigen::VectorXd::Zero(alternatives);
  for (const auto& answer : question.answers) {
    const Eigen::VectorXd eu =
        evaluator.expected_utilities(mean_instantiation(refine(state.registry(), answer.refinement)));
    mean_of_max += answer.weight * eu.maxCoeff();
    mixture += answer.weight * eu;
  }
  const Eigen::VectorXd current = evaluator.expected_utilities(mean_instantiation(state.registry()));

  EvoiResult result;
  result.value = mean_of_max - mixture.maxCoeff();
  result.coherence_gap = (mixture - current).cwiseAbs().maxCoeff();
  result.coherence_warning = result.coherence_gap > state.model().thresholds.coherence;
  return result;
}

EvoiResult evoi(const ConsultationState& state, std::string_view question_id) {
  const AssessmentQuestion* q = state.model().find_question(question_id);
  if (q == nullptr) throw LookupError(fmt::format("unknown question '{}'", question_id));
  return evoi(state, *q);
}

QuestionRanking rank_questions(const ConsultationState& state) {
  QuestionRanking ranking;
  const double lambda = state.model().cost_scale_lambda;
  for (const auto& q : state.model().questions) {
    if (state.answered(q.id)) continue;
    const EvoiResult v = evoi(state, q);
    ranking.entries.push_back({q.id, v.value, q.cost, v.value - lambda * q.cost, v.coherence_warning});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const RankedQuestion& a, const RankedQuestion& b) {
    if (a.net_value != b.net_value) return a.net_value > b.net_value;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.id < b.id;
  });
  ranking.stop = std::all_of(ranking.entries.begin(), ranking.entries.end(),
                             [](const RankedQuestion& q) { return q.net_value <= 0.0; });
  return ranking;
}

std::optional<std::string> next_question(const ConsultationState& state) {
  const QuestionRanking ranking = rank_questions(state);
  if (ranking.stop) return std::nullopt;
  return ranking.entries.front().id;
}

ConsultationState apply_answer(const ConsultationState& state, std::string_view question_id,
                               std::string_view answer) {
  const AssessmentQuestion* q = state.model().find_question(question_id);
  if (q == nullptr) throw LookupError(fmt::format("unknown question '{}'", question_id));
  const Answer* a = q->find_answer(answer);
  if (a == nullptr) {
    throw LookupError(fmt::format("question '{}' has no answer '{}'", question_id, answer));
  }
  if (state.answered(question_id)) {
    throw StateError(fmt::format("question '{}' is already answered; undo first", question_id));
  }
  auto applied = state.applied_;
  applied.push_back({q->id, a->label});
  return ConsultationState(state.model_, state.evaluator_, std::move(applied),
                           refine(state.registry_, a->refinement), state.seed_);
}

ConsultationState undo(const ConsultationState& state) {
  if (state.applied_.empty()) throw StateError("nothing to undo");
  ConsultationState base(state.model_, state.evaluator_, {}, state.model_->parameters, state.seed_);
  const std::span<const AppliedAnswer> keep(state.applied_.data(), state.applied_.size() - 1);
  for (const auto& a : keep) base = apply_answer(base, a.question_id, a.answer);
  return base;
}

ConsultationState replay(std::shared_ptr<const NetworkModel> model, std::span<const AppliedAnswer> answers,
                         std::optional<std::uint64_t> seed) {
  ConsultationState state(std::move(model));
  if (seed) state = state.with_seed(*seed);
  for (const auto& a : answers) state = apply_answer(state, a.question_id, a.answer);
  return state;
}

}  // namespace bdn
