#pragma once

// The consultation loop: answers refine the generic model, questions are
// ranked by expected value of information net of their scaled cost.

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdn/evaluation.hpp"
#include "bdn/network.hpp"

namespace bdn {

struct AppliedAnswer {
  std::string question_id;
  std::string answer;

  friend bool operator==(const AppliedAnswer&, const AppliedAnswer&) = default;
};

/// Generic model plus the answers applied so far. Immutable; transitions
/// return new states.
class ConsultationState {
 public:
  /// Fresh state on the generic registry. Throws ValidationError if the
  /// model does not validate.
  explicit ConsultationState(std::shared_ptr<const NetworkModel> model);

  const NetworkModel& model() const { return *model_; }
  const std::shared_ptr<const NetworkModel>& model_ptr() const { return model_; }
  const Evaluator& evaluator() const { return *evaluator_; }
  const ParameterRegistry& generic_registry() const { return model_->parameters; }
  const ParameterRegistry& registry() const { return registry_; }
  const std::vector<AppliedAnswer>& applied() const { return applied_; }
  bool answered(std::string_view question_id) const;

  /// Monte Carlo summary at the model's defaults (or `seed` when set),
  /// computed on first use and shared by copies of this state.
  const EuSummary& eu_summary() const;
  std::uint64_t seed() const { return seed_; }
  ConsultationState with_seed(std::uint64_t seed) const;

  friend bool operator==(const ConsultationState& a, const ConsultationState& b);

 private:
  struct SummaryCache {
    std::once_flag once;
    std::optional<EuSummary> value;
  };

  ConsultationState(std::shared_ptr<const NetworkModel> model, std::shared_ptr<const Evaluator> evaluator,
                    std::vector<AppliedAnswer> applied, ParameterRegistry registry, std::uint64_t seed);

  friend ConsultationState apply_answer(const ConsultationState&, std::string_view, std::string_view);
  friend ConsultationState undo(const ConsultationState&);

  std::shared_ptr<const NetworkModel> model_;
  std::shared_ptr<const Evaluator> evaluator_;
  std::vector<AppliedAnswer> applied_;
  ParameterRegistry registry_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<SummaryCache> cache_;
};

struct EvoiResult {
  double value = 0.0;
  bool coherence_warning = false;
  double coherence_gap = 0.0;  ///< max over alternatives of |mixture EU - current EU|
};

/// Value of learning the question's answer before deciding, computed by
/// rollback at the means of each answer's refined registry:
///   sum_k w_k max_a EU_k(a) - max_a sum_k w_k EU_k(a).
/// Throws StateError if the question was already answered.
EvoiResult evoi(const ConsultationState& state, const AssessmentQuestion& question);
EvoiResult evoi(const ConsultationState& state, std::string_view question_id);

struct RankedQuestion {
  std::string id;
  double evoi = 0.0;
  double cost = 0.0;
  double net_value = 0.0;
  bool coherence_warning = false;
};

struct QuestionRanking {
  std::vector<RankedQuestion> entries;  ///< net value desc, then cost asc, then id
  bool stop = true;                     ///< every net value <= 0
};

QuestionRanking rank_questions(const ConsultationState& state);

/// Head of the ranking, or nullopt for the (advisory) stop signal.
std::optional<std::string> next_question(const ConsultationState& state);

ConsultationState apply_answer(const ConsultationState& state, std::string_view question_id,
                               std::string_view answer);

/// Drops the last answer. Throws StateError on an empty history.
ConsultationState undo(const ConsultationState& state);

/// Folds `answers` from the generic state.
ConsultationState replay(std::shared_ptr<const NetworkModel> model, std::span<const AppliedAnswer> answers,
                         std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace bdn
