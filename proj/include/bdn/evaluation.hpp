#pragma once

// Expected-utility evaluation: exhaustive rollback of the decision tree that
// a network unfolds into, and Monte Carlo simulation over the parameter
// distributions.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bdn/distribution.hpp"
#include "bdn/network.hpp"

namespace bdn {

/// Largest decision tree (leaf count) accepted by the rollback.
inline constexpr double kMaxTreeLeaves = 1e6;

/// Concrete parameter values, one entry per registry slot (lexicographic
/// name order). Scalars are stored as length-1 vectors.
struct Instantiation {
  std::vector<Eigen::VectorXd> values;
};

/// Every parameter at its mean; rows at their mean vectors.
Instantiation mean_instantiation(const ParameterRegistry& registry);

/// One joint draw: each registry entry is sampled exactly once, in slot
/// order, so a parameter shared by several table cells takes one value.
Instantiation draw_instantiation(const ParameterRegistry& registry, Stream& stream);

/// A network compiled for repeated rollback.
///
/// The tree is expanded in information order: chance nodes observed before
/// the first decision, the first decision, chance nodes observed before the
/// second decision, ..., and finally every unobserved chance node. Later
/// decisions maximize, chance nodes sum. A chance node's probability factor
/// is applied as soon as the node and all its parents are assigned, so an
/// observed node whose parent is unobserved is weighted correctly. Chance
/// nodes that are ancestors of neither the utility node nor any decision sum
/// to one and are left out.
class Evaluator {
 public:
  /// Throws EvaluationError when the tree exceeds kMaxTreeLeaves leaves.
  explicit Evaluator(const NetworkModel& model);

  /// EU of committing to each alternative of the first decision.
  Eigen::VectorXd expected_utilities(const Instantiation& inst) const;

  const std::vector<std::string>& alternatives() const { return alternatives_; }
  double leaf_count() const { return leaves_; }
  std::size_t parameter_count() const { return parameter_count_; }

 private:
  struct Table {
    std::vector<std::size_t> parents;  // internal node indices
    std::vector<std::size_t> strides;
    std::vector<std::size_t> slots;    // registry slot per configuration
    std::size_t config(const std::vector<std::size_t>& states) const;
  };
  struct Step {
    std::size_t node = 0;
    std::size_t states = 0;
    bool decision = false;
    std::vector<std::size_t> factors;  // chance tables ready after this step
  };

  double expand(std::size_t pos, double weight, std::vector<std::size_t>& states,
                std::size_t forced, const Instantiation& inst) const;

  std::vector<std::string> alternatives_;
  std::vector<Step> steps_;
  std::vector<Table> chance_tables_;  // indexed by internal node index (chance nodes only)
  Table utility_;
  std::size_t first_decision_step_ = 0;
  std::size_t node_count_ = 0;
  std::size_t parameter_count_ = 0;
  double leaves_ = 1.0;
};

/// Rollback EU per first-decision alternative.
Eigen::VectorXd eu_at(const NetworkModel& model, const Instantiation& inst);

/// Relative tolerance under which two expected utilities count as tied.
inline constexpr double kTieTolerance = 1e-12;

struct Recommendation {
  std::size_t index = 0;
  std::string alternative;
  Eigen::VectorXd eu;
  bool tie = false;
  std::vector<std::size_t> tied;  ///< every alternative within tolerance of the best
};

/// Argmax with first-declared tie-breaking.
Recommendation choose(const std::vector<std::string>& alternatives, const Eigen::VectorXd& eu);

/// Decision rule: rollback at parameter means.
Recommendation recommend(const NetworkModel& model);
Recommendation recommend(const NetworkModel& model, const ParameterRegistry& registry);
Recommendation recommend(const Evaluator& evaluator, const ParameterRegistry& registry);

struct AlternativeSummary {
  std::string alternative;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<std::uint64_t> histogram;  ///< uniform bins over [0, 1]
};

struct EuSummary {
  std::vector<AlternativeSummary> alternatives;
  Eigen::VectorXd dominance;  ///< P(alternative attains the maximum EU), ties split
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t bins = 0;

  friend bool operator==(const EuSummary& a, const EuSummary& b);
};

struct MonteCarloOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 42;
  std::size_t bins = 50;
  unsigned workers = 0;  ///< 0 = hardware concurrency; results do not depend on it
};

/// Throws DomainError when samples == 0.
EuSummary monte_carlo_eu(const Evaluator& evaluator, const ParameterRegistry& registry,
                         const MonteCarloOptions& options);
EuSummary monte_carlo_eu(const NetworkModel& model, const ParameterRegistry& registry,
                         const MonteCarloOptions& options);
/// Generic registry, model histogram bins.
EuSummary monte_carlo_eu(const NetworkModel& model, std::size_t samples, std::uint64_t seed);

struct ErrorBar {
  double lo = 0.0;
  double hi = 0.0;
};

/// mean -/+ k sd per alternative, clamped to [0, 1]. Throws DomainError
/// unless k is 1 or 2.
std::vector<ErrorBar> error_bars(const EuSummary& summary, int k);

}  // namespace bdn
