#include "bdn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <set>
#include <thread>

namespace bdn {

Instantiation mean_instantiation(const ParameterRegistry& registry) {
  Instantiation inst;
  inst.values.reserve(registry.size());
  for (const auto& [_, p] : registry) inst.values.push_back(parameter_mean(p));
  return inst;
}

Instantiation draw_instantiation(const ParameterRegistry& registry, Stream& stream) {
  Instantiation inst;
  inst.values.reserve(registry.size());
  for (const auto& [_, p] : registry) {
    if (const auto* q = std::get_if<UncertainQuantity>(&p)) {
      inst.values.push_back(Eigen::VectorXd::Constant(1, sample(*q, stream.uniform())));
    } else {
      inst.values.push_back(sample_row(std::get<RowDistribution>(p), stream));
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Evaluator

std::size_t Evaluator::Table::config(const std::vector<std::size_t>& states) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < parents.size(); ++i) idx += states[parents[i]] * strides[i];
  return idx;
}

Evaluator::Evaluator(const NetworkModel& model) {
  if (model.decision_nodes.empty()) throw EvaluationError("model has no decision node");
  alternatives_ = model.decision_nodes.front().alternatives;
  parameter_count_ = model.parameters.size();

  // Chance nodes that can influence the utility, directly or through what a
  // decision observes.
  std::set<NodeId, std::less<>> included;
  {
    std::vector<NodeId> stack = model.parents_of(model.utility_node.id);
    for (const auto& d : model.decision_nodes) {
      for (const auto& p : d.parents) stack.push_back(p);
    }
    while (!stack.empty()) {
      NodeId id = std::move(stack.back());
      stack.pop_back();
      if (!included.insert(id).second) continue;
      for (const auto& p : model.parents_of(id)) stack.push_back(p);
    }
  }
  const auto topo = topological_order(model);

  std::vector<NodeId> order;
  std::set<NodeId, std::less<>> placed;
  std::vector<bool> is_decision;
  for (const auto& d : model.decision_nodes) {
    for (const auto& id : topo) {
      const auto& ps = d.parents;
      if (model.find_chance(id) && !placed.contains(id) &&
          std::find(ps.begin(), ps.end(), id) != ps.end()) {
        placed.insert(id);
        order.push_back(id);
        is_decision.push_back(false);
      }
    }
    placed.insert(d.id);
    order.push_back(d.id);
    is_decision.push_back(true);
  }
  for (const auto& id : topo) {
    if (model.find_chance(id) && included.contains(id) && !placed.contains(id)) {
      placed.insert(id);
      order.push_back(id);
      is_decision.push_back(false);
    }
  }

  node_count_ = order.size();
  std::map<NodeId, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < order.size(); ++i) index.emplace(order[i], i);

  auto compile = [&](const std::vector<NodeId>& parents, const ParameterTable& table) {
    Table t;
    const ConfigurationSpace space = [&] {
      std::vector<std::size_t> cards;
      for (const auto& p : parents) cards.push_back(model.states_of(p).size());
      return ConfigurationSpace(cards);
    }();
    std::size_t stride = space.size();
    for (const auto& p : parents) {
      const auto it = index.find(p);
      if (it == index.end()) throw EvaluationError(fmt::format("parent '{}' is not part of the tree", p));
      t.parents.push_back(it->second);
      stride /= model.states_of(p).size();
      t.strides.push_back(stride);
    }
    if (table.size() != space.size()) throw EvaluationError("incomplete table");
    for (const auto& cell : table) {
      const auto slot = cell ? model.parameters.slot(*cell) : std::nullopt;
      if (!slot) throw EvaluationError("table cell does not resolve to a parameter");
      t.slots.push_back(*slot);
    }
    return t;
  };

  std::vector<std::size_t> position(node_count_);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Step step;
    step.node = i;
    step.decision = is_decision[i];
    step.states = model.states_of(order[i]).size();
    position[i] = i;
    steps_.push_back(std::move(step));
    leaves_ *= static_cast<double>(steps_.back().states);
  }
  if (leaves_ > kMaxTreeLeaves) {
    throw EvaluationError(fmt::format("decision tree has {:.0f} leaves; rollback is limited to {:.0f}",
                                      leaves_, kMaxTreeLeaves));
  }

  chance_tables_.resize(node_count_);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (is_decision[i]) continue;
    const ChanceNode* c = model.find_chance(order[i]);
    chance_tables_[i] = compile(c->parents, c->cpt);
    std::size_t ready = position[i];
    for (std::size_t p : chance_tables_[i].parents) ready = std::max(ready, position[p]);
    steps_[ready].factors.push_back(i);
  }
  utility_ = compile(model.utility_node.parents, model.utility_node.table);
  first_decision_step_ = index.at(model.decision_nodes.front().id);
}

double Evaluator::expand(std::size_t pos, double weight, std::vector<std::size_t>& states,
                         std::size_t forced, const Instantiation& inst) const {
  if (weight == 0.0) return 0.0;
  if (pos == steps_.size()) {
    return weight * inst.values[utility_.slots[utility_.config(states)]][0];
  }
  const Step& step = steps_[pos];
  auto branch = [&](std::size_t s) {
    states[step.node] = s;
    double w = weight;
    for (std::size_t f : step.factors) {
      const Table& t = chance_tables_[f];
      w *= inst.values[t.slots[t.config(states)]][static_cast<Eigen::Index>(states[f])];
    }
    return expand(pos + 1, w, states, forced, inst);
  };
  if (step.decision) {
    if (pos == first_decision_step_) return branch(forced);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < step.states; ++s) best = std::max(best, branch(s));
    return best;
  }
  double total = 0.0;
  for (std::size_t s = 0; s < step.states; ++s) total += branch(s);
  return total;
}

Eigen::VectorXd Evaluator::expected_utilities(const Instantiation& inst) const {
  if (inst.values.size() != parameter_count_) {
    throw DomainError(fmt::format("instantiation has {} values for {} parameters", inst.values.size(),
                                  parameter_count_));
  }
  Eigen::VectorXd eu(static_cast<Eigen::Index>(alternatives_.size()));
  std::vector<std::size_t> states(node_count_, 0);
  for (std::size_t a = 0; a < alternatives_.size(); ++a) {
    eu[static_cast<Eigen::Index>(a)] = expand(0, 1.0, states, a, inst);
  }
  return eu;
}

Eigen::VectorXd eu_at(const NetworkModel& model, const Instantiation& inst) {
  return Evaluator(model).expected_utilities(inst);
}

// ---------------------------------------------------------------------------
// Decision rule

namespace {

double tie_band(double best) { return kTieTolerance * std::max(1.0, std::fabs(best)); }

}  // namespace

Recommendation choose(const std::vector<std::string>& alternatives, const Eigen::VectorXd& eu) {
  Recommendation r;
  r.eu = eu;
  const double best = eu.maxCoeff();
  for (Eigen::Index i = 0; i < eu.size(); ++i) {
    if (best - eu[i] <= tie_band(best)) r.tied.push_back(static_cast<std::size_t>(i));
  }
  r.index = r.tied.front();
  r.alternative = alternatives.at(r.index);
  r.tie = r.tied.size() > 1;
  return r;
}

Recommendation recommend(const Evaluator& evaluator, const ParameterRegistry& registry) {
  return choose(evaluator.alternatives(), evaluator.expected_utilities(mean_instantiation(registry)));
}

Recommendation recommend(const NetworkModel& model, const ParameterRegistry& registry) {
  return recommend(Evaluator(model), registry);
}

Recommendation recommend(const NetworkModel& model) { return recommend(model, model.parameters); }

// ---------------------------------------------------------------------------
// Monte Carlo

bool operator==(const EuSummary& a, const EuSummary& b) {
  if (a.samples != b.samples || a.seed != b.seed || a.bins != b.bins) return false;
  if (a.dominance.size() != b.dominance.size() || !(a.dominance.array() == b.dominance.array()).all())
    return false;
  if (a.alternatives.size() != b.alternatives.size()) return false;
  for (std::size_t i = 0; i < a.alternatives.size(); ++i) {
    const auto& x = a.alternatives[i];
    const auto& y = b.alternatives[i];
    if (x.alternative != y.alternative || x.mean != y.mean || x.sd != y.sd || x.histogram != y.histogram)
      return false;
  }
  return true;
}

EuSummary monte_carlo_eu(const Evaluator& evaluator, const ParameterRegistry& registry,
                         const MonteCarloOptions& options) {
  if (options.samples == 0) throw DomainError("Monte Carlo needs at least one sample");
  if (options.bins == 0) throw DomainError("histogram needs at least one bin");

  const std::size_t n = options.samples;
  const auto k = static_cast<Eigen::Index>(evaluator.alternatives().size());
  Eigen::MatrixXd draws(k, static_cast<Eigen::Index>(n));

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream stream = Stream::substream(options.seed, i);
      draws.col(static_cast<Eigen::Index>(i)) =
          evaluator.expected_utilities(draw_instantiation(registry, stream));
    }
  };
  unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      pool.emplace_back(run, begin, std::min(n, begin + chunk));
    }
    for (auto& t : pool) t.join();
  }

  // Serial merge in sample order.
  EuSummary summary;
  summary.samples = n;
  summary.seed = options.seed;
  summary.bins = options.bins;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd tally = Eigen::VectorXd::Zero(k);
  std::vector<std::vector<std::uint64_t>> histograms(static_cast<std::size_t>(k),
                                                     std::vector<std::uint64_t>(options.bins, 0));
  const auto last_bin = static_cast<double>(options.bins - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = draws.col(static_cast<Eigen::Index>(i));
    const double count = static_cast<double>(i + 1);
    for (Eigen::Index a = 0; a < k; ++a) {
      const double delta = x[a] - mean[a];
      mean[a] += delta / count;
      m2[a] += delta * (x[a] - mean[a]);
      const double bin = std::clamp(std::floor(x[a] * static_cast<double>(options.bins)), 0.0, last_bin);
      ++histograms[static_cast<std::size_t>(a)][static_cast<std::size_t>(bin)];
    }
    const double best = x.maxCoeff();
    int ties = 0;
    for (Eigen::Index a = 0; a < k; ++a) ties += (best - x[a] <= tie_band(best)) ? 1 : 0;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (best - x[a] <= tie_band(best)) tally[a] += 1.0 / ties;
    }
  }
  summary.dominance = tally / static_cast<double>(n);
  for (Eigen::Index a = 0; a < k; ++a) {
    AlternativeSummary s;
    s.alternative = evaluator.alternatives()[static_cast<std::size_t>(a)];
    s.mean = mean[a];
    s.sd = n > 1 ? std::sqrt(std::max(0.0, m2[a] / static_cast<double>(n - 1))) : 0.0;
    s.histogram = std::move(histograms[static_cast<std::size_t>(a)]);
    summary.alternatives.push_back(std::move(s));
  }
  return summary;
}

EuSummary monte_carlo_eu(const NetworkModel& model, const ParameterRegistry& registry,
                         const MonteCarloOptions& options) {
  return monte_carlo_eu(Evaluator(model), registry, options);
}

EuSummary monte_carlo_eu(const NetworkModel& model, std::size_t samples, std::uint64_t seed) {
  MonteCarloOptions options;
  options.samples = samples;
  options.seed = seed;
  options.bins = model.mc.bins;
  return monte_carlo_eu(model, model.parameters, options);
}

std::vector<ErrorBar> error_bars(const EuSummary& summary, int k) {
  if (k != 1 && k != 2) throw DomainError(fmt::format("error bars use 1 or 2 standard deviations, not {}", k));
  std::vector<ErrorBar> bars;
  for (const auto& a : summary.alternatives) {
    bars.push_back({std::clamp(a.mean - k * a.sd, 0.0, 1.0), std::clamp(a.mean + k * a.sd, 0.0, 1.0)});
  }
  return bars;
}

}  // namespace bdn
