#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "bdn/network.hpp"
#include "models.hpp"

using namespace bdn;

namespace {

/// Chain of chance nodes A -> B -> C feeding a utility node, plus a decision.
NetworkModel chain() {
  NetworkModel m;
  m.id = "chain";
  m.decision_nodes.push_back({"D", "decide", {"x", "y"}, {}, {}});
  auto p = [](double v) {
    Eigen::VectorXd r(2);
    r << v, 1.0 - v;
    return RowDistribution::point(r);
  };
  m.parameters.insert("pa", p(0.5));
  m.parameters.insert("pb0", p(0.2));
  m.parameters.insert("pb1", p(0.7));
  m.parameters.insert("pc0", p(0.1));
  m.parameters.insert("pc1", p(0.9));
  m.chance_nodes.push_back({"A", "A", {"t", "f"}, {}, {"pa"}, {}});
  m.chance_nodes.push_back({"B", "B", {"t", "f"}, {"A"}, {"pb0", "pb1"}, {}});
  m.chance_nodes.push_back({"C", "C", {"t", "f"}, {"B"}, {"pc0", "pc1"}, {}});
  m.parameters.insert("u0", UncertainQuantity::point(0.0, Role::utility));
  m.parameters.insert("u1", UncertainQuantity::point(1.0, Role::utility));
  m.utility_node = {"U", "utility", {"D", "C"}, {"u0", "u1", "u1", "u0"}};
  return m;
}

bool precedes_parents(const NetworkModel& m, const std::vector<NodeId>& order) {
  std::map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (const auto& id : order) {
    for (const auto& p : m.parents_of(id)) {
      if (pos.at(p) >= pos.at(id)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("fixtures validate cleanly") {
  for (auto id : testing::kFixtures) {
    CAPTURE(id);
    const auto model = testing::fixture(id);
    const ValidationReport r = validate_network(*model);
    CHECK(r.ok());
    CHECK(r.warnings.empty());
  }
  const auto toy = testing::fixture("toy-angina");
  CHECK(toy->decision_nodes.size() == 1);
  CHECK(toy->chance_nodes.size() == 1);
  CHECK(toy->utility_node.id == "utility");
}

TEST_CASE("two-node cycle is reported") {
  NetworkModel m = chain();
  // A <- B while B <- A
  m.chance_nodes[0].parents = {"B"};
  m.chance_nodes[0].cpt = {"pa", "pa"};
  const ValidationReport r = validate_network(m);
  CHECK(r.has_error("cycle"));
  CHECK(r.summary().find("cycle detected") != std::string::npos);
  CHECK_THROWS_AS(topological_order(m), ValidationError);
}

TEST_CASE("missing table row is an incomplete table") {
  NetworkModel m = chain();
  m.chance_nodes[1].cpt.pop_back();
  ValidationReport r = validate_network(m);
  CHECK(r.has_error("incomplete-table"));
  CHECK(r.summary().find("incomplete table") != std::string::npos);

  m = chain();
  m.chance_nodes[1].cpt[1] = std::nullopt;
  CHECK(validate_network(m).has_error("incomplete-table"));
}

TEST_CASE("structural and parameter findings") {
  NetworkModel m = chain();
  m.parameters.insert("unused", UncertainQuantity::point(0.5, Role::utility));
  CHECK(validate_network(m).has_error("orphan-parameter"));

  m = chain();
  m.chance_nodes[1].cpt[0] = "missing";
  CHECK(validate_network(m).has_error("unknown-parameter"));

  m = chain();
  m.utility_node.table[0] = "pa";
  CHECK(validate_network(m).has_error("utility-kind"));

  m = chain();
  m.decision_nodes[0].alternatives = {"only"};
  CHECK(validate_network(m).has_error("few-states"));

  m = chain();
  m.chance_nodes[2].parents = {"Z"};
  CHECK(validate_network(m).has_error("unknown-node"));

  m = chain();
  Eigen::VectorXd three(3);
  three << 0.2, 0.3, 0.5;
  m.parameters = ParameterRegistry{};
  for (const auto& [n, p] : chain().parameters) m.parameters.insert(n, n == "pa" ? Parameter(RowDistribution::point(three)) : p);
  CHECK(validate_network(m).has_error("row-dimension"));

  m = chain();
  m.chance_nodes[0].cpt = {"u1"};
  CHECK(validate_network(m).has_error("row-kind"));

  m = chain();
  m.parameters = ParameterRegistry{};
  for (const auto& [n, p] : chain().parameters) {
    m.parameters.insert(n, n == "u1" ? Parameter(UncertainQuantity::uniform(0.5, 1.5, Role::utility)) : p);
  }
  CHECK(validate_network(m).has_error("support"));

  m = chain();
  m.questions.push_back({"q", "?", {{"a", 0.5, {}}, {"b", 0.4, {}}}, 0.0});
  CHECK(validate_network(m).has_error("question"));

  m = chain();
  m.cost_scale_lambda = -1.0;
  CHECK(validate_network(m).has_error("lambda"));
}

TEST_CASE("no-forgetting for later decisions") {
  NetworkModel m = chain();
  m.decision_nodes.push_back({"E", "second", {"p", "q"}, {"C"}, {}});
  m.utility_node.parents = {"D", "E", "C"};
  m.utility_node.table.assign(8, std::optional<ParameterRef>("u1"));
  m.utility_node.table[0] = "u0";
  CHECK(validate_network(m).has_error("no-forgetting"));
  m.decision_nodes[1].parents = {"D", "C"};
  CHECK(validate_network(m).ok());
}

TEST_CASE("unreachable chance node is a warning only") {
  NetworkModel m = chain();
  Eigen::VectorXd r(2);
  r << 0.5, 0.5;
  m.parameters.insert("pz", RowDistribution::point(r));
  m.chance_nodes.push_back({"Z", "inert", {"a", "b"}, {}, {"pz"}, {}});
  const ValidationReport report = validate_network(m);
  CHECK(report.ok());
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].code == "unreachable");
}

TEST_CASE("topological order examples") {
  const NetworkModel m = chain();
  const auto order = topological_order(m);
  CHECK(order == std::vector<NodeId>{"A", "B", "C", "D", "U"});

  NetworkModel single;
  single.decision_nodes.push_back({"X", "X", {"a", "b"}, {}, {}});
  single.parameters.insert("u", UncertainQuantity::point(0.5, Role::utility));
  single.utility_node = {"U", "U", {"X"}, {"u", "u"}};
  CHECK(topological_order(single) == std::vector<NodeId>{"X", "U"});

  // C -> E <- F
  NetworkModel fig = chain();
  fig.chance_nodes.clear();
  fig.parameters = ParameterRegistry{};
  Eigen::VectorXd r(2);
  r << 0.5, 0.5;
  fig.parameters.insert("r", RowDistribution::point(r));
  fig.parameters.insert("u", UncertainQuantity::point(0.5, Role::utility));
  fig.chance_nodes.push_back({"F", "F", {"a", "b"}, {}, {"r"}, {}});
  fig.chance_nodes.push_back({"E", "E", {"a", "b"}, {"C", "F"}, {"r", "r", "r", "r"}, {}});
  fig.chance_nodes.push_back({"C", "C", {"a", "b"}, {}, {"r"}, {}});
  fig.utility_node = {"U", "U", {"D", "E"}, {"u", "u", "u", "u"}};
  const auto fo = topological_order(fig);
  const auto pos = [&](const char* id) { return std::find(fo.begin(), fo.end(), id) - fo.begin(); };
  CHECK(pos("C") < pos("E"));
  CHECK(pos("F") < pos("E"));
  CHECK(precedes_parents(fig, fo));
}

TEST_CASE("topological order on 1000 random DAGs") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const NetworkModel m = testing::random_model(rng);
    REQUIRE(validate_network(m).ok());
    const auto order = topological_order(m);
    auto ids = m.node_ids();
    auto sorted = order;
    std::sort(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == ids);
    REQUIRE(precedes_parents(m, order));
    REQUIRE(topological_order(m) == order);
  }
}

TEST_CASE("an injected back edge is always rejected") {
  std::mt19937_64 rng(12);
  int injected = 0;
  while (injected < 1000) {
    NetworkModel m = testing::random_model(rng);
    // Find a chance node with a parent and make the child a parent of that parent.
    for (auto& c : m.chance_nodes) {
      if (c.parents.empty()) continue;
      const NodeId parent = c.parents.front();
      if (auto* ch = const_cast<ChanceNode*>(m.find_chance(parent))) ch->parents.push_back(c.id);
      else if (auto* d = const_cast<DecisionNode*>(m.find_decision(parent))) d->parents.push_back(c.id);
      REQUIRE(validate_network(m).has_error("cycle"));
      REQUIRE_THROWS_AS(topological_order(m), ValidationError);
      ++injected;
      break;
    }
  }
}

TEST_CASE("configuration space is a row-major bijection") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> cards(std::uniform_int_distribution<std::size_t>(0, 4)(rng));
    for (auto& c : cards) c = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const ConfigurationSpace space(cards);
    std::size_t expected = 1;
    for (auto c : cards) expected *= c;
    REQUIRE(space.size() == expected);

    // Odometer with the last parent fastest.
    std::vector<std::size_t> states(cards.size(), 0);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < expected; ++i) {
      REQUIRE(space.index(states) == i);
      REQUIRE(space.states(i) == states);
      seen.insert(space.index(states));
      for (std::size_t k = cards.size(); k-- > 0;) {
        if (++states[k] < cards[k]) break;
        states[k] = 0;
      }
    }
    REQUIRE(seen.size() == expected);
  }
}

TEST_CASE("model lookups") {
  const auto m = testing::fixture("elderly-patient");
  CHECK(m->display_name("surgical_risk") == "surgical risk");
  CHECK(m->kind_of("treatment") == NodeKind::decision);
  CHECK(m->kind_of("utility") == NodeKind::utility);
  CHECK_FALSE(m->kind_of("nope").has_value());
  CHECK(m->parameters_of("age") == std::vector<ParameterRef>{"age_years", "p_under_75"});
  CHECK(descendants_of(*m, "age") == std::vector<NodeId>{"surgical_risk", "utility"});
  CHECK(m->children_of("treatment") == std::vector<NodeId>{"surgical_risk", "utility"});
}
