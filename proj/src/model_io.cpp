#include "bdn/model_io.hpp"

#include <fmt/format.h>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace bdn {

using nlohmann::json;

namespace {

std::string join_path(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

std::string index_path(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

[[noreturn]] void schema_error(const std::string& path, std::string_view what) {
  throw SchemaError(fmt::format("{}: {}", path.empty() ? "<root>" : path, what));
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
}

void expect_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  expect_object(j, path);
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error(join_path(path, key), "unknown field");
    }
  }
}

const json& required(const json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end()) schema_error(join_path(path, key), "missing required field");
  return *it;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

double number_field(const json& j, const std::string& path, std::string_view key) {
  return number_at(required(j, path, key), join_path(path, key));
}

double number_field_or(const json& j, const std::string& path, std::string_view key, double fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number_at(*it, join_path(path, key));
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get<std::string>();
}

std::string string_field(const json& j, const std::string& path, std::string_view key) {
  return string_at(required(j, path, key), join_path(path, key));
}

std::string string_field_or(const json& j, const std::string& path, std::string_view key, std::string fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : string_at(*it, join_path(path, key));
}

std::uint64_t unsigned_at(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) schema_error(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::vector<std::string> strings_field_or_empty(const json& j, const std::string& path, std::string_view key) {
  std::vector<std::string> out;
  const auto it = j.find(key);
  if (it == j.end()) return out;
  const std::string p = join_path(path, key);
  if (!it->is_array()) schema_error(p, "expected an array of strings");
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(string_at((*it)[i], index_path(p, i)));
  return out;
}

Eigen::VectorXd vector_field(const json& j, const std::string& path, std::string_view key) {
  const json& arr = required(j, path, key);
  const std::string p = join_path(path, key);
  if (!arr.is_array()) schema_error(p, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_at(arr[i], index_path(p, i));
  return v;
}

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ParameterTable table_field(const json& j, const std::string& path, std::string_view key) {
  ParameterTable table;
  const json& arr = required(j, path, key);
  const std::string p = join_path(path, key);
  if (!arr.is_array()) schema_error(p, "expected an array of parameter names");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].is_null()) table.emplace_back(std::nullopt);
    else table.emplace_back(string_at(arr[i], index_path(p, i)));
  }
  return table;
}

json table_json(const ParameterTable& table) {
  json arr = json::array();
  for (const auto& cell : table) {
    if (cell) arr.push_back(*cell);
    else arr.push_back(nullptr);
  }
  return arr;
}

template <class F>
auto as_schema(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw SchemaError(fmt::format("{}: {}", path, what));
  }
}

UncertainQuantity quantity_from_json(const json& j, const std::string& path, std::optional<Role> inherited) {
  const std::string kind = string_field(j, path, "kind");
  Role role;
  if (const auto it = j.find("role"); it != j.end()) {
    const std::string text = string_at(*it, join_path(path, "role"));
    const auto parsed = role_from_string(text);
    if (!parsed) schema_error(join_path(path, "role"), fmt::format("unknown role '{}'", text));
    role = *parsed;
  } else if (inherited) {
    role = *inherited;
  } else {
    schema_error(join_path(path, "role"), "missing required field");
  }
  return as_schema(path, [&]() -> UncertainQuantity {
    if (kind == "point") {
      expect_keys(j, path, {"kind", "role", "name", "value"});
      return {PointMass{number_field(j, path, "value")}, role};
    }
    if (kind == "uniform") {
      expect_keys(j, path, {"kind", "role", "name", "a", "b"});
      return {Uniform{number_field(j, path, "a"), number_field(j, path, "b")}, role};
    }
    if (kind == "beta") {
      expect_keys(j, path, {"kind", "role", "name", "alpha", "beta", "lo", "hi"});
      return {Beta{number_field(j, path, "alpha"), number_field(j, path, "beta"),
                   number_field_or(j, path, "lo", 0.0), number_field_or(j, path, "hi", 1.0)},
              role};
    }
    if (kind == "truncated-normal") {
      expect_keys(j, path, {"kind", "role", "name", "mu", "sigma", "lo", "hi"});
      return {TruncatedNormal{number_field(j, path, "mu"), number_field(j, path, "sigma"),
                              number_field(j, path, "lo"), number_field(j, path, "hi")},
              role};
    }
    if (kind == "histogram") {
      expect_keys(j, path, {"kind", "role", "name", "edges", "masses"});
      return {Histogram{vector_field(j, path, "edges"), vector_field(j, path, "masses")}, role};
    }
    schema_error(join_path(path, "kind"), fmt::format("unknown distribution kind '{}'", kind));
  });
}

json quantity_to_json(const UncertainQuantity& q) {
  json j;
  j["kind"] = std::string(q.kind_name());
  j["role"] = std::string(to_string(q.role()));
  if (const auto* p = std::get_if<PointMass>(&q.kind())) {
    j["value"] = p->value;
  } else if (const auto* u = std::get_if<Uniform>(&q.kind())) {
    j["a"] = u->lo;
    j["b"] = u->hi;
  } else if (const auto* b = std::get_if<Beta>(&q.kind())) {
    j["alpha"] = b->alpha;
    j["beta"] = b->beta;
    j["lo"] = b->lo;
    j["hi"] = b->hi;
  } else if (const auto* t = std::get_if<TruncatedNormal>(&q.kind())) {
    j["mu"] = t->mu;
    j["sigma"] = t->sigma;
    j["lo"] = t->lo;
    j["hi"] = t->hi;
  } else {
    const auto& h = std::get<Histogram>(q.kind());
    j["edges"] = vector_json(h.edges);
    j["masses"] = vector_json(h.masses);
  }
  return j;
}

Parameter rescale_utility(const Parameter& p, double scale, double shift) {
  if (const auto* q = std::get_if<UncertainQuantity>(&p); q && q->role() == Role::utility) {
    return affine(*q, scale, shift);
  }
  return p;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

Parameter parameter_from_json(const json& j, const std::string& path, std::optional<Role> inherited_role) {
  expect_object(j, path);
  if (!j.contains("row")) return quantity_from_json(j, path, inherited_role);
  const std::string row = string_field(j, path, "row");
  return as_schema(path, [&]() -> Parameter {
    if (row == "binary") {
      expect_keys(j, path, {"row", "name", "p"});
      const std::string p = join_path(path, "p");
      const json& literal = required(j, path, "p");
      expect_object(literal, p);
      return RowDistribution::binary(quantity_from_json(literal, p, Role::probability));
    }
    if (row == "dirichlet") {
      expect_keys(j, path, {"row", "name", "alpha"});
      return RowDistribution::dirichlet(vector_field(j, path, "alpha"));
    }
    if (row == "point") {
      expect_keys(j, path, {"row", "name", "probabilities"});
      return RowDistribution::point(vector_field(j, path, "probabilities"));
    }
    schema_error(join_path(path, "row"), fmt::format("unknown row kind '{}'", row));
  });
}

json parameter_to_json(const Parameter& p) {
  if (const auto* q = std::get_if<UncertainQuantity>(&p)) return quantity_to_json(*q);
  const auto& r = std::get<RowDistribution>(p);
  json j;
  j["row"] = std::string(r.kind_name());
  if (const auto* b = std::get_if<BinaryRow>(&r.kind())) j["p"] = quantity_to_json(b->p);
  else if (const auto* d = std::get_if<DirichletRow>(&r.kind())) j["alpha"] = vector_json(d->alpha);
  else j["probabilities"] = vector_json(std::get<PointRow>(r.kind()).probabilities);
  return j;
}

NetworkModel load_model_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = line_and_column(text, offset);
    throw ParseError(fmt::format("parse error at byte {} (line {}, column {}): {}", offset, line, column,
                                 e.what()),
                     offset);
  }

  expect_keys(doc, "", {"format_version", "id", "title", "utility_scale", "cost_scale_lambda", "mc",
                        "thresholds", "decisions", "chance", "utility", "parameters", "questions",
                        "templates"});
  const auto version = unsigned_at(required(doc, "", "format_version"), "format_version");
  if (version != kModelFormatVersion) {
    schema_error("format_version", fmt::format("unsupported version {}", version));
  }

  NetworkModel model;
  model.id = string_field(doc, "", "id");
  model.title = string_field_or(doc, "", "title", "");
  model.cost_scale_lambda = number_field_or(doc, "", "cost_scale_lambda", 1.0);

  if (const auto it = doc.find("mc"); it != doc.end()) {
    expect_keys(*it, "mc", {"samples", "seed", "bins"});
    if (it->contains("samples")) model.mc.samples = unsigned_at((*it)["samples"], "mc.samples");
    if (it->contains("seed")) model.mc.seed = unsigned_at((*it)["seed"], "mc.seed");
    if (it->contains("bins")) model.mc.bins = unsigned_at((*it)["bins"], "mc.bins");
  }
  if (const auto it = doc.find("thresholds"); it != doc.end()) {
    expect_keys(*it, "thresholds", {"z", "margin", "prune", "grid", "coherence"});
    auto& t = model.thresholds;
    t.z = number_field_or(*it, "thresholds", "z", t.z);
    t.margin = number_field_or(*it, "thresholds", "margin", t.margin);
    t.prune = number_field_or(*it, "thresholds", "prune", t.prune);
    t.coherence = number_field_or(*it, "thresholds", "coherence", t.coherence);
    if (it->contains("grid")) t.grid = static_cast<int>(unsigned_at((*it)["grid"], "thresholds.grid"));
  }

  double scale = 1.0;
  double shift = 0.0;
  if (const auto it = doc.find("utility_scale"); it != doc.end()) {
    expect_keys(*it, "utility_scale", {"min", "max"});
    const double lo = number_field(*it, "utility_scale", "min");
    const double hi = number_field(*it, "utility_scale", "max");
    if (!(lo < hi)) schema_error("utility_scale", "min must be below max");
    scale = 1.0 / (hi - lo);
    shift = -lo / (hi - lo);
  }

  const json& decisions = required(doc, "", "decisions");
  if (!decisions.is_array()) schema_error("decisions", "expected an array");
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const std::string p = index_path("decisions", i);
    const json& d = decisions[i];
    expect_keys(d, p, {"id", "name", "alternatives", "parents", "covariates"});
    model.decision_nodes.push_back({string_field(d, p, "id"), string_field_or(d, p, "name", ""),
                                    strings_field_or_empty(d, p, "alternatives"),
                                    strings_field_or_empty(d, p, "parents"),
                                    strings_field_or_empty(d, p, "covariates")});
  }

  if (const auto it = doc.find("chance"); it != doc.end()) {
    if (!it->is_array()) schema_error("chance", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = index_path("chance", i);
      const json& c = (*it)[i];
      expect_keys(c, p, {"id", "name", "outcomes", "parents", "cpt", "covariates"});
      model.chance_nodes.push_back({string_field(c, p, "id"), string_field_or(c, p, "name", ""),
                                    strings_field_or_empty(c, p, "outcomes"),
                                    strings_field_or_empty(c, p, "parents"), table_field(c, p, "cpt"),
                                    strings_field_or_empty(c, p, "covariates")});
    }
  }

  {
    const json& u = required(doc, "", "utility");
    expect_keys(u, "utility", {"id", "name", "parents", "table"});
    model.utility_node = {string_field(u, "utility", "id"), string_field_or(u, "utility", "name", ""),
                          strings_field_or_empty(u, "utility", "parents"), table_field(u, "utility", "table")};
  }

  {
    const json& params = required(doc, "", "parameters");
    expect_object(params, "parameters");
    for (const auto& [name, literal] : params.items()) {
      const std::string p = join_path("parameters", name);
      Parameter parameter = rescale_utility(parameter_from_json(literal, p), scale, shift);
      model.parameters.insert(name, std::move(parameter));
      if (literal.contains("name")) model.parameter_names[name] = string_field(literal, p, "name");
    }
  }

  if (const auto it = doc.find("questions"); it != doc.end()) {
    if (!it->is_array()) schema_error("questions", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = index_path("questions", i);
      const json& q = (*it)[i];
      expect_keys(q, p, {"id", "prompt", "cost", "answers"});
      AssessmentQuestion question{string_field(q, p, "id"), string_field_or(q, p, "prompt", ""), {},
                                  number_field_or(q, p, "cost", 0.0)};
      const json& answers = required(q, p, "answers");
      const std::string ap = join_path(p, "answers");
      if (!answers.is_array()) schema_error(ap, "expected an array");
      for (std::size_t k = 0; k < answers.size(); ++k) {
        const std::string akp = index_path(ap, k);
        const json& a = answers[k];
        expect_keys(a, akp, {"label", "weight", "refine"});
        Answer answer{string_field(a, akp, "label"), number_field(a, akp, "weight"), {}};
        if (const auto r = a.find("refine"); r != a.end()) {
          const std::string rp = join_path(akp, "refine");
          expect_object(*r, rp);
          for (const auto& [name, literal] : r->items()) {
            std::optional<Role> inherited;
            if (const auto* original = model.parameters.find(name)) {
              if (const auto* oq = std::get_if<UncertainQuantity>(original)) inherited = oq->role();
            }
            answer.refinement.emplace(
                name, rescale_utility(parameter_from_json(literal, join_path(rp, name), inherited), scale, shift));
          }
        }
        question.answers.push_back(std::move(answer));
      }
      model.questions.push_back(std::move(question));
    }
  }

  if (const auto it = doc.find("templates"); it != doc.end()) {
    expect_object(*it, "templates");
    for (const auto& [key, value] : it->items()) {
      model.templates[key] = string_at(value, join_path("templates", key));
    }
  }

  auto report = validate_network(model);
  if (!report.ok()) throw ValidationError(std::move(report));
  return model;
}

NetworkModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError(fmt::format("cannot read model file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_model_text(buffer.str());
}

json emit_model(const NetworkModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["id"] = model.id;
  doc["title"] = model.title;
  doc["cost_scale_lambda"] = model.cost_scale_lambda;
  doc["mc"] = {{"samples", model.mc.samples}, {"seed", model.mc.seed}, {"bins", model.mc.bins}};
  doc["thresholds"] = {{"z", model.thresholds.z},
                       {"margin", model.thresholds.margin},
                       {"prune", model.thresholds.prune},
                       {"grid", model.thresholds.grid},
                       {"coherence", model.thresholds.coherence}};
  doc["decisions"] = json::array();
  for (const auto& d : model.decision_nodes) {
    doc["decisions"].push_back({{"id", d.id},
                                {"name", d.display_name},
                                {"alternatives", d.alternatives},
                                {"parents", d.parents},
                                {"covariates", d.covariates}});
  }
  doc["chance"] = json::array();
  for (const auto& c : model.chance_nodes) {
    doc["chance"].push_back({{"id", c.id},
                             {"name", c.display_name},
                             {"outcomes", c.outcomes},
                             {"parents", c.parents},
                             {"cpt", table_json(c.cpt)},
                             {"covariates", c.covariates}});
  }
  const auto& u = model.utility_node;
  doc["utility"] = {{"id", u.id}, {"name", u.display_name}, {"parents", u.parents}, {"table", table_json(u.table)}};
  doc["parameters"] = json::object();
  for (const auto& [name, p] : model.parameters) {
    json literal = parameter_to_json(p);
    if (const auto it = model.parameter_names.find(name); it != model.parameter_names.end()) {
      literal["name"] = it->second;
    }
    doc["parameters"][name] = std::move(literal);
  }
  doc["questions"] = json::array();
  for (const auto& q : model.questions) {
    json answers = json::array();
    for (const auto& a : q.answers) {
      json refine = json::object();
      for (const auto& [name, p] : a.refinement) refine[name] = parameter_to_json(p);
      answers.push_back({{"label", a.label}, {"weight", a.weight}, {"refine", std::move(refine)}});
    }
    doc["questions"].push_back({{"id", q.id}, {"prompt", q.prompt}, {"cost", q.cost}, {"answers", std::move(answers)}});
  }
  doc["templates"] = json::object();
  for (const auto& [k, v] : model.templates) doc["templates"][k] = v;
  return doc;
}

std::string emit_model_text(const NetworkModel& model) { return emit_model(model).dump(2) + "\n"; }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string content_hash(const NetworkModel& model) { return fnv1a_hex(emit_model_text(model)); }

}  // namespace bdn
