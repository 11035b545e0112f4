// bdn: command-line front end for validating, evaluating and consulting
// decision network models, and for running the session service.

#include <csignal>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "bdn/assessment.hpp"
#include "bdn/insight.hpp"
#include "bdn/model_io.hpp"
#include "bdn/payloads.hpp"
#include "bdn/service.hpp"
#include "bdn/session.hpp"

namespace {

using nlohmann::json;
using namespace bdn;

struct Options {
  std::string format = "text";
  std::string model_path;
  std::string script;
  std::size_t samples = 0;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool generic_summary = false;
  std::string models_dir = "models";
  std::string data_dir = "data";
  std::optional<int> port;
};

bool json_output(const Options& o) { return o.format == "json"; }

void print_json(const json& j) { std::cout << payload::dump(j) << "\n"; }

std::shared_ptr<const NetworkModel> open_model(const Options& o) {
  return std::make_shared<const NetworkModel>(load_model(o.model_path));
}

ConsultationState initial_state(const Options& o) {
  ConsultationState state(open_model(o));
  if (o.seed) state = state.with_seed(*o.seed);
  return state;
}

/// One scripted step: an answer "question answer" or "undo".
struct ScriptStep {
  bool undo = false;
  std::string question;
  std::string answer;
};

std::vector<ScriptStep> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError(fmt::format("cannot read script '{}'", path));
  std::vector<ScriptStep> steps;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;
    if (tokens.size() == 1 && tokens[0] == "undo") {
      steps.push_back({true, {}, {}});
    } else if (tokens.size() == 2) {
      steps.push_back({false, tokens[0], tokens[1]});
    } else {
      throw SchemaError(fmt::format("{}:{}: expected 'question answer' or 'undo'", path, number));
    }
  }
  return steps;
}

ConsultationState apply_step(const ConsultationState& state, const ScriptStep& step) {
  return step.undo ? undo(state) : apply_answer(state, step.question, step.answer);
}

ConsultationState scripted_state(const Options& o) {
  ConsultationState state = initial_state(o);
  if (!o.script.empty()) {
    for (const auto& step : read_script(o.script)) state = apply_step(state, step);
  }
  return state;
}

std::string eu_line(const std::vector<std::string>& alternatives, const Eigen::VectorXd& eu) {
  std::string out;
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{} {:.3f}", alternatives[i], eu[static_cast<Eigen::Index>(i)]);
  }
  return out;
}

std::string ranking_table(const QuestionRanking& ranking) {
  std::string out = fmt::format("{:<20} {:>10} {:>10} {:>10}\n", "question", "evoi", "cost", "net");
  for (const auto& q : ranking.entries) {
    out += fmt::format("{:<20} {:>10.6f} {:>10.6f} {:>10.6f}{}\n", q.id, q.evoi, q.cost, q.net_value,
                       q.coherence_warning ? "  (incoherent subgroups)" : "");
  }
  out += fmt::format("stop: {}\n", ranking.stop ? "yes" : "no");
  return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
  NetworkModel model;
  try {
    model = load_model(o.model_path);
  } catch (const ValidationError& e) {
    if (json_output(o)) {
      json errors = json::array();
      for (const auto& f : e.report().errors) errors.push_back({{"code", f.code}, {"message", f.message}});
      json warnings = json::array();
      for (const auto& f : e.report().warnings) warnings.push_back({{"code", f.code}, {"message", f.message}});
      print_json({{"ok", false}, {"errors", errors}, {"warnings", warnings}});
    } else {
      std::cout << e.report().summary();
    }
    return 1;
  }
  const ValidationReport report = validate_network(model);
  if (json_output(o)) {
    json warnings = json::array();
    for (const auto& f : report.warnings) warnings.push_back({{"code", f.code}, {"message", f.message}});
    print_json({{"ok", true}, {"errors", json::array()}, {"warnings", warnings}, {"hash", content_hash(model)}});
  } else {
    std::cout << report.summary();
    std::cout << fmt::format("ok: {} ({} decision, {} chance, {} parameters, {} questions)\n", model.id,
                             model.decision_nodes.size(), model.chance_nodes.size(), model.parameters.size(),
                             model.questions.size());
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  const ConsultationState state = scripted_state(o);
  const Recommendation rec = recommend(state.evaluator(), state.registry());
  if (json_output(o)) {
    print_json(payload::recommendation(rec));
  } else {
    std::cout << eu_line(state.evaluator().alternatives(), rec.eu) << "\n";
    std::cout << "recommended: " << rec.alternative << (rec.tie ? " (tie)" : "") << "\n";
  }
  return 0;
}

int cmd_mc(const Options& o) {
  const ConsultationState state = scripted_state(o);
  MonteCarloOptions mc;
  mc.samples = o.samples ? o.samples : state.model().mc.samples;
  mc.seed = o.seed ? *o.seed : state.model().mc.seed;
  mc.bins = state.model().mc.bins;
  mc.workers = o.threads;
  const EuSummary summary = monte_carlo_eu(state.evaluator(), state.registry(), mc);
  print_json({{"eu_summary", payload::eu_summary(summary)}, {"error_bars", payload::error_bars(summary)}});
  return 0;
}

int cmd_evoi(const Options& o) {
  const QuestionRanking ranking = rank_questions(scripted_state(o));
  if (json_output(o)) print_json(payload::ranking(ranking));
  else std::cout << ranking_table(ranking);
  return 0;
}

int cmd_consult(const Options& o) {
  ConsultationState state = initial_state(o);
  const auto steps = o.script.empty() ? std::vector<ScriptStep>{} : read_script(o.script);

  json trace = json::array();
  std::string text;
  auto record = [&](std::size_t index) {
    const Recommendation rec = recommend(state.evaluator(), state.registry());
    const QuestionRanking ranking = rank_questions(state);
    text += fmt::format("[{}] recommend {} ({})\n", index, rec.alternative,
                        eu_line(state.evaluator().alternatives(), rec.eu));
    for (const auto& q : ranking.entries) {
      text += fmt::format("    rank {} evoi={:.6f} cost={:.6f} net={:.6f}\n", q.id, q.evoi, q.cost, q.net_value);
    }
    text += ranking.stop ? "    stop\n" : fmt::format("    next {}\n", ranking.entries.front().id);
    trace.push_back({{"step", index},
                     {"applied", payload::applied_answers(state.applied())},
                     {"recommendation", payload::recommendation(rec)},
                     {"ranking", payload::ranking(ranking)}});
  };

  record(0);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    state = apply_step(state, steps[i]);
    text += steps[i].undo ? "undo\n" : fmt::format("answer {} {}\n", steps[i].question, steps[i].answer);
    record(i + 1);
  }
  const std::string explanation = render_explanation(state, o.generic_summary);
  if (json_output(o)) {
    print_json({{"trace", trace}, {"explanation", explanation}});
  } else {
    std::cout << text << "\n" << explanation;
  }
  return 0;
}

int cmd_explain(const Options& o) {
  const ConsultationState state = scripted_state(o);
  if (json_output(o)) print_json(payload::explanation(state, o.generic_summary));
  else std::cout << render_explanation(state, o.generic_summary);
  return 0;
}

Service* running_service = nullptr;

void handle_signal(int) {
  if (running_service != nullptr) running_service->stop();
}

int cmd_serve(const Options& o) {
  int port = 8080;
  if (const char* env = std::getenv("BDN_PORT"); env != nullptr && *env != '\0') port = std::stoi(env);
  if (o.port) port = *o.port;

  auto catalog = std::make_shared<const ModelCatalog>(ModelCatalog::load_directory(o.models_dir));
  auto store = std::make_shared<SessionStore>(catalog, o.data_dir);
  for (const auto& s : store->skipped()) std::cerr << "skipped session log " << s << "\n";

  Service service(store, catalog);
  const int bound = service.bind("127.0.0.1", port);
  running_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on port " << bound << std::endl;
  service.run();
  running_service = nullptr;
  return 0;
}

void report_error(const Options& o, std::string_view kind, const std::string& message) {
  if (json_output(o)) print_json(payload::error_record(kind, message));
  else std::cerr << "error (" << kind << "): " << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision network consultation tool"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  auto model_arg = [&](CLI::App* sub) {
    sub->add_option("model", o.model_path, "Model file")->required()->check(CLI::ExistingFile);
  };
  auto script_opt = [&](CLI::App* sub) {
    sub->add_option("--script", o.script, "Answer script: 'question answer' per line, 'undo', # comments");
  };
  auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Monte Carlo seed"); };

  auto* validate = app.add_subcommand("validate", "Check a model file");
  model_arg(validate);

  auto* evaluate = app.add_subcommand("evaluate", "Recommendation and expected utilities at the means");
  model_arg(evaluate);
  script_opt(evaluate);

  auto* mc = app.add_subcommand("mc", "Monte Carlo expected-utility summary");
  model_arg(mc);
  script_opt(mc);
  mc->add_option("--n", o.samples, "Samples")->check(CLI::PositiveNumber);
  seed_opt(mc);
  mc->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* evoi_cmd = app.add_subcommand("evoi", "Question ranking by net value of information");
  model_arg(evoi_cmd);
  script_opt(evoi_cmd);

  auto* consult = app.add_subcommand("consult", "Scripted consultation trace");
  model_arg(consult);
  script_opt(consult);
  seed_opt(consult);
  consult->add_flag("--generic-summary", o.generic_summary, "Append a summary of the generic model");

  auto* explain = app.add_subcommand("explain", "Explanation text");
  model_arg(explain);
  script_opt(explain);
  seed_opt(explain);
  explain->add_flag("--generic-summary", o.generic_summary, "Append a summary of the generic model");

  auto* serve = app.add_subcommand("serve", "Run the session service");
  serve->add_option("--models", o.models_dir, "Model directory");
  serve->add_option("--data", o.data_dir, "Session log directory");
  serve->add_option("--port", o.port, "Port (0 = any free port); defaults to $BDN_PORT or 8080");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (json_output(o)) {
      print_json(payload::error_record("usage", e.what()));
      return e.get_exit_code() == 0 ? 0 : 2;
    }
    return app.exit(e);
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*mc) return cmd_mc(o);
    if (*evoi_cmd) return cmd_evoi(o);
    if (*consult) return cmd_consult(o);
    if (*explain) return cmd_explain(o);
    if (*serve) return cmd_serve(o);
  } catch (const ValidationError& e) {
    report_error(o, e.kind(), e.report().summary());
    return 1;
  } catch (const Error& e) {
    report_error(o, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(o, "internal", e.what());
    return 1;
  }
  return 1;
}
