#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "bdn/model_io.hpp"
#include "bdn/payloads.hpp"
#include "bdn/service.hpp"
#include "models.hpp"

#include "httplib.h"

using namespace bdn;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("bdn-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

std::shared_ptr<const ModelCatalog> fixture_catalog() {
  return std::make_shared<const ModelCatalog>(ModelCatalog::load_directory(BDN_FIXTURE_DIR));
}

/// A service on a free port, served from a background thread.
struct Running {
  std::shared_ptr<SessionStore> store;
  Service service;
  int port;
  std::thread thread;
  httplib::Client client;

  Running(std::shared_ptr<const ModelCatalog> catalog, const std::filesystem::path& data)
      : store(std::make_shared<SessionStore>(catalog, data)),
        service(store, catalog),
        port(service.bind("127.0.0.1", 0)),
        thread([this] { service.run(); }),
        client("127.0.0.1", port) {}
  ~Running() {
    service.stop();
    thread.join();
  }
};

struct Reply {
  int status;
  json body;
};

Reply get(httplib::Client& c, const std::string& path) {
  auto r = c.Get(path);
  REQUIRE(r);
  return {r->status, json::parse(r->body)};
}

Reply post(httplib::Client& c, const std::string& path, const json& body) {
  auto r = c.Post(path, body.dump(), "application/json");
  REQUIRE(r);
  return {r->status, json::parse(r->body)};
}

std::string raw_get(httplib::Client& c, const std::string& path) {
  auto r = c.Get(path);
  REQUIRE(r);
  return r->body;
}

std::string run_cli(const std::string& args) {
  const std::string command = std::string(BDN_CLI_PATH) + " " + args;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buffer[4096];
  std::size_t n;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) out.append(buffer, n);
  pclose(pipe);
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
  TempDir dir;
  Running s(fixture_catalog(), dir.path);

  const Reply models = get(s.client, "/models");
  CHECK(models.status == 200);
  CHECK(models.body == json{"elderly-patient", "toy-angina", "toy-angina-voi", "two-stage"});

  const Reply created = post(s.client, "/sessions", {{"model_id", "toy-angina-voi"}, {"seed", 42}});
  REQUIRE(created.status == 200);
  const std::string id = created.body["session_id"];
  CHECK(id == "s-1");
  const json& ov = created.body["overview"];
  CHECK(ov["model_id"] == "toy-angina-voi");
  CHECK(ov["seed"] == 42);
  CHECK(ov["recommendation"]["alternative"] == "surgery");
  CHECK(ov["stop"] == false);
  CHECK(ov["applied"].empty());
  CHECK(get(s.client, "/sessions/" + id + "/overview").body == ov);

  const Reply next = get(s.client, "/sessions/" + id + "/next-question");
  CHECK(next.body["stop"] == false);
  CHECK(next.body["question"]["id"] == "activity");
  CHECK(next.body["ranking"]["entries"][0]["evoi"].get<double>() == doctest::Approx(0.025).epsilon(1e-12));

  const Reply answered = post(s.client, "/sessions/" + id + "/answers", {{"question_id", "activity"}, {"answer", "sedentary"}});
  REQUIRE(answered.status == 200);
  CHECK(answered.body["recommendation"]["alternative"] == "medication");
  CHECK(answered.body["applied"].size() == 1);
  CHECK(answered.body["stop"] == true);
  CHECK_FALSE(get(s.client, "/sessions/" + id + "/next-question").body.contains("question"));

  const Reply explained = get(s.client, "/sessions/" + id + "/explanation?generic_summary=false");
  CHECK(explained.body["text"].get<std::string>().rfind("Recommended: medication", 0) == 0);
  CHECK(explained.body["items"][0]["kind"] == "decision-critical");
  const std::string generic = get(s.client, "/sessions/" + id + "/explanation?generic_summary=true").body["text"];
  CHECK(generic.find("Generic model summary:") != std::string::npos);

  const Reply node = get(s.client, "/sessions/" + id + "/nodes/survival");
  CHECK(node.status == 200);
  CHECK(node.body["kind"] == "chance");
  CHECK(node.body["parents"] == json{"treatment"});
  CHECK(node.body["states"] == json{"die", "survive"});

  const Reply undone = post(s.client, "/sessions/" + id + "/undo", json::object());
  CHECK(undone.status == 200);
  CHECK(undone.body == ov);
}

TEST_CASE("error records and status codes") {
  TempDir dir;
  Running s(fixture_catalog(), dir.path);
  const std::string id = post(s.client, "/sessions", {{"model_id", "toy-angina-voi"}}).body["session_id"];

  auto expect = [](const Reply& r, int status, const char* kind) {
    CHECK(r.status == status);
    CHECK(r.body["error"]["kind"] == kind);
    CHECK(r.body["error"]["message"].is_string());
  };
  expect(get(s.client, "/sessions/nope/overview"), 404, "lookup");
  expect(post(s.client, "/sessions", {{"model_id", "nope"}}), 404, "lookup");
  expect(get(s.client, "/sessions/" + id + "/nodes/nope"), 404, "lookup");
  expect(post(s.client, "/sessions/" + id + "/answers", {{"question_id", "nope"}, {"answer", "x"}}), 404, "lookup");
  expect(post(s.client, "/sessions/" + id + "/answers", {{"question_id", "activity"}, {"answer", "x"}}), 404,
         "lookup");
  expect(post(s.client, "/sessions/" + id + "/undo", json::object()), 409, "state");
  post(s.client, "/sessions/" + id + "/answers", {{"question_id", "activity"}, {"answer", "active"}});
  expect(post(s.client, "/sessions/" + id + "/answers", {{"question_id", "activity"}, {"answer", "sedentary"}}), 409,
         "state");
  expect(post(s.client, "/sessions", {{"seed", 3}}), 400, "schema");
  expect(post(s.client, "/sessions", {{"model_id", "toy-angina"}, {"seed", -3}}), 400, "schema");

  auto r = s.client.Post("/sessions", "{not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(json::parse(r->body)["error"]["kind"].is_string());

  expect(get(s.client, "/nowhere"), 404, "lookup");

  CHECK(http_status(LookupError("x")) == 404);
  CHECK(http_status(StateError("x")) == 409);
  CHECK(http_status(SchemaError("x")) == 400);
  CHECK(http_status(std::runtime_error("x")) == 500);
}

TEST_CASE("sessions are isolated") {
  TempDir dir;
  Running s(fixture_catalog(), dir.path);
  const std::string a = post(s.client, "/sessions", {{"model_id", "toy-angina-voi"}, {"seed", 1}}).body["session_id"];
  const std::string b = post(s.client, "/sessions", {{"model_id", "toy-angina-voi"}, {"seed", 1}}).body["session_id"];
  CHECK(a != b);
  const std::string before = raw_get(s.client, "/sessions/" + b + "/overview");
  post(s.client, "/sessions/" + a + "/answers", {{"question_id", "activity"}, {"answer", "sedentary"}});
  CHECK(raw_get(s.client, "/sessions/" + b + "/overview") == before);
  CHECK(raw_get(s.client, "/sessions/" + a + "/overview") != before);
}

TEST_CASE("default seeds differ between sessions and follow the counter") {
  TempDir dir;
  const auto catalog = fixture_catalog();
  SessionStore store(catalog, dir.path);
  const auto a = store.create("toy-angina");
  const auto b = store.create("toy-angina");
  CHECK(a.overview["seed"] == session_seed(42, 1));
  CHECK(b.overview["seed"] == session_seed(42, 2));
  CHECK(a.overview["seed"] != b.overview["seed"]);
}

TEST_CASE("restart replays logs to identical overviews") {
  TempDir dir;
  const auto catalog = fixture_catalog();
  std::string id;
  std::string before;
  {
    Running s(catalog, dir.path);
    id = post(s.client, "/sessions", {{"model_id", "elderly-patient"}, {"seed", 11}}).body["session_id"];
    post(s.client, "/sessions/" + id + "/answers", {{"question_id", "age"}, {"answer", "75_or_older"}});
    post(s.client, "/sessions/" + id + "/answers", {{"question_id", "sex"}, {"answer", "male"}});
    post(s.client, "/sessions/" + id + "/undo", json::object());
    post(s.client, "/sessions/" + id + "/answers", {{"question_id", "activity"}, {"answer", "active"}});
    before = raw_get(s.client, "/sessions/" + id + "/overview");
  }
  {
    Running s(catalog, dir.path);
    CHECK(raw_get(s.client, "/sessions/" + id + "/overview") == before);
    // The id counter continues after a restart.
    CHECK(post(s.client, "/sessions", {{"model_id", "toy-angina"}}).body["session_id"] == "s-2");
  }
}

TEST_CASE("a torn trailing line is ignored on replay") {
  TempDir dir;
  const auto catalog = fixture_catalog();
  SessionStore first(catalog, dir.path);
  const auto created = first.create("toy-angina-voi", 5);
  const json overview = first.overview(created.session_id);
  {
    std::ofstream log(dir.path / (created.session_id + ".jsonl"), std::ios::app);
    log << R"({"event":"answer","question_id":"activ)";
  }
  SessionStore second(catalog, dir.path);
  CHECK(second.overview(created.session_id) == overview);
}

TEST_CASE("logs for a changed model are skipped") {
  TempDir dir;
  auto catalog = std::make_shared<ModelCatalog>();
  catalog->add("toy-angina", *testing::fixture("toy-angina"));
  {
    SessionStore store(catalog, dir.path);
    store.create("toy-angina");
  }
  NetworkModel changed = *testing::fixture("toy-angina");
  changed.thresholds.z = 3.0;
  auto other = std::make_shared<ModelCatalog>();
  other->add("toy-angina", changed);
  SessionStore store(other, dir.path);
  CHECK(store.session_ids().empty());
  CHECK(store.skipped().size() == 1);
  CHECK_THROWS_AS(store.overview("s-1"), LookupError);
}

TEST_CASE("HTTP and CLI agree") {
  TempDir dir;
  Running s(fixture_catalog(), dir.path);
  const std::string model = std::string(BDN_FIXTURE_DIR) + "/elderly-patient.json";
  const std::string id = post(s.client, "/sessions", {{"model_id", "elderly-patient"}, {"seed", 7}}).body["session_id"];

  const json cli_ranking = json::parse(run_cli("--format json evoi " + model));
  CHECK(get(s.client, "/sessions/" + id + "/next-question").body["ranking"] == cli_ranking);

  const json cli_mc = json::parse(run_cli("--format json mc " + model + " --seed 7"));
  const json ov = get(s.client, "/sessions/" + id + "/overview").body;
  CHECK(ov["eu_summary"] == cli_mc["eu_summary"]);
  CHECK(ov["error_bars"] == cli_mc["error_bars"]);

  post(s.client, "/sessions/" + id + "/answers", {{"question_id", "age"}, {"answer", "75_or_older"}});
  const std::string explanation = get(s.client, "/sessions/" + id + "/explanation").body["text"];
  const std::string cli_text = run_cli("explain " + model + " --seed 7 --script " BDN_GOLDEN_DIR "/elderly-patient.script");
  CHECK(cli_text == explanation);
}

TEST_CASE("consult traces match the frozen goldens") {
  for (const char* id : {"toy-angina-voi", "elderly-patient"}) {
    CAPTURE(id);
    const std::string golden = std::string(BDN_GOLDEN_DIR) + "/" + id;
    const std::string out = run_cli("consult " + std::string(BDN_FIXTURE_DIR) + "/" + id + ".json --script " + golden +
                                    ".script");
    CHECK(out == read_file(golden + ".trace"));
  }
}

TEST_CASE("CLI reports errors with exit codes") {
  CHECK(std::system((std::string(BDN_CLI_PATH) + " evaluate /nonexistent.json 2>/dev/null").c_str()) != 0);
  const json err = json::parse(run_cli("--format json evaluate /nonexistent.json"));
  CHECK(err["error"]["kind"].is_string());
}
