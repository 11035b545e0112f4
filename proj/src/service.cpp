#include "bdn/service.hpp"

#include <fmt/format.h>

#include "httplib.h"

#include "bdn/payloads.hpp"

namespace bdn {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(payload::dump(body), kJson);
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw SchemaError("request body must be a JSON object");
  return j;
}

std::string string_member(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw SchemaError(fmt::format("{}: expected a string", key));
  return it->get<std::string>();
}

bool flag_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  const std::string v = req.get_param_value(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw SchemaError(fmt::format("{}: expected true or false", key));
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, 200, f(req));
    } catch (const Error& e) {
      send(res, http_status(e), payload::error_record(e.kind(), e.what()));
    } catch (const json::exception& e) {
      send(res, 400, payload::error_record("schema", e.what()));
    } catch (const std::exception& e) {
      send(res, 500, payload::error_record("internal", e.what()));
    }
  };
}

}  // namespace

int http_status(const std::exception& e) {
  if (dynamic_cast<const LookupError*>(&e)) return 404;
  if (dynamic_cast<const StateError*>(&e)) return 409;
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const json::exception*>(&e)) return 400;
  return 500;
}

Service::Service(std::shared_ptr<SessionStore> store, std::shared_ptr<const ModelCatalog> catalog)
    : store_(std::move(store)), catalog_(std::move(catalog)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  auto* store_ptr = store_.get();
  auto* catalog_ptr = catalog_.get();

  s.Get("/models", guarded([catalog_ptr](const httplib::Request&) { return json(catalog_ptr->ids()); }));

  s.Post("/sessions", guarded([store_ptr](const httplib::Request& req) {
    const json body = body_of(req);
    std::optional<std::uint64_t> seed;
    if (const auto it = body.find("seed"); it != body.end()) {
      if (!it->is_number_unsigned()) throw SchemaError("seed: expected a nonnegative integer");
      seed = it->get<std::uint64_t>();
    }
    auto created = store_ptr->create(string_member(body, "model_id"), seed);
    return json{{"session_id", created.session_id}, {"overview", std::move(created.overview)}};
  }));

  s.Get(R"(/sessions/([^/]+)/overview)",
        guarded([store_ptr](const httplib::Request& req) { return store_ptr->overview(req.matches[1].str()); }));

  s.Get(R"(/sessions/([^/]+)/next-question)", guarded([store_ptr](const httplib::Request& req) {
          return store_ptr->next_question(req.matches[1].str());
        }));

  s.Post(R"(/sessions/([^/]+)/answers)", guarded([store_ptr](const httplib::Request& req) {
           const json body = body_of(req);
           return store_ptr->answer(req.matches[1].str(), string_member(body, "question_id"),
                                    string_member(body, "answer"));
         }));

  s.Post(R"(/sessions/([^/]+)/undo)",
         guarded([store_ptr](const httplib::Request& req) { return store_ptr->undo(req.matches[1].str()); }));

  s.Get(R"(/sessions/([^/]+)/explanation)", guarded([store_ptr](const httplib::Request& req) {
          return store_ptr->explanation(req.matches[1].str(), flag_param(req, "generic_summary"));
        }));

  s.Get(R"(/sessions/([^/]+)/nodes/([^/]+))", guarded([store_ptr](const httplib::Request& req) {
          return store_ptr->node(req.matches[1].str(), req.matches[2].str());
        }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(payload::dump(payload::error_record("lookup", fmt::format("no route ({})", res.status))),
                      kJson);
    }
  });
}

Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error(fmt::format("cannot bind {}", host));
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw std::runtime_error(fmt::format("port {} is busy", port));
  return port;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop() { server_->stop(); }

}  // namespace bdn
