#pragma once

// HTTP front end for the session store.
//
//   POST /sessions                          {model_id[, seed]} -> {session_id, overview}
//   GET  /sessions/{id}/overview
//   GET  /sessions/{id}/next-question       -> {stop, ranking[, question]}
//   POST /sessions/{id}/answers             {question_id, answer} -> overview
//   POST /sessions/{id}/undo                -> overview
//   GET  /sessions/{id}/explanation?generic_summary=true|false -> {text, items}
//   GET  /sessions/{id}/nodes/{node_id}
//   GET  /models
//
// Failures return {"error": {"kind", "message"}} with 400 (malformed
// request or model content), 404 (unknown session, model, node, question
// or answer) or 409 (illegal transition).

#include <memory>
#include <string>

#include "bdn/session.hpp"

namespace httplib {
class Server;
}

namespace bdn {

class Service {
 public:
  explicit Service(std::shared_ptr<SessionStore> store, std::shared_ptr<const ModelCatalog> catalog);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port or
  /// throws std::runtime_error when the port is busy.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void run();
  void stop();

 private:
  std::shared_ptr<SessionStore> store_;
  std::shared_ptr<const ModelCatalog> catalog_;
  std::unique_ptr<httplib::Server> server_;
};

/// HTTP status for an exception raised while handling a request.
int http_status(const std::exception& e);

}  // namespace bdn
