#include "bdn/session.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fcntl.h>
#include <fmt/format.h>
#include <fstream>
#include <unistd.h>

#include "bdn/model_io.hpp"
#include "bdn/payloads.hpp"
#include "bdn/random.hpp"

namespace bdn {

using nlohmann::json;

namespace {

std::string now_text() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &utc);
  return fmt::format("{}.{:03d}Z", buf, static_cast<int>(ms % 1000));
}

std::optional<std::uint64_t> counter_of(std::string_view id) {
  if (id.size() < 3 || id.substr(0, 2) != "s-") return std::nullopt;
  std::uint64_t n = 0;
  for (char c : id.substr(2)) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------

ModelCatalog ModelCatalog::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw LookupError(fmt::format("model directory '{}' does not exist", dir.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ModelCatalog catalog;
  for (const auto& file : files) {
    try {
      catalog.add(file.stem().string(), load_model(file));
    } catch (const ValidationError& e) {
      ValidationReport report = e.report();
      for (auto& f : report.errors) f.message = fmt::format("{}: {}", file.filename().string(), f.message);
      throw ValidationError(std::move(report));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: {}", file.filename().string(), e.what()), e.offset());
    } catch (const SchemaError& e) {
      throw SchemaError(fmt::format("{}: {}", file.filename().string(), e.what()));
    }
  }
  return catalog;
}

void ModelCatalog::add(std::string id, NetworkModel model) {
  CatalogEntry entry;
  entry.hash = content_hash(model);
  entry.model = std::make_shared<const NetworkModel>(std::move(model));
  entries_[std::move(id)] = std::move(entry);
}

const CatalogEntry& ModelCatalog::at(std::string_view id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError(fmt::format("unknown model '{}'", id));
  return it->second;
}

std::vector<std::string> ModelCatalog::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

std::uint64_t session_seed(std::uint64_t model_seed, std::uint64_t counter) {
  return mix64(mix64(model_seed) ^ counter);
}

// ---------------------------------------------------------------------------

const json& SessionStore::Snapshot::cached_overview() const {
  std::call_once(overview_once, [this] { overview = payload::overview(state); });
  return overview;
}

std::shared_ptr<const SessionStore::Snapshot> SessionStore::Session::load() const {
  std::lock_guard lock(pointer);
  return current;
}

void SessionStore::Session::store(std::shared_ptr<const Snapshot> next) {
  std::lock_guard lock(pointer);
  current = std::move(next);
}

SessionStore::SessionStore(std::shared_ptr<const ModelCatalog> catalog, std::filesystem::path data_dir)
    : catalog_(std::move(catalog)), data_dir_(std::move(data_dir)) {
  std::filesystem::create_directories(data_dir_);
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& log : logs) {
    if (const auto n = counter_of(log.stem().string())) next_counter_ = std::max(next_counter_, *n + 1);
    try {
      replay_log(log);
    } catch (const std::exception& e) {
      skipped_.push_back(fmt::format("{}: {}", log.filename().string(), e.what()));
    }
  }
}

void SessionStore::replay_log(const std::filesystem::path& log) {
  std::ifstream in(log, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  // A crash can leave a partial final line; only newline-terminated events count.
  std::vector<json> events;
  std::size_t start = 0;
  for (std::size_t nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
    if (nl > start) events.push_back(json::parse(text.begin() + static_cast<std::ptrdiff_t>(start),
                                                 text.begin() + static_cast<std::ptrdiff_t>(nl)));
    start = nl + 1;
  }
  if (events.empty() || events.front().value("event", "") != "create") {
    throw SchemaError("log does not begin with a create event");
  }
  const json& create = events.front();
  const std::string id = create.at("session_id").get<std::string>();
  const CatalogEntry& entry = catalog_->at(create.at("model_id").get<std::string>());
  if (entry.hash != create.at("model_hash").get<std::string>()) {
    throw SchemaError(fmt::format("model '{}' changed since the session was created",
                                  create.at("model_id").get<std::string>()));
  }
  ConsultationState state(entry.model);
  state = state.with_seed(create.at("seed").get<std::uint64_t>());
  for (std::size_t i = 1; i < events.size(); ++i) {
    const std::string kind = events[i].at("event").get<std::string>();
    if (kind == "answer") {
      state = apply_answer(state, events[i].at("question_id").get<std::string>(),
                           events[i].at("answer").get<std::string>());
    } else if (kind == "undo") {
      state = bdn::undo(state);
    } else {
      throw SchemaError(fmt::format("unknown event '{}'", kind));
    }
  }
  auto s = std::make_unique<Session>();
  s->id = id;
  s->log = log;
  s->current = std::make_shared<const Snapshot>(std::move(state));
  sessions_[id] = std::move(s);
}

void SessionStore::append(const std::filesystem::path& log, const json& event) {
  const std::string line = event.dump() + "\n";
  const int fd = ::open(log.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw std::runtime_error(fmt::format("cannot open '{}': {}", log.string(), std::strerror(errno)));
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw std::runtime_error(fmt::format("cannot write '{}': {}", log.string(), std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

SessionStore::Session& SessionStore::session(std::string_view id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw LookupError(fmt::format("unknown session '{}'", id));
  return *it->second;
}

SessionStore::Created SessionStore::create(std::string_view model_id, std::optional<std::uint64_t> seed) {
  const CatalogEntry& entry = catalog_->at(model_id);
  std::unique_lock lock(sessions_mutex_);
  const std::uint64_t counter = next_counter_++;
  const std::string id = fmt::format("s-{}", counter);
  const std::uint64_t s = seed ? *seed : session_seed(entry.model->mc.seed, counter);

  auto session = std::make_unique<Session>();
  session->id = id;
  session->log = data_dir_ / (id + ".jsonl");
  session->current = std::make_shared<const Snapshot>(ConsultationState(entry.model).with_seed(s));
  append(session->log, {{"event", "create"},
                         {"session_id", id},
                         {"model_id", std::string(model_id)},
                         {"model_hash", entry.hash},
                         {"seed", s},
                         {"time", now_text()}});
  auto snapshot = session->current;
  sessions_[id] = std::move(session);
  lock.unlock();
  return {id, snapshot->cached_overview()};
}

json SessionStore::overview(std::string_view session_id) const {
  return session(session_id).load()->cached_overview();
}

json SessionStore::next_question(std::string_view session_id) const {
  return payload::next_question(session(session_id).load()->state);
}

json SessionStore::answer(std::string_view session_id, std::string_view question_id, std::string_view answer) {
  Session& s = session(session_id);
  std::lock_guard lock(s.mutation);
  auto next = std::make_shared<const Snapshot>(apply_answer(s.load()->state, question_id, answer));
  append(s.log, {{"event", "answer"},
                 {"question_id", std::string(question_id)},
                 {"answer", std::string(answer)},
                 {"time", now_text()}});
  s.store(next);
  return next->cached_overview();
}

json SessionStore::undo(std::string_view session_id) {
  Session& s = session(session_id);
  std::lock_guard lock(s.mutation);
  auto next = std::make_shared<const Snapshot>(bdn::undo(s.load()->state));
  append(s.log, {{"event", "undo"}, {"time", now_text()}});
  s.store(next);
  return next->cached_overview();
}

json SessionStore::explanation(std::string_view session_id, bool generic_summary) const {
  return payload::explanation(session(session_id).load()->state, generic_summary);
}

json SessionStore::node(std::string_view session_id, std::string_view node_id) const {
  return payload::node_attributes(session(session_id).load()->state, node_id);
}

ConsultationState SessionStore::state(std::string_view session_id) const {
  return session(session_id).load()->state;
}

std::vector<std::string> SessionStore::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

}  // namespace bdn
