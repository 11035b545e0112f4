#pragma once

// Session persistence: a catalog of model files and an event-sourced store
// of consultation sessions.
//
// Each session is one append-only JSON-lines file `<data>/<session_id>.jsonl`:
//   {"event":"create","session_id":..,"model_id":..,"model_hash":..,"seed":..,"time":..}
//   {"event":"answer","question_id":..,"answer":..,"time":..}
//   {"event":"undo","time":..}
// State is rebuilt by folding the events over the generic model; timestamps
// are informational only.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bdn/assessment.hpp"

namespace bdn {

struct CatalogEntry {
  std::shared_ptr<const NetworkModel> model;
  std::string hash;
};

/// Models loaded from `<dir>/*.json`; the file stem is the model id.
class ModelCatalog {
 public:
  ModelCatalog() = default;
  /// Throws the first load failure, prefixed with the file name.
  static ModelCatalog load_directory(const std::filesystem::path& dir);

  void add(std::string id, NetworkModel model);
  const CatalogEntry& at(std::string_view id) const;  ///< LookupError
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, CatalogEntry, std::less<>> entries_;
};

/// Session seed when the client does not supply one.
std::uint64_t session_seed(std::uint64_t model_seed, std::uint64_t counter);

class SessionStore {
 public:
  /// Replays every log under `data_dir` (created if missing). Logs whose
  /// model is missing or whose content hash no longer matches are skipped
  /// and listed in `skipped()`.
  SessionStore(std::shared_ptr<const ModelCatalog> catalog, std::filesystem::path data_dir);

  struct Created {
    std::string session_id;
    nlohmann::json overview;
  };

  Created create(std::string_view model_id, std::optional<std::uint64_t> seed = std::nullopt);
  nlohmann::json overview(std::string_view session_id) const;
  nlohmann::json next_question(std::string_view session_id) const;
  nlohmann::json answer(std::string_view session_id, std::string_view question_id, std::string_view answer);
  nlohmann::json undo(std::string_view session_id);
  nlohmann::json explanation(std::string_view session_id, bool generic_summary) const;
  nlohmann::json node(std::string_view session_id, std::string_view node_id) const;

  ConsultationState state(std::string_view session_id) const;
  std::vector<std::string> session_ids() const;
  const std::vector<std::string>& skipped() const { return skipped_; }

 private:
  struct Snapshot {
    explicit Snapshot(ConsultationState s) : state(std::move(s)) {}
    ConsultationState state;
    mutable std::once_flag overview_once;
    mutable nlohmann::json overview;
    const nlohmann::json& cached_overview() const;
  };

  struct Session {
    std::string id;
    std::filesystem::path log;
    std::mutex mutation;                    // one writer at a time
    mutable std::mutex pointer;             // guards `current` swaps only
    std::shared_ptr<const Snapshot> current;

    std::shared_ptr<const Snapshot> load() const;
    void store(std::shared_ptr<const Snapshot> next);
  };

  Session& session(std::string_view id) const;
  void replay_log(const std::filesystem::path& log);
  static void append(const std::filesystem::path& log, const nlohmann::json& event);

  std::shared_ptr<const ModelCatalog> catalog_;
  std::filesystem::path data_dir_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Session>, std::less<>> sessions_;
  std::uint64_t next_counter_ = 1;
  std::vector<std::string> skipped_;
};

}  // namespace bdn
