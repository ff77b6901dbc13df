#pragma once

// Event-sourced store for users, projects, queries, labels and experiment
// actions. Every mutation is an event appended to <dir>/events.jsonl; the
// in-memory state is the fold of those events. <dir>/snapshot.json holds a
// compacted copy of the state up to a sequence number so reloads only replay
// the tail. Passing no directory keeps everything in memory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopesearch/doc.hpp"
#include "scopesearch/gateway.hpp"
#include "scopesearch/relevance.hpp"

namespace scopesearch {

enum class HistoryMode { Base, Random, Project, Lifetime };

std::string_view to_string(HistoryMode mode);
/// Accepts base, random, project, lifetime plus the aliases quick and one-time
/// for base.
std::optional<HistoryMode> history_mode_from_string(std::string_view text);

/// Number of prior queries sampled in random mode for the query at
/// `query_index` (1-based): 0 for the first, 1 for the 2nd-3rd, 2 afterwards.
std::size_t random_sample_size(std::size_t query_index);

struct User {
  std::string user_id;
  std::string display_name;
  std::string token;
  Timestamp created_at = 0;

  bool operator==(const User&) const = default;
};

struct ProjectStats {
  std::size_t query_count = 0;
  std::size_t label_count = 0;
  std::size_t relevant_count = 0;
  std::size_t irrelevant_count = 0;

  bool operator==(const ProjectStats&) const = default;
};

struct Project {
  std::string project_id;
  std::string owner;
  std::string name;
  Timestamp created_at = 0;
  bool archived = false;
  std::uint64_t version = 0;

  bool operator==(const Project&) const = default;
};

struct QueryRecord {
  std::string query_id;
  std::string user_id;
  std::optional<std::string> project_id;
  std::string text;
  HistoryMode mode = HistoryMode::Base;
  std::vector<DocKey> results;
  std::map<DocKey, Label> labels;
  Timestamp issued_at = 0;
  std::size_t session_index = 0;  // 1-based position among the user's queries
  std::size_t project_index = 0;  // 1-based position inside the project, 0 if none
  std::uint64_t version = 0;

  bool operator==(const QueryRecord&) const = default;
};

struct Event {
  std::uint64_t seq = 0;
  Timestamp at = 0;
  std::string type;
  std::optional<std::string> user_id;
  std::optional<std::string> project_id;
  std::optional<std::string> query_id;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& event);
Event event_from_json(const nlohmann::json& j);

/// Action events exported by default.
inline const std::vector<std::string> kActionEventTypes = {
    "page_view", "search", "label", "suggestion_shown", "suggestion_accepted"};

struct EventFilter {
  std::optional<std::string> user_id;
  std::optional<std::string> project_id;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive
  /// Empty means kActionEventTypes.
  std::vector<std::string> types;
  bool all_types = false;
};

enum class StoreErrorKind { NotFound, Conflict, Validation };

class StoreError : public std::runtime_error {
 public:
  StoreError(StoreErrorKind kind, const std::string& message);
  StoreErrorKind kind() const noexcept { return kind_; }

 private:
  StoreErrorKind kind_;
};

struct StoreOptions {
  std::optional<std::filesystem::path> dir;
  Clock clock = system_now;
  /// Write a snapshot after this many events; 0 disables automatic compaction.
  std::size_t snapshot_interval = 500;
};

class Store {
 public:
  explicit Store(StoreOptions options = {});

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // --- mutations (serialized through one writer lock)
  User create_user(const std::string& display_name);
  Project create_project(const std::string& user_id, const std::string& name);
  Project rename_project(const std::string& project_id, const std::string& name);
  void archive_project(const std::string& project_id);
  QueryRecord record_query(const std::string& user_id, const std::optional<std::string>& project_id,
                           const std::string& text, HistoryMode mode,
                           const std::vector<AbstractDoc>& results);
  /// Idempotent; a different label overwrites, nullopt clears.
  QueryRecord record_label(const std::string& query_id, const DocKey& doc,
                           std::optional<Label> label);
  /// page_view, suggestion_shown or suggestion_accepted.
  Event log_action(const std::string& type, const std::string& user_id,
                   const std::optional<std::string>& project_id,
                   const std::optional<std::string>& query_id, nlohmann::json payload);

  // --- reads (consistent snapshot under a shared lock)
  User user(const std::string& user_id) const;
  std::optional<User> user_by_token(const std::string& token) const;
  /// Oldest user with this display name.
  std::optional<User> user_by_name(const std::string& display_name) const;
  Project project(const std::string& project_id) const;
  std::vector<Project> projects_of(const std::string& user_id, bool include_archived = false) const;
  ProjectStats statistics(const std::string& project_id) const;
  QueryRecord query(const std::string& query_id) const;
  std::vector<QueryRecord> queries_of_user(const std::string& user_id) const;
  std::vector<QueryRecord> queries_of_project(const std::string& project_id) const;
  AbstractDoc doc(const DocKey& key) const;
  std::vector<AbstractDoc> docs(const std::vector<DocKey>& keys) const;

  /// Prior labeled queries feeding personalization for the user's next query.
  std::vector<HistoryEntry> history(const std::string& user_id,
                                    const std::optional<std::string>& project_id,
                                    HistoryMode mode, std::size_t query_index,
                                    std::uint64_t seed) const;

  std::vector<Event> export_log(const EventFilter& filter = {}) const;

  /// Last applied event sequence number.
  std::uint64_t version() const;

  /// Writes snapshot.json for the current state (no-op in memory).
  void compact();

  /// Ids, records, labels and docs as JSON; equal logical states produce
  /// identical documents.
  nlohmann::json state_json() const;

 private:
  struct State {
    std::map<std::string, User> users;
    std::map<std::string, Project> projects;
    std::map<std::string, QueryRecord> queries;
    std::map<DocKey, AbstractDoc> docs;
    std::map<std::string, std::string> tokens;  // token -> user_id
    std::vector<std::string> query_order;       // query ids by issue order
    std::uint64_t last_seq = 0;
    std::uint64_t next_user = 1;
    std::uint64_t next_project = 1;
    std::uint64_t next_query = 1;
  };

  Event append(Event event);
  void apply(State& state, const Event& event) const;
  void load();
  void write_snapshot() const;
  HistoryEntry make_entry(const QueryRecord& record) const;
  const User& require_user(const std::string& user_id) const;
  const Project& require_project(const std::string& project_id) const;
  const QueryRecord& require_query(const std::string& query_id) const;
  static nlohmann::json state_to_json(const State& state);
  static State state_from_json(const nlohmann::json& j);

  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  State state_;
  std::vector<Event> events_;
  std::size_t events_since_snapshot_ = 0;
  std::ofstream log_;
};

}  // namespace scopesearch
