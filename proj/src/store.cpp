#include "scopesearch/store.hpp"

#include <algorithm>
#include <mutex>
#include <random>
#include <sstream>

#include "scopesearch/rng.hpp"

namespace scopesearch {

using nlohmann::json;

std::string_view to_string(HistoryMode mode) {
  switch (mode) {
    case HistoryMode::Base: return "base";
    case HistoryMode::Random: return "random";
    case HistoryMode::Project: return "project";
    case HistoryMode::Lifetime: return "lifetime";
  }
  return "base";
}

std::optional<HistoryMode> history_mode_from_string(std::string_view text) {
  if (text == "base" || text == "quick" || text == "one-time") return HistoryMode::Base;
  if (text == "random") return HistoryMode::Random;
  if (text == "project") return HistoryMode::Project;
  if (text == "lifetime") return HistoryMode::Lifetime;
  return std::nullopt;
}

std::size_t random_sample_size(std::size_t query_index) {
  if (query_index <= 1) return 0;
  if (query_index <= 3) return 1;
  return 2;
}

StoreError::StoreError(StoreErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {

StoreError not_found(const std::string& what) {
  return StoreError(StoreErrorKind::NotFound, what + " not found");
}

std::string new_token() {
  std::random_device device;
  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 4; ++i) out << ((static_cast<std::uint64_t>(device()) << 32) | device());
  return out.str();
}

json doc_to_json(const AbstractDoc& doc) {
  json aliases = json::array();
  for (const auto& k : doc.also_known_as) aliases.push_back(to_string(k));
  return {{"key", to_string(doc.key)},        {"title", doc.title},
          {"abstract", doc.abstract_text},    {"fetched_at", doc.fetched_at},
          {"stub", doc.stub},                 {"also_known_as", aliases}};
}

DocKey key_from_json(const json& j) {
  auto key = parse_doc_key(j.get<std::string>());
  if (!key) throw std::runtime_error("bad document key: " + j.get<std::string>());
  return *key;
}

AbstractDoc doc_from_json(const json& j) {
  AbstractDoc doc;
  doc.key = key_from_json(j.at("key"));
  doc.title = j.at("title").get<std::string>();
  doc.abstract_text = j.at("abstract").get<std::string>();
  doc.fetched_at = j.value("fetched_at", Timestamp{0});
  doc.stub = j.value("stub", false);
  for (const auto& alias : j.value("also_known_as", json::array())) {
    doc.also_known_as.push_back(key_from_json(alias));
  }
  return doc;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> string_or_null(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::uint64_t id_number(const std::string& id) { return std::stoull(id.substr(1)); }

}  // namespace

json to_json(const Event& event) {
  return {{"seq", event.seq},
          {"at", event.at},
          {"type", event.type},
          {"user_id", optional_string(event.user_id)},
          {"project_id", optional_string(event.project_id)},
          {"query_id", optional_string(event.query_id)},
          {"payload", event.payload}};
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.at = j.at("at").get<Timestamp>();
  e.type = j.at("type").get<std::string>();
  e.user_id = string_or_null(j, "user_id");
  e.project_id = string_or_null(j, "project_id");
  e.query_id = string_or_null(j, "query_id");
  e.payload = j.value("payload", json::object());
  return e;
}

// ---------------------------------------------------------------------------

Store::Store(StoreOptions options) : options_(std::move(options)) {
  if (options_.dir) load();
}

void Store::load() {
  namespace fs = std::filesystem;
  fs::create_directories(*options_.dir);
  auto snapshot_path = *options_.dir / "snapshot.json";
  auto log_path = *options_.dir / "events.jsonl";

  if (fs::exists(snapshot_path)) {
    std::ifstream in(snapshot_path);
    state_ = state_from_json(json::parse(in));
  }
  if (fs::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      Event event;
      try {
        event = event_from_json(json::parse(line));
      } catch (const std::exception& e) {
        if (in.peek() == std::char_traits<char>::eof()) break;  // torn final write
        throw std::runtime_error("events.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
      if (event.seq > state_.last_seq) {
        apply(state_, event);
        ++events_since_snapshot_;
      }
      events_.push_back(std::move(event));
    }
  }
  log_.open(log_path, std::ios::app);
  if (!log_) throw std::runtime_error("cannot open " + log_path.string());
}

Event Store::append(Event event) {
  event.seq = state_.last_seq + 1;
  event.at = options_.clock();
  apply(state_, event);
  if (log_.is_open()) {
    log_ << to_json(event).dump() << '\n';
    log_.flush();
  }
  events_.push_back(event);
  ++events_since_snapshot_;
  if (options_.dir && options_.snapshot_interval != 0 &&
      events_since_snapshot_ >= options_.snapshot_interval) {
    write_snapshot();
    events_since_snapshot_ = 0;
  }
  return event;
}

void Store::apply(State& state, const Event& event) const {
  const auto& p = event.payload;
  if (event.type == "user_created") {
    User user{p.at("user_id"), p.at("display_name"), p.at("token"), event.at};
    state.tokens[user.token] = user.user_id;
    state.next_user = std::max(state.next_user, id_number(user.user_id) + 1);
    state.users[user.user_id] = std::move(user);
  } else if (event.type == "project_created") {
    Project project{p.at("project_id"), p.at("owner"), p.at("name"), event.at, false, event.seq};
    state.next_project = std::max(state.next_project, id_number(project.project_id) + 1);
    state.projects[project.project_id] = std::move(project);
  } else if (event.type == "project_renamed") {
    auto& project = state.projects.at(p.at("project_id"));
    project.name = p.at("name");
    project.version = event.seq;
  } else if (event.type == "project_archived") {
    auto& project = state.projects.at(p.at("project_id"));
    project.archived = true;
    project.version = event.seq;
  } else if (event.type == "search") {
    QueryRecord record;
    record.query_id = p.at("query_id");
    record.user_id = event.user_id.value();
    record.project_id = event.project_id;
    record.text = p.at("text");
    record.mode = history_mode_from_string(p.at("mode").get<std::string>()).value();
    for (const auto& k : p.at("results")) record.results.push_back(key_from_json(k));
    for (const auto& d : p.value("docs", json::array())) {
      auto doc = doc_from_json(d);
      state.docs[doc.key] = std::move(doc);
    }
    record.issued_at = event.at;
    record.session_index = p.at("session_index");
    record.project_index = p.at("project_index");
    record.version = event.seq;
    state.next_query = std::max(state.next_query, id_number(record.query_id) + 1);
    state.query_order.push_back(record.query_id);
    state.queries[record.query_id] = std::move(record);
  } else if (event.type == "label") {
    auto& record = state.queries.at(event.query_id.value());
    auto key = key_from_json(p.at("doc"));
    const auto& value = p.at("label");
    std::optional<Label> label;
    if (!value.is_null()) label = label_from_string(value.get<std::string>());
    auto it = record.labels.find(key);
    bool changed = label ? (it == record.labels.end() || it->second != *label)
                         : it != record.labels.end();
    if (changed) {
      if (label) record.labels[key] = *label;
      else record.labels.erase(key);
      record.version = event.seq;
    }
  }
  // page_view, suggestion_shown and suggestion_accepted carry no state
  state.last_seq = event.seq;
}

// ---------------------------------------------------------------------------
// mutations

User Store::create_user(const std::string& display_name) {
  if (display_name.empty()) throw StoreError(StoreErrorKind::Validation, "display name is empty");
  std::unique_lock lock(mutex_);
  Event e;
  e.type = "user_created";
  auto user_id = "u" + std::to_string(state_.next_user);
  e.user_id = user_id;
  e.payload = {{"user_id", user_id}, {"display_name", display_name}, {"token", new_token()}};
  append(std::move(e));
  return state_.users.at(user_id);
}

Project Store::create_project(const std::string& user_id, const std::string& name) {
  if (name.empty()) throw StoreError(StoreErrorKind::Validation, "project name is empty");
  std::unique_lock lock(mutex_);
  require_user(user_id);
  for (const auto& [id, project] : state_.projects) {
    if (project.owner == user_id && project.name == name && !project.archived) {
      throw StoreError(StoreErrorKind::Conflict, "project '" + name + "' already exists");
    }
  }
  auto project_id = "p" + std::to_string(state_.next_project);
  Event e;
  e.type = "project_created";
  e.user_id = user_id;
  e.project_id = project_id;
  e.payload = {{"project_id", project_id}, {"owner", user_id}, {"name", name}};
  append(std::move(e));
  return state_.projects.at(project_id);
}

Project Store::rename_project(const std::string& project_id, const std::string& name) {
  if (name.empty()) throw StoreError(StoreErrorKind::Validation, "project name is empty");
  std::unique_lock lock(mutex_);
  const auto& project = require_project(project_id);
  for (const auto& [id, other] : state_.projects) {
    if (id != project_id && other.owner == project.owner && other.name == name && !other.archived) {
      throw StoreError(StoreErrorKind::Conflict, "project '" + name + "' already exists");
    }
  }
  Event e;
  e.type = "project_renamed";
  e.user_id = project.owner;
  e.project_id = project_id;
  e.payload = {{"project_id", project_id}, {"name", name}};
  append(std::move(e));
  return state_.projects.at(project_id);
}

void Store::archive_project(const std::string& project_id) {
  std::unique_lock lock(mutex_);
  const auto& project = require_project(project_id);
  if (project.archived) return;
  Event e;
  e.type = "project_archived";
  e.user_id = project.owner;
  e.project_id = project_id;
  e.payload = {{"project_id", project_id}};
  append(std::move(e));
}

QueryRecord Store::record_query(const std::string& user_id,
                                const std::optional<std::string>& project_id,
                                const std::string& text, HistoryMode mode,
                                const std::vector<AbstractDoc>& results) {
  std::unique_lock lock(mutex_);
  require_user(user_id);
  if (project_id) {
    const auto& project = require_project(*project_id);
    if (project.owner != user_id) throw not_found("project " + *project_id);
  }
  std::size_t session_index = 1;
  std::size_t project_index = project_id ? 1 : 0;
  for (const auto& [id, q] : state_.queries) {
    if (q.user_id == user_id) ++session_index;
    if (project_id && q.project_id == project_id) ++project_index;
  }
  json keys = json::array();
  json new_docs = json::array();
  std::set<DocKey> seen;
  for (const auto& doc : results) {
    if (!seen.insert(doc.key).second) {
      throw StoreError(StoreErrorKind::Validation, "duplicate result " + to_string(doc.key));
    }
    keys.push_back(to_string(doc.key));
    auto it = state_.docs.find(doc.key);
    if (it == state_.docs.end() || !(it->second == doc)) new_docs.push_back(doc_to_json(doc));
  }
  auto query_id = "q" + std::to_string(state_.next_query);
  Event e;
  e.type = "search";
  e.user_id = user_id;
  e.project_id = project_id;
  e.query_id = query_id;
  e.payload = {{"query_id", query_id},
               {"text", text},
               {"mode", to_string(mode)},
               {"results", keys},
               {"docs", new_docs},
               {"session_index", session_index},
               {"project_index", project_index}};
  append(std::move(e));
  return state_.queries.at(query_id);
}

QueryRecord Store::record_label(const std::string& query_id, const DocKey& doc,
                                std::optional<Label> label) {
  std::unique_lock lock(mutex_);
  const auto& record = require_query(query_id);
  if (std::find(record.results.begin(), record.results.end(), doc) == record.results.end()) {
    throw StoreError(StoreErrorKind::Validation,
                     to_string(doc) + " is not a result of query " + query_id);
  }
  Event e;
  e.type = "label";
  e.user_id = record.user_id;
  e.project_id = record.project_id;
  e.query_id = query_id;
  e.payload = {{"doc", to_string(doc)},
               {"label", label ? json(std::string(to_string(*label))) : json(nullptr)}};
  append(std::move(e));
  return state_.queries.at(query_id);
}

Event Store::log_action(const std::string& type, const std::string& user_id,
                        const std::optional<std::string>& project_id,
                        const std::optional<std::string>& query_id, json payload) {
  if (type != "page_view" && type != "suggestion_shown" && type != "suggestion_accepted") {
    throw StoreError(StoreErrorKind::Validation, "unknown action type: " + type);
  }
  std::unique_lock lock(mutex_);
  require_user(user_id);
  Event e;
  e.type = type;
  e.user_id = user_id;
  e.project_id = project_id;
  e.query_id = query_id;
  e.payload = payload.is_null() ? json::object() : std::move(payload);
  return append(std::move(e));
}

// ---------------------------------------------------------------------------
// reads

const User& Store::require_user(const std::string& user_id) const {
  auto it = state_.users.find(user_id);
  if (it == state_.users.end()) throw not_found("user " + user_id);
  return it->second;
}

const Project& Store::require_project(const std::string& project_id) const {
  auto it = state_.projects.find(project_id);
  if (it == state_.projects.end()) throw not_found("project " + project_id);
  return it->second;
}

const QueryRecord& Store::require_query(const std::string& query_id) const {
  auto it = state_.queries.find(query_id);
  if (it == state_.queries.end()) throw not_found("query " + query_id);
  return it->second;
}

User Store::user(const std::string& user_id) const {
  std::shared_lock lock(mutex_);
  return require_user(user_id);
}

std::optional<User> Store::user_by_token(const std::string& token) const {
  std::shared_lock lock(mutex_);
  auto it = state_.tokens.find(token);
  if (it == state_.tokens.end()) return std::nullopt;
  return state_.users.at(it->second);
}

std::optional<User> Store::user_by_name(const std::string& display_name) const {
  std::shared_lock lock(mutex_);
  const User* best = nullptr;
  for (const auto& [id, u] : state_.users) {
    if (u.display_name != display_name) continue;
    if (!best || id_number(u.user_id) < id_number(best->user_id)) best = &u;
  }
  if (!best) return std::nullopt;
  return *best;
}

Project Store::project(const std::string& project_id) const {
  std::shared_lock lock(mutex_);
  return require_project(project_id);
}

std::vector<Project> Store::projects_of(const std::string& user_id, bool include_archived) const {
  std::shared_lock lock(mutex_);
  require_user(user_id);
  std::vector<Project> out;
  for (const auto& [id, project] : state_.projects) {
    if (project.owner == user_id && (include_archived || !project.archived)) out.push_back(project);
  }
  std::sort(out.begin(), out.end(), [](const Project& a, const Project& b) {
    return id_number(a.project_id) < id_number(b.project_id);
  });
  return out;
}

ProjectStats Store::statistics(const std::string& project_id) const {
  std::shared_lock lock(mutex_);
  require_project(project_id);
  ProjectStats stats;
  for (const auto& [id, q] : state_.queries) {
    if (q.project_id != project_id) continue;
    ++stats.query_count;
    for (const auto& [key, label] : q.labels) {
      ++stats.label_count;
      if (label == Label::Relevant) ++stats.relevant_count;
      else ++stats.irrelevant_count;
    }
  }
  return stats;
}

QueryRecord Store::query(const std::string& query_id) const {
  std::shared_lock lock(mutex_);
  return require_query(query_id);
}

std::vector<QueryRecord> Store::queries_of_user(const std::string& user_id) const {
  std::shared_lock lock(mutex_);
  require_user(user_id);
  std::vector<QueryRecord> out;
  for (const auto& id : state_.query_order) {
    const auto& q = state_.queries.at(id);
    if (q.user_id == user_id) out.push_back(q);
  }
  return out;
}

std::vector<QueryRecord> Store::queries_of_project(const std::string& project_id) const {
  std::shared_lock lock(mutex_);
  require_project(project_id);
  std::vector<QueryRecord> out;
  for (const auto& id : state_.query_order) {
    const auto& q = state_.queries.at(id);
    if (q.project_id == project_id) out.push_back(q);
  }
  return out;
}

AbstractDoc Store::doc(const DocKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = state_.docs.find(key);
  if (it == state_.docs.end()) throw not_found("document " + to_string(key));
  return it->second;
}

std::vector<AbstractDoc> Store::docs(const std::vector<DocKey>& keys) const {
  std::shared_lock lock(mutex_);
  std::vector<AbstractDoc> out;
  out.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = state_.docs.find(key);
    if (it == state_.docs.end()) throw not_found("document " + to_string(key));
    out.push_back(it->second);
  }
  return out;
}

HistoryEntry Store::make_entry(const QueryRecord& record) const {
  HistoryEntry entry{QueryInfo::from_text(record.text), {}, {}};
  for (const auto& [key, label] : record.labels) {
    auto vector = build_term_vector(state_.docs.at(key).text());
    if (label == Label::Relevant) entry.relevant_docs.push_back(std::move(vector));
    else entry.irrelevant_docs.push_back(std::move(vector));
  }
  return entry;
}

std::vector<HistoryEntry> Store::history(const std::string& user_id,
                                         const std::optional<std::string>& project_id,
                                         HistoryMode mode, std::size_t query_index,
                                         std::uint64_t seed) const {
  if (query_index < 1) throw StoreError(StoreErrorKind::Validation, "query_index must be >= 1");
  std::shared_lock lock(mutex_);
  require_user(user_id);

  std::vector<const QueryRecord*> records;
  switch (mode) {
    case HistoryMode::Base:
      return {};
    case HistoryMode::Project: {
      if (!project_id) {
        throw StoreError(StoreErrorKind::Validation, "project mode needs a project id");
      }
      require_project(*project_id);
      for (const auto& id : state_.query_order) {
        const auto& q = state_.queries.at(id);
        if (q.project_id == project_id) records.push_back(&q);
      }
      break;
    }
    case HistoryMode::Lifetime:
    case HistoryMode::Random: {
      for (const auto& id : state_.query_order) {
        const auto& q = state_.queries.at(id);
        if (q.user_id == user_id) records.push_back(&q);
      }
      if (mode == HistoryMode::Random) {
        Rng rng(seed);
        std::vector<const QueryRecord*> sampled;
        for (auto i : rng.sample_indices(records.size(), random_sample_size(query_index))) {
          sampled.push_back(records[i]);
        }
        records = std::move(sampled);
      }
      break;
    }
  }
  std::vector<HistoryEntry> out;
  out.reserve(records.size());
  for (const auto* record : records) out.push_back(make_entry(*record));
  return out;
}

std::vector<Event> Store::export_log(const EventFilter& filter) const {
  std::shared_lock lock(mutex_);
  const auto& types = filter.types.empty() ? kActionEventTypes : filter.types;
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (!filter.all_types && std::find(types.begin(), types.end(), e.type) == types.end()) continue;
    if (filter.user_id && e.user_id != filter.user_id) continue;
    if (filter.project_id && e.project_id != filter.project_id) continue;
    if (filter.from && e.at < *filter.from) continue;
    if (filter.to && e.at >= *filter.to) continue;
    out.push_back(e);
  }
  return out;
}

std::uint64_t Store::version() const {
  std::shared_lock lock(mutex_);
  return state_.last_seq;
}

void Store::compact() {
  std::unique_lock lock(mutex_);
  if (!options_.dir) return;
  write_snapshot();
  events_since_snapshot_ = 0;
}

void Store::write_snapshot() const {
  auto path = *options_.dir / "snapshot.json";
  auto tmp = *options_.dir / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << state_to_json(state_).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json Store::state_json() const {
  std::shared_lock lock(mutex_);
  return state_to_json(state_);
}

json Store::state_to_json(const State& state) {
  json users = json::array();
  for (const auto& [id, u] : state.users) {
    users.push_back({{"user_id", u.user_id},
                     {"display_name", u.display_name},
                     {"token", u.token},
                     {"created_at", u.created_at}});
  }
  json projects = json::array();
  for (const auto& [id, p] : state.projects) {
    projects.push_back({{"project_id", p.project_id},
                        {"owner", p.owner},
                        {"name", p.name},
                        {"created_at", p.created_at},
                        {"archived", p.archived},
                        {"version", p.version}});
  }
  json queries = json::array();
  for (const auto& id : state.query_order) {
    const auto& q = state.queries.at(id);
    json results = json::array();
    for (const auto& k : q.results) results.push_back(to_string(k));
    json labels = json::object();
    for (const auto& [k, l] : q.labels) labels[to_string(k)] = to_string(l);
    queries.push_back({{"query_id", q.query_id},
                       {"user_id", q.user_id},
                       {"project_id", optional_string(q.project_id)},
                       {"text", q.text},
                       {"mode", to_string(q.mode)},
                       {"results", results},
                       {"labels", labels},
                       {"issued_at", q.issued_at},
                       {"session_index", q.session_index},
                       {"project_index", q.project_index},
                       {"version", q.version}});
  }
  json docs = json::array();
  for (const auto& [k, d] : state.docs) docs.push_back(doc_to_json(d));
  return {{"schema", 1},
          {"last_seq", state.last_seq},
          {"next_user", state.next_user},
          {"next_project", state.next_project},
          {"next_query", state.next_query},
          {"users", users},
          {"projects", projects},
          {"queries", queries},
          {"docs", docs}};
}

Store::State Store::state_from_json(const json& j) {
  if (j.value("schema", 0) != 1) throw std::runtime_error("unsupported snapshot schema");
  State state;
  state.last_seq = j.at("last_seq");
  state.next_user = j.at("next_user");
  state.next_project = j.at("next_project");
  state.next_query = j.at("next_query");
  for (const auto& u : j.at("users")) {
    User user{u.at("user_id"), u.at("display_name"), u.at("token"), u.at("created_at")};
    state.tokens[user.token] = user.user_id;
    state.users[user.user_id] = std::move(user);
  }
  for (const auto& p : j.at("projects")) {
    Project project{p.at("project_id"), p.at("owner"),    p.at("name"),
                    p.at("created_at"), p.at("archived"), p.at("version")};
    state.projects[project.project_id] = std::move(project);
  }
  for (const auto& q : j.at("queries")) {
    QueryRecord record;
    record.query_id = q.at("query_id");
    record.user_id = q.at("user_id");
    record.project_id = string_or_null(q, "project_id");
    record.text = q.at("text");
    record.mode = history_mode_from_string(q.at("mode").get<std::string>()).value();
    for (const auto& k : q.at("results")) record.results.push_back(key_from_json(k));
    for (const auto& [k, l] : q.at("labels").items()) {
      record.labels[*parse_doc_key(k)] = label_from_string(l.get<std::string>()).value();
    }
    record.issued_at = q.at("issued_at");
    record.session_index = q.at("session_index");
    record.project_index = q.at("project_index");
    record.version = q.at("version");
    state.query_order.push_back(record.query_id);
    state.queries[record.query_id] = std::move(record);
  }
  for (const auto& d : j.at("docs")) {
    auto doc = doc_from_json(d);
    state.docs[doc.key] = std::move(doc);
  }
  return state;
}

}  // namespace scopesearch
