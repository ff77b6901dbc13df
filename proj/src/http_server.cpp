#include "scopesearch/http_server.hpp"

#include <httplib.h>

#include <charconv>

namespace scopesearch {

using nlohmann::json;

namespace {

struct HttpError : std::runtime_error {
  HttpError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message, json extra = json::object()) {
  json body = {{"error", code}, {"message", message}};
  body.update(extra);
  send_json(res, status, body);
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw HttpError(400, "BadRequest", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError(400, "BadRequest", std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end()) throw HttpError(400, "BadRequest", std::string("missing field ") + name);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw HttpError(400, "BadRequest", std::string("field ") + name + " has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return std::nullopt;
  return field<T>(body, name);
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

template <typename T>
std::optional<T> number_param(const httplib::Request& req, const char* name) {
  auto raw = param(req, name);
  if (!raw) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), value);
  if (ec != std::errc() || ptr != raw->data() + raw->size()) {
    throw HttpError(400, "BadRequest", std::string("query parameter ") + name + " is not a number");
  }
  return value;
}

std::optional<double> double_param(const httplib::Request& req, const char* name) {
  auto raw = param(req, name);
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(*raw, &used);
    if (used == raw->size()) return v;
  } catch (const std::exception&) {
  }
  throw HttpError(400, "BadRequest", std::string("query parameter ") + name + " is not a number");
}

User authenticate(const Store& store, const httplib::Request& req) {
  auto header = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (header.rfind(prefix, 0) != 0) throw HttpError(401, "Unauthorized", "missing bearer token");
  auto user = store.user_by_token(header.substr(prefix.size()));
  if (!user) throw HttpError(401, "Unauthorized", "unknown token");
  return *user;
}

// Other users' records are reported as missing rather than forbidden.
QueryRecord owned_query(const Store& store, const User& user, const std::string& id) {
  auto record = store.query(id);
  if (record.user_id != user.user_id) throw StoreError(StoreErrorKind::NotFound, "query " + id + " not found");
  return record;
}

Project owned_project(const Store& store, const User& user, const std::string& id) {
  auto project = store.project(id);
  if (project.owner != user.user_id) {
    throw StoreError(StoreErrorKind::NotFound, "project " + id + " not found");
  }
  return project;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Uniform error mapping for every route.
Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const HttpError& e) {
      send_error(res, e.status, e.code, e.what());
    } catch (const QueryError& e) {
      send_error(res, 400, std::string(to_string(e.kind())), e.what(), {{"position", e.position()}});
    } catch (const StoreError& e) {
      switch (e.kind()) {
        case StoreErrorKind::NotFound: send_error(res, 404, "NotFound", e.what()); break;
        case StoreErrorKind::Conflict: send_error(res, 409, "Conflict", e.what()); break;
        case StoreErrorKind::Validation: send_error(res, 400, "ValidationError", e.what()); break;
      }
    } catch (const EngineError& e) {
      if (e.kind() == EngineErrorKind::NoLabelsYet) send_error(res, 409, "NoLabelsYet", e.what());
      else send_error(res, 400, "ValidationError", e.what());
    } catch (const MetricsError& e) {
      send_error(res, 400,
                 e.kind() == MetricsErrorKind::DivisionByZero ? "DivisionByZero" : "InsufficientLabels",
                 e.what());
    } catch (const UnknownDocLabel& e) {
      send_error(res, 400, "UnknownDocLabel", e.what());
    } catch (const AllProvidersFailed& e) {
      send_error(res, 502, "AllProvidersFailed", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  };
}

DocKey doc_key_field(const json& body) {
  auto text = field<std::string>(body, "doc");
  auto key = parse_doc_key(text);
  if (!key) throw HttpError(400, "BadRequest", "doc must look like provider:id");
  return *key;
}

}  // namespace

HttpServer::HttpServer(Engine& engine)
    : engine_(engine), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::routes() {
  auto& s = *server_;
  auto& engine = engine_;
  auto& store = engine_.store();

  s.Get("/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));

  s.Get("/v1/grammar", guarded([](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(grammar_help()), "text/plain");
  }));

  s.Post("/v1/users", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto body = body_of(req);
    auto user = store.create_user(field<std::string>(body, "display_name"));
    send_json(res, 201,
              {{"user_id", user.user_id}, {"display_name", user.display_name}, {"token", user.token}});
  }));

  s.Post("/v1/search", guarded([&engine, &store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto body = body_of(req);
    SearchRequest request;
    request.user_id = user.user_id;
    request.text = field<std::string>(body, "query");
    auto mode_text = optional_field<std::string>(body, "mode").value_or("base");
    auto mode = history_mode_from_string(mode_text);
    if (!mode) throw HttpError(400, "BadRequest", "unknown mode " + mode_text);
    request.mode = *mode;
    request.project_id = optional_field<std::string>(body, "project_id");
    request.offset = optional_field<std::size_t>(body, "offset").value_or(0);
    request.page_size = optional_field<std::size_t>(body, "page_size");
    if (request.page_size && *request.page_size == 0) {
      throw HttpError(400, "BadRequest", "page_size must be positive");
    }
    if (auto suggestion = body.find("suggestion"); suggestion != body.end() && !suggestion->is_null()) {
      auto from = field<std::string>(*suggestion, "query_id");
      owned_query(store, user, from);
      request.suggestion = AcceptedSuggestion{from, field<std::string>(*suggestion, "suggested_query")};
    }
    send_json(res, 200, to_json(engine.search(request)));
  }));

  s.Get("/v1/queries/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    send_json(res, 200, to_json(owned_query(store, user, req.path_params.at("id"))));
  }));

  s.Post("/v1/queries/:id/labels",
         guarded([&engine, &store](const httplib::Request& req, httplib::Response& res) {
           auto user = authenticate(store, req);
           auto id = req.path_params.at("id");
           owned_query(store, user, id);
           auto body = body_of(req);
           auto key = doc_key_field(body);
           std::optional<Label> label;
           if (auto text = optional_field<std::string>(body, "label")) {
             label = label_from_string(*text);
             if (!label) throw HttpError(400, "BadRequest", "label must be relevant, irrelevant or null");
           }
           send_json(res, 200, to_json(engine.label(id, key, label)));
         }));

  s.Post("/v1/queries/:id/rerank",
         guarded([&engine, &store](const httplib::Request& req, httplib::Response& res) {
           auto user = authenticate(store, req);
           auto id = req.path_params.at("id");
           owned_query(store, user, id);
           send_json(res, 200, {{"query_id", id}, {"results", to_json(engine.rerank(id))}});
         }));

  s.Get("/v1/queries/:id/suggestions",
        guarded([&engine, &store](const httplib::Request& req, httplib::Response& res) {
          auto user = authenticate(store, req);
          auto id = req.path_params.at("id");
          owned_query(store, user, id);
          send_json(res, 200, to_json(engine.suggestions(id)));
        }));

  s.Get("/v1/projects", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    bool archived = param(req, "include_archived").value_or("false") == "true";
    json out = json::array();
    for (const auto& p : store.projects_of(user.user_id, archived)) {
      out.push_back(to_json(p, store.statistics(p.project_id)));
    }
    send_json(res, 200, {{"projects", out}});
  }));

  s.Post("/v1/projects", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto body = body_of(req);
    auto project = store.create_project(user.user_id, field<std::string>(body, "name"));
    send_json(res, 201, to_json(project, store.statistics(project.project_id)));
  }));

  s.Get("/v1/projects/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto project = owned_project(store, user, req.path_params.at("id"));
    json queries = json::array();
    for (const auto& q : store.queries_of_project(project.project_id)) {
      queries.push_back({{"query_id", q.query_id},
                         {"query", q.text},
                         {"mode", to_string(q.mode)},
                         {"project_index", q.project_index}});
    }
    auto body = to_json(project, store.statistics(project.project_id));
    body["queries"] = queries;
    send_json(res, 200, body);
  }));

  s.Patch("/v1/projects/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto id = req.path_params.at("id");
    owned_project(store, user, id);
    auto body = body_of(req);
    auto project = store.rename_project(id, field<std::string>(body, "name"));
    send_json(res, 200, to_json(project, store.statistics(id)));
  }));

  s.Delete("/v1/projects/:id", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto id = req.path_params.at("id");
    owned_project(store, user, id);
    store.archive_project(id);
    res.status = 204;
  }));

  s.Get("/v1/metrics", guarded([&engine, &store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto project = param(req, "project");
    if (!project) throw HttpError(400, "BadRequest", "missing query parameter project");
    owned_project(store, user, *project);
    auto k = number_param<std::size_t>(req, "k").value_or(10);
    send_json(res, 200,
              to_json(engine.metrics(*project, k, double_param(req, "rsb"), double_param(req, "max_rsb"))));
  }));

  s.Get("/v1/export/log", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    EventFilter filter;
    filter.user_id = user.user_id;
    filter.project_id = param(req, "project");
    filter.from = number_param<Timestamp>(req, "from");
    filter.to = number_param<Timestamp>(req, "to");
    if (auto types = param(req, "types")) {
      std::size_t start = 0;
      while (start <= types->size()) {
        auto comma = types->find(',', start);
        if (comma == std::string::npos) comma = types->size();
        if (comma > start) filter.types.push_back(types->substr(start, comma - start));
        start = comma + 1;
      }
    }
    std::string out;
    for (const auto& e : store.export_log(filter)) out += to_json(e).dump() + "\n";
    res.status = 200;
    res.set_content(out, "application/x-ndjson");
  }));

  s.Post("/v1/events/page_view", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    auto user = authenticate(store, req);
    auto body = body_of(req);
    auto page = field<std::string>(body, "page");
    auto project = optional_field<std::string>(body, "project_id");
    if (project) owned_project(store, user, *project);
    auto event = store.log_action("page_view", user.user_id, project, std::nullopt, {{"page", page}});
    send_json(res, 201, {{"seq", event.seq}});
  }));
}

}  // namespace scopesearch
