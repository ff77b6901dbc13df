#include "scopesearch/engine.hpp"

#include <algorithm>

namespace scopesearch {

using nlohmann::json;

Engine::Engine(Store& store, ProviderGateway& gateway, EngineOptions options)
    : store_(store), gateway_(gateway), options_(options) {}

SearchResponse Engine::search(const SearchRequest& request) {
  auto info = QueryInfo::from_text(request.text);
  store_.user(request.user_id);
  if (request.mode == HistoryMode::Project && !request.project_id) {
    throw EngineError(EngineErrorKind::Validation, "project mode needs a project");
  }
  std::size_t query_index = 0;
  if (request.project_id) {
    auto project = store_.project(*request.project_id);
    if (project.owner != request.user_id) {
      throw StoreError(StoreErrorKind::NotFound, "project " + *request.project_id + " not found");
    }
    if (project.archived) {
      throw EngineError(EngineErrorKind::Validation, "project " + project.project_id + " is archived");
    }
  }
  if (request.mode == HistoryMode::Project) {
    query_index = store_.queries_of_project(*request.project_id).size() + 1;
  } else {
    query_index = store_.queries_of_user(request.user_id).size() + 1;
  }

  auto executed = gateway_.execute(info.normalized, options_.term_limit);
  // distinct sampling stream per query position, reproducible under the seed
  auto seed = options_.seed * 0x9E3779B97F4A7C15ULL + query_index;
  auto history = store_.history(request.user_id, request.project_id, request.mode, query_index, seed);
  auto ranked = filter_and_rank(executed.docs, history, info, options_.filter);

  std::vector<AbstractDoc> docs;
  docs.reserve(ranked.size());
  for (const auto& r : ranked) docs.push_back(r.doc);
  auto record = store_.record_query(request.user_id, request.project_id, request.text,
                                    request.mode, docs);
  if (request.suggestion) {
    store_.log_action("suggestion_accepted", request.user_id, request.project_id, record.query_id,
                      {{"from_query_id", request.suggestion->from_query_id},
                       {"suggested_query", request.suggestion->suggested_query},
                       {"submitted_query", request.text},
                       {"edited", request.suggestion->suggested_query != request.text}});
  }

  SearchResponse response;
  response.query_id = record.query_id;
  response.query = request.text;
  response.normalized = render(info.normalized);
  response.mode = request.mode;
  response.project_id = request.project_id;
  response.history_size = history.size();
  response.results = std::move(ranked);
  response.offset = request.offset;
  response.page_size = request.page_size.value_or(options_.page_size);
  response.partial = executed.partial;
  response.failures = std::move(executed.failures);
  return response;
}

QueryRecord Engine::label(const std::string& query_id, const DocKey& doc,
                          std::optional<Label> label) {
  return store_.record_label(query_id, doc, label);
}

SuggestionSet Engine::suggestions(const std::string& query_id) {
  auto record = store_.query(query_id);
  if (record.labels.empty()) {
    throw EngineError(EngineErrorKind::NoLabelsYet, "query " + query_id + " has no labels yet");
  }
  std::vector<TermVector> relevant;
  std::vector<TermVector> irrelevant;
  for (const auto& [key, label] : record.labels) {
    auto vector = build_term_vector(store_.doc(key).text());
    (label == Label::Relevant ? relevant : irrelevant).push_back(std::move(vector));
  }
  SuggestionSet out;
  out.query_id = query_id;
  for (auto& s : suggest_terms(*parse(record.text), relevant, irrelevant, options_.max_per_side)) {
    (s.direction == SuggestionDirection::Add ? out.add : out.remove).push_back(std::move(s));
  }
  json shown = json::array();
  for (const auto* side : {&out.add, &out.remove}) {
    for (const auto& s : *side) shown.push_back(to_json(s));
  }
  store_.log_action("suggestion_shown", record.user_id, record.project_id, query_id,
                    {{"suggestions", shown}});
  return out;
}

std::vector<RerankedDoc> Engine::rerank(const std::string& query_id) const {
  auto record = store_.query(query_id);
  auto docs = store_.docs(record.results);
  std::vector<ScoredDoc> results;
  results.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) results.push_back({std::move(docs[i]), 0.0, i + 1});
  return rerank_within_query(results, record.labels);
}

MetricsReport Engine::metrics(const std::string& project_id, std::size_t k,
                              std::optional<double> rsb, std::optional<double> max_rsb) const {
  if (rsb.has_value() != max_rsb.has_value()) {
    throw EngineError(EngineErrorKind::Validation, "rsb and max_rsb must be given together");
  }
  if (k == 0) throw EngineError(EngineErrorKind::Validation, "k must be positive");
  if (rsb && *rsb == 0.0) throw MetricsError(MetricsErrorKind::DivisionByZero, "rsb must be non-zero");
  MetricsReport report;
  report.project_id = project_id;
  report.k = k;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& record : store_.queries_of_project(project_id)) {
    QueryPrecision qp{record.query_id, record.project_index, std::nullopt};
    try {
      qp.precision = precision_at_k(record, k);
      sum += *qp.precision;
      ++counted;
    } catch (const MetricsError&) {
      // fewer than k labels: listed without a precision
    }
    report.queries.push_back(qp);
  }
  if (counted > 0) {
    report.mean_precision = sum / static_cast<double>(counted);
    if (rsb) report.normalized_mean_precision = normalize_precision(*report.mean_precision, *rsb, *max_rsb);
  }
  return report;
}

// ---------------------------------------------------------------------------
// wire forms

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json doc_json(const AbstractDoc& doc) {
  json aliases = json::array();
  for (const auto& k : doc.also_known_as) aliases.push_back(to_string(k));
  return {{"key", to_string(doc.key)},
          {"provider", to_string(doc.key.provider)},
          {"doc_id", doc.key.doc_id},
          {"title", doc.title},
          {"abstract", doc.abstract_text},
          {"also_known_as", aliases}};
}

json to_json(const SearchResponse& r) {
  json results = json::array();
  auto begin = std::min(r.offset, r.results.size());
  auto end = std::min(r.results.size(), begin + r.page_size);
  for (auto i = begin; i < end; ++i) {
    const auto& s = r.results[i];
    results.push_back({{"rank", s.rank}, {"score", s.score}, {"label", nullptr}, {"doc", doc_json(s.doc)}});
  }
  return {{"query_id", r.query_id},
          {"query", r.query},
          {"normalized", r.normalized},
          {"mode", to_string(r.mode)},
          {"project_id", r.project_id ? json(*r.project_id) : json(nullptr)},
          {"history_size", r.history_size},
          {"total", r.results.size()},
          {"offset", r.offset},
          {"page_size", r.page_size},
          {"partial", r.partial},
          {"failures", r.failures},
          {"suggestions_available", false},
          {"results", results}};
}

json to_json(const Suggestion& s) {
  return {{"term", s.term},
          {"direction", to_string(s.direction)},
          {"z_score", s.z_score},
          {"suggested_query", s.suggested_query}};
}

json to_json(const SuggestionSet& set) {
  json add = json::array();
  json remove = json::array();
  for (const auto& s : set.add) add.push_back(to_json(s));
  for (const auto& s : set.remove) remove.push_back(to_json(s));
  return {{"query_id", set.query_id}, {"add", add}, {"remove", remove}};
}

json to_json(const std::vector<RerankedDoc>& docs) {
  json out = json::array();
  for (const auto& d : docs) {
    out.push_back({{"position", d.position},
                   {"original_rank", d.result.rank},
                   {"label", d.label ? json(std::string(to_string(*d.label))) : json(nullptr)},
                   {"feedback", d.feedback},
                   {"doc", doc_json(d.result.doc)}});
  }
  return out;
}

json to_json(const MetricsReport& report) {
  json queries = json::array();
  for (const auto& q : report.queries) {
    queries.push_back({{"query_id", q.query_id},
                       {"project_index", q.project_index},
                       {"precision", optional_number(q.precision)}});
  }
  return {{"project_id", report.project_id},
          {"k", report.k},
          {"queries", queries},
          {"mean_precision", optional_number(report.mean_precision)},
          {"normalized_mean_precision", optional_number(report.normalized_mean_precision)}};
}

json to_json(const Project& project, const ProjectStats& stats) {
  return {{"project_id", project.project_id},
          {"name", project.name},
          {"owner", project.owner},
          {"created_at", project.created_at},
          {"archived", project.archived},
          {"version", project.version},
          {"statistics",
           {{"query_count", stats.query_count},
            {"label_count", stats.label_count},
            {"relevant_count", stats.relevant_count},
            {"irrelevant_count", stats.irrelevant_count}}}};
}

json to_json(const QueryRecord& record) {
  json results = json::array();
  for (const auto& k : record.results) {
    auto it = record.labels.find(k);
    results.push_back({{"key", to_string(k)},
                       {"label", it == record.labels.end() ? json(nullptr)
                                                           : json(std::string(to_string(it->second)))}});
  }
  return {{"query_id", record.query_id},
          {"user_id", record.user_id},
          {"project_id", record.project_id ? json(*record.project_id) : json(nullptr)},
          {"query", record.text},
          {"mode", to_string(record.mode)},
          {"issued_at", record.issued_at},
          {"session_index", record.session_index},
          {"project_index", record.project_index},
          {"version", record.version},
          {"results", results}};
}

}  // namespace scopesearch
