#pragma once

// The request-level operations behind both the HTTP API and the CLI: search
// with personalization, labeling, suggestions, within-query re-ordering and
// metrics. Holds no state of its own beyond references to the store and the
// provider gateway.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopesearch/gateway.hpp"
#include "scopesearch/metrics.hpp"
#include "scopesearch/relevance.hpp"
#include "scopesearch/store.hpp"
#include "scopesearch/suggest.hpp"

namespace scopesearch {

struct EngineOptions {
  FilterConfig filter;
  std::size_t term_limit = 100;
  std::size_t max_per_side = 5;
  std::size_t page_size = 10;
  std::uint64_t seed = 0;
};

enum class EngineErrorKind { Validation, NoLabelsYet };

class EngineError : public std::runtime_error {
 public:
  EngineError(EngineErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  EngineErrorKind kind() const noexcept { return kind_; }

 private:
  EngineErrorKind kind_;
};

struct AcceptedSuggestion {
  std::string from_query_id;
  std::string suggested_query;
};

struct SearchRequest {
  std::string user_id;
  std::string text;
  HistoryMode mode = HistoryMode::Base;
  std::optional<std::string> project_id;
  std::size_t offset = 0;
  std::optional<std::size_t> page_size;
  /// Set when the text came from a suggestion panel click (possibly edited).
  std::optional<AcceptedSuggestion> suggestion;
};

struct SearchResponse {
  std::string query_id;
  std::string query;       // as typed
  std::string normalized;  // clause form
  HistoryMode mode = HistoryMode::Base;
  std::optional<std::string> project_id;
  std::size_t history_size = 0;
  std::vector<ScoredDoc> results;  // full ranked list
  std::size_t offset = 0;
  std::size_t page_size = 0;
  bool partial = false;
  std::vector<std::string> failures;
};

struct SuggestionSet {
  std::string query_id;
  std::vector<Suggestion> add;
  std::vector<Suggestion> remove;
};

struct QueryPrecision {
  std::string query_id;
  std::size_t project_index = 0;
  std::optional<double> precision;  // unset with fewer than k labels
};

struct MetricsReport {
  std::string project_id;
  std::size_t k = 10;
  std::vector<QueryPrecision> queries;
  std::optional<double> mean_precision;
  std::optional<double> normalized_mean_precision;
};

class Engine {
 public:
  Engine(Store& store, ProviderGateway& gateway, EngineOptions options = {});

  SearchResponse search(const SearchRequest& request);
  QueryRecord label(const std::string& query_id, const DocKey& doc, std::optional<Label> label);
  /// Recomputed from the query's current labels on every call.
  SuggestionSet suggestions(const std::string& query_id);
  std::vector<RerankedDoc> rerank(const std::string& query_id) const;
  MetricsReport metrics(const std::string& project_id, std::size_t k,
                        std::optional<double> rsb, std::optional<double> max_rsb) const;

  const EngineOptions& options() const { return options_; }
  Store& store() { return store_; }

 private:
  Store& store_;
  ProviderGateway& gateway_;
  EngineOptions options_;
};

/// Wire forms shared by the HTTP API and the CLI's structured output.
/// Only the requested page of results is included.
nlohmann::json to_json(const SearchResponse& response);
nlohmann::json to_json(const Suggestion& suggestion);
nlohmann::json to_json(const SuggestionSet& set);
nlohmann::json to_json(const std::vector<RerankedDoc>& docs);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const Project& project, const ProjectStats& stats);
nlohmann::json to_json(const QueryRecord& record);
nlohmann::json doc_json(const AbstractDoc& doc);

}  // namespace scopesearch
