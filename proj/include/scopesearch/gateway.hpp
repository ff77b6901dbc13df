#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "scopesearch/doc.hpp"
#include "scopesearch/query.hpp"

namespace scopesearch {

using Clock = std::function<Timestamp()>;

Timestamp system_now();

struct ProviderConfig {
  std::string base_url;
  std::size_t max_results_per_term = 100;
  std::chrono::milliseconds request_timeout{10000};
  std::chrono::milliseconds min_request_interval{0};
  int max_retries = 2;
  /// Upper bound on a single Retry-After wait.
  std::chrono::milliseconds max_retry_wait{30000};
  /// Optional NCBI api_key for PubMed.
  std::string api_key;
};

enum class ProviderErrorKind { Unavailable, Rejected, RateLimited };

std::string_view to_string(ProviderErrorKind kind);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ProviderKind provider, ProviderErrorKind kind, const std::string& message);

  ProviderKind provider() const noexcept { return provider_; }
  ProviderErrorKind kind() const noexcept { return kind_; }

 private:
  ProviderKind provider_;
  ProviderErrorKind kind_;
};

class AllProvidersFailed : public std::runtime_error {
 public:
  explicit AllProvidersFailed(const std::vector<std::string>& failures);
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderKind kind() const = 0;
  /// Up to `limit` documents matching the atom, in the provider's own order.
  /// Throws ProviderError.
  virtual std::vector<AbstractDoc> fetch(const AtomicTerm& atom, std::size_t limit) = 0;
};

/// Blocks callers so consecutive acquisitions are at least `interval` apart.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds interval) : interval_(interval) {}
  void acquire();

 private:
  std::chrono::milliseconds interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

/// In-memory corpus with an inverted index over title and abstract tokens.
class LocalProvider : public Provider {
 public:
  explicit LocalProvider(std::vector<AbstractDoc> docs);

  /// Tab-separated doc_id, title, abstract; one record per line, UTF-8.
  static std::shared_ptr<LocalProvider> from_file(const std::string& path);
  static std::vector<AbstractDoc> parse_corpus(std::string_view text);

  ProviderKind kind() const override { return ProviderKind::Local; }
  std::vector<AbstractDoc> fetch(const AtomicTerm& atom, std::size_t limit) override;

  const std::vector<AbstractDoc>& docs() const { return docs_; }

 private:
  std::vector<AbstractDoc> docs_;
  std::vector<std::vector<std::string>> tokens_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;
};

/// arXiv Atom query API: GET {base}/api/query?search_query=all:"atom"&start=0&max_results=n
class ArxivProvider : public Provider {
 public:
  explicit ArxivProvider(ProviderConfig config);
  ProviderKind kind() const override { return ProviderKind::Arxiv; }
  std::vector<AbstractDoc> fetch(const AtomicTerm& atom, std::size_t limit) override;

  static std::vector<AbstractDoc> parse_feed(const std::string& xml);

 private:
  ProviderConfig config_;
  RateLimiter limiter_;
};

/// PubMed E-utilities: esearch for ids, then efetch for titles and abstracts.
class PubmedProvider : public Provider {
 public:
  explicit PubmedProvider(ProviderConfig config);
  ProviderKind kind() const override { return ProviderKind::Pubmed; }
  std::vector<AbstractDoc> fetch(const AtomicTerm& atom, std::size_t limit) override;

  static std::vector<std::string> parse_search_ids(const std::string& xml);
  static std::vector<AbstractDoc> parse_articles(const std::string& xml);

 private:
  ProviderConfig config_;
  RateLimiter limiter_;
};

/// acc ∩ clause_set, or acc \ clause_set for a negative clause.
DocSet combine(const DocSet& acc, const DocSet& clause_set, bool negative);

/// Union keyed by (provider, doc_id). Documents from different providers
/// whose titles share a title_merge_key collapse into the first one in key
/// order, which records the others in also_known_as.
DocSet merge_providers(const std::vector<DocSet>& sets);

struct ExecuteResult {
  DocSet docs;
  bool partial = false;
  std::vector<std::string> failures;
};

class ProviderGateway {
 public:
  explicit ProviderGateway(std::vector<std::shared_ptr<Provider>> providers,
                           Clock clock = system_now);

  /// Cached by (provider, atom, limit) for the gateway's lifetime.
  DocSet fetch_term(Provider& provider, const AtomicTerm& atom, std::size_t limit);

  /// Per provider: union within each positive clause, intersection across
  /// positive clauses, then difference for every negative clause. Providers
  /// that fail are dropped and the result is flagged partial. Throws
  /// AllProvidersFailed when none succeed.
  ExecuteResult execute(const NormalizedQuery& nq, std::size_t limit);

  const std::vector<std::shared_ptr<Provider>>& providers() const { return providers_; }
  std::size_t cache_misses() const;

 private:
  using CacheKey = std::tuple<ProviderKind, std::string, bool, std::size_t>;

  DocSet execute_on(Provider& provider, const NormalizedQuery& nq, std::size_t limit);

  std::vector<std::shared_ptr<Provider>> providers_;
  Clock clock_;
  mutable std::shared_mutex cache_mutex_;
  std::map<CacheKey, DocSet> cache_;
  std::size_t misses_ = 0;
};

}  // namespace scopesearch
