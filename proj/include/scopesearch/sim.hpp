#pragma once

// Desk-scale simulation of the drift and suggestion experiments: synthetic
// topic corpora, a labeler that knows each document's generating topic, and
// the real search engine in between.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopesearch/doc.hpp"
#include "scopesearch/relevance.hpp"
#include "scopesearch/rng.hpp"
#include "scopesearch/store.hpp"

namespace scopesearch {

class SimConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CorpusConfig {
  std::size_t topics = 2;
  std::size_t docs_per_topic = 300;
  std::size_t tokens_per_doc = 120;
  std::size_t title_tokens = 8;
  std::size_t vocabulary_size = 400;
  /// Fraction of each topic's vocabulary shared by all topics.
  double overlap = 0.10;
  double zipf_exponent = 1.0;
};

struct SyntheticTopic {
  std::size_t topic_id = 0;
  /// Most probable first.
  std::vector<std::string> vocabulary;
  std::vector<double> cumulative;  // Zipf weights, running sum
  /// Indices into vocabulary of the terms no other topic uses.
  std::vector<std::size_t> specific;
};

struct SyntheticCorpus {
  std::vector<SyntheticTopic> topics;
  std::vector<std::string> shared_terms;
  std::vector<AbstractDoc> docs;
  std::map<std::string, std::size_t> topic_of;  // doc_id -> topic
};

SyntheticCorpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

/// Labels a document relevant iff its topic is the current one; each label
/// is flipped with probability epsilon.
class SimUser {
 public:
  SimUser(const SyntheticCorpus& corpus, double epsilon, std::uint64_t seed);
  Label judge(const DocKey& doc, std::size_t current_topic);

 private:
  const SyntheticCorpus& corpus_;
  double epsilon_;
  Rng rng_;
};

struct DriftConfig {
  CorpusConfig corpus;
  double epsilon = 0.0;
  std::size_t queries_per_topic = 3;
  std::size_t k = 10;
  /// Topic-specific query terms are drawn from this many most probable
  /// specific terms.
  std::size_t query_term_pool = 40;
  FilterConfig filter;
};

struct ModeCurve {
  HistoryMode mode = HistoryMode::Base;
  std::vector<double> mean;  // per query index
  std::vector<double> standard_error;
  std::vector<std::vector<double>> per_seed;  // [seed][index]
};

struct DriftReport {
  DriftConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<ModeCurve> curves;

  const ModeCurve& curve(HistoryMode mode) const;
};

DriftReport run_drift_experiment(const std::vector<HistoryMode>& modes,
                                 const std::vector<std::uint64_t>& seeds, const DriftConfig& config);

enum class SuggestionPolicy { SearchOnly, SuggestionOnly, SuggestionAndSearch };

std::string_view to_string(SuggestionPolicy policy);
std::optional<SuggestionPolicy> suggestion_policy_from_string(std::string_view text);

struct SuggestionConfig {
  CorpusConfig corpus;
  double epsilon = 0.0;
  std::size_t k = 10;
  /// Percent precision@k to reach.
  double threshold = 50.0;
  std::size_t max_rounds = 10;
  std::size_t query_term_pool = 60;
  /// Off-topic terms or-ed into every pool query.
  std::size_t pool_distractors = 2;
  std::size_t max_per_side = 5;
  FilterConfig filter;
};

struct PolicyResult {
  SuggestionPolicy policy = SuggestionPolicy::SearchOnly;
  /// Queries issued until the threshold was met; max_rounds + 1 when it never was.
  std::vector<std::size_t> queries_per_seed;
  double mean_queries = 0.0;
  double standard_error = 0.0;
  double reached_fraction = 0.0;
};

struct SuggestionReport {
  SuggestionConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<PolicyResult> policies;

  const PolicyResult& result(SuggestionPolicy policy) const;
};

SuggestionReport run_suggestion_experiment(const std::vector<SuggestionPolicy>& policies,
                                           const std::vector<std::uint64_t>& seeds,
                                           const SuggestionConfig& config);

/// Sample standard deviation divided by sqrt(n); 0 for fewer than two values.
double standard_error(const std::vector<double>& values);

nlohmann::json to_json(const DriftReport& report);
nlohmann::json to_json(const SuggestionReport& report);
std::string format_table(const DriftReport& report);
std::string format_table(const SuggestionReport& report);
/// Tab-separated rows: query_index, mode, mean, stderr.
std::string plot_data(const DriftReport& report);

}  // namespace scopesearch
