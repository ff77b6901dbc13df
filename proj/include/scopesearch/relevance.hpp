#pragma once

// History-weighted personalization. A candidate abstract a is scored as
//
//   score(a) = sum_i simq(q, q_i) * mean_{a' in relevant_i} cos(a, a')
//
// where simq is Monge-Elkan over stemmed query words (negated when exactly
// one of the two queries contains "and not"). Scores far below the mean are
// then dropped, unless that would discard too much of the list.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scopesearch/doc.hpp"
#include "scopesearch/query.hpp"
#include "scopesearch/text.hpp"

namespace scopesearch {

enum class Label { Relevant, Irrelevant };

std::string_view to_string(Label label);
std::optional<Label> label_from_string(std::string_view text);

/// A parsed query together with the stemmed word list used for query
/// similarity.
struct QueryInfo {
  std::string text;
  QueryAstPtr ast;
  NormalizedQuery normalized;
  bool has_negation = false;
  std::vector<std::string> stems;

  static QueryInfo from_text(std::string_view text);
  static QueryInfo from_ast(QueryAstPtr ast);
};

struct HistoryEntry {
  QueryInfo query;
  std::vector<TermVector> relevant_docs;
  std::vector<TermVector> irrelevant_docs;
};

struct ScoredDoc {
  AbstractDoc doc;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct FilterConfig {
  double sd_multiplier = 2.0;
  double min_retention = 0.6;
};

struct FilterOutcome {
  std::vector<bool> keep;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  /// The candidate filter passed the retention check (it may still drop
  /// nothing).
  bool applied = false;
};

double query_sim(const QueryInfo& q, const QueryInfo& other);

double personalization_score(const TermVector& doc, std::span<const HistoryEntry> history,
                             const QueryInfo& q);

/// Drops scores below mean - k*sd, but only when at least `min_retention` of
/// the list survives. Lists of fewer than two scores are never filtered.
FilterOutcome apply_score_filter(std::span<const double> scores, const FilterConfig& config);

/// Filters pre-scored docs and sorts by descending score, ties by doc key.
std::vector<ScoredDoc> filter_and_rank(std::vector<ScoredDoc> scored, const FilterConfig& config);

std::vector<ScoredDoc> filter_and_rank(const DocSet& docs, std::span<const HistoryEntry> history,
                                       const QueryInfo& q, const FilterConfig& config = {});

struct RerankedDoc {
  ScoredDoc result;
  std::optional<Label> label;
  /// mean cosine to relevant minus mean cosine to irrelevant
  double feedback = 0.0;
  std::size_t position = 0;  // 1-based display position
};

class UnknownDocLabel : public std::invalid_argument {
 public:
  explicit UnknownDocLabel(const DocKey& key);
};

/// Display order for a single query: relevant results first, then unlabeled
/// results by feedback, then irrelevant ones. Stable within each group.
std::vector<RerankedDoc> rerank_within_query(const std::vector<ScoredDoc>& results,
                                             const std::map<DocKey, Label>& labels);

}  // namespace scopesearch
