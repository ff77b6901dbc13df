#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scopesearch/query.hpp"
#include "scopesearch/text.hpp"

namespace scopesearch {

enum class SuggestionDirection { Add, Remove };

std::string_view to_string(SuggestionDirection direction);

struct Suggestion {
  std::string term;
  SuggestionDirection direction = SuggestionDirection::Add;
  double z_score = 0.0;
  std::string suggested_query;

  bool operator==(const Suggestion&) const = default;
};

/// Element-wise sum.
TermVector joined_vector(std::span<const TermVector> abstracts);

struct TermZScore {
  std::string term;
  std::uint64_t frequency = 0;
  double z_score = 0.0;
};

/// z-score of every distinct term's frequency against the population mean and
/// standard deviation of all distinct-term frequencies. Empty when the
/// vector is empty or every frequency is equal.
std::vector<TermZScore> term_z_scores(const TermVector& joined);

/// Terms with z >= 1 from the relevant side become "and X" suggestions, from
/// the irrelevant side "and not X" suggestions. Atoms and atom words of the
/// source query and stop-words are skipped. Each side is sorted by descending
/// z-score (ties by term) and truncated to `max_per_side`; add suggestions come
/// first.
std::vector<Suggestion> suggest_terms(const QueryAst& last_query,
                                      std::span<const TermVector> relevant,
                                      std::span<const TermVector> irrelevant,
                                      std::size_t max_per_side = 5,
                                      const StopWords& stop_words = StopWords::builtin());

QueryAstPtr apply_suggestion(const Suggestion& suggestion);

}  // namespace scopesearch
