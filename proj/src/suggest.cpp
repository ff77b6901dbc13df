#include "scopesearch/suggest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace scopesearch {

std::string_view to_string(SuggestionDirection direction) {
  return direction == SuggestionDirection::Add ? "add" : "remove";
}

TermVector joined_vector(std::span<const TermVector> abstracts) {
  TermVector joined;
  for (const auto& v : abstracts) joined += v;
  return joined;
}

std::vector<TermZScore> term_z_scores(const TermVector& joined) {
  std::vector<TermZScore> out;
  if (joined.empty()) return out;
  const auto n = static_cast<double>(joined.size());
  double mean = 0.0;
  for (const auto& [term, f] : joined.weights()) mean += static_cast<double>(f);
  mean /= n;
  double variance = 0.0;
  for (const auto& [term, f] : joined.weights()) {
    double d = static_cast<double>(f) - mean;
    variance += d * d;
  }
  double sd = std::sqrt(variance / n);
  if (sd == 0.0) return out;
  for (const auto& [term, f] : joined.by_frequency()) {
    out.push_back({term, f, (static_cast<double>(f) - mean) / sd});
  }
  return out;
}

namespace {

std::vector<Suggestion> one_side(const QueryAst& last_query, const std::set<std::string>& excluded,
                                 std::span<const TermVector> docs, SuggestionDirection direction,
                                 std::size_t max_per_side, const StopWords& stop_words) {
  std::vector<Suggestion> out;
  const std::string base = render(last_query);
  const std::string glue = direction == SuggestionDirection::Add ? " and " : " and not ";
  for (const auto& z : term_z_scores(joined_vector(docs))) {
    if (out.size() == max_per_side) break;
    if (z.z_score < 1.0) break;  // sorted by frequency, so z only decreases
    if (excluded.count(z.term) || stop_words.contains(z.term)) continue;
    out.push_back(Suggestion{z.term, direction, z.z_score, base + glue + render(AtomicTerm{z.term, false})});
  }
  return out;
}

}  // namespace

std::vector<Suggestion> suggest_terms(const QueryAst& last_query,
                                      std::span<const TermVector> relevant,
                                      std::span<const TermVector> irrelevant,
                                      std::size_t max_per_side, const StopWords& stop_words) {
  std::set<std::string> excluded{"and", "or", "not"};
  for (const auto& atom : atoms_in_order(last_query)) {
    excluded.insert(atom.text);
    for (const auto& word : match_tokens(atom.text)) excluded.insert(word);
  }
  auto out = one_side(last_query, excluded, relevant, SuggestionDirection::Add, max_per_side,
                      stop_words);
  auto removals = one_side(last_query, excluded, irrelevant, SuggestionDirection::Remove,
                           max_per_side, stop_words);
  out.insert(out.end(), removals.begin(), removals.end());
  return out;
}

QueryAstPtr apply_suggestion(const Suggestion& suggestion) {
  return parse(suggestion.suggested_query);
}

}  // namespace scopesearch
