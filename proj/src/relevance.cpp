#include "scopesearch/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scopesearch/similarity.hpp"

namespace scopesearch {

std::string_view to_string(Label label) {
  return label == Label::Relevant ? "relevant" : "irrelevant";
}

std::optional<Label> label_from_string(std::string_view text) {
  if (text == "relevant") return Label::Relevant;
  if (text == "irrelevant") return Label::Irrelevant;
  return std::nullopt;
}

QueryInfo QueryInfo::from_text(std::string_view text) {
  auto info = from_ast(parse(text));
  info.text = std::string(text);
  return info;
}

QueryInfo QueryInfo::from_ast(QueryAstPtr ast) {
  QueryInfo info;
  info.text = render(*ast);
  info.normalized = normalize(*ast);
  info.has_negation = scopesearch::has_negation(info.normalized);
  for (const auto& atom : atoms_in_order(*ast)) {
    for (const auto& word : match_tokens(atom.text)) info.stems.push_back(porter_stem(word));
  }
  info.ast = std::move(ast);
  return info;
}

double query_sim(const QueryInfo& q, const QueryInfo& other) {
  double sim = monge_elkan(q.stems, other.stems);
  return q.has_negation != other.has_negation ? -sim : sim;
}

double personalization_score(const TermVector& doc, std::span<const HistoryEntry> history,
                             const QueryInfo& q) {
  double score = 0.0;
  for (const auto& entry : history) {
    if (entry.relevant_docs.empty()) continue;
    double similarity = 0.0;
    for (const auto& relevant : entry.relevant_docs) similarity += cosine_sim(doc, relevant);
    score += query_sim(q, entry.query) * similarity /
             static_cast<double>(entry.relevant_docs.size());
  }
  return score;
}

FilterOutcome apply_score_filter(std::span<const double> scores, const FilterConfig& config) {
  FilterOutcome out;
  const auto n = scores.size();
  out.keep.assign(n, true);
  if (n == 0) return out;
  out.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
  double variance = 0.0;
  for (double s : scores) variance += (s - out.mean) * (s - out.mean);
  out.sd = std::sqrt(variance / static_cast<double>(n));
  if (n < 2) return out;

  const double threshold = out.mean - config.sd_multiplier * out.sd;
  std::vector<bool> candidate(n);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    candidate[i] = scores[i] >= threshold;
    kept += candidate[i] ? 1 : 0;
  }
  const auto required =
      static_cast<std::size_t>(std::ceil(config.min_retention * static_cast<double>(n) - 1e-9));
  if (kept >= required) {
    out.keep = std::move(candidate);
    out.applied = true;
  }
  return out;
}

std::vector<ScoredDoc> filter_and_rank(std::vector<ScoredDoc> scored, const FilterConfig& config) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& s : scored) scores.push_back(s.score);
  auto outcome = apply_score_filter(scores, config);

  std::vector<ScoredDoc> out;
  out.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (outcome.keep[i]) out.push_back(std::move(scored[i]));
  }
  std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc.key < b.doc.key;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

std::vector<ScoredDoc> filter_and_rank(const DocSet& docs, std::span<const HistoryEntry> history,
                                       const QueryInfo& q, const FilterConfig& config) {
  std::vector<ScoredDoc> scored;
  scored.reserve(docs.size());
  for (const auto& [key, doc] : docs) {
    double score = history.empty() ? 0.0
                                   : personalization_score(build_term_vector(doc.text()), history, q);
    scored.push_back(ScoredDoc{doc, score, 0});
  }
  return filter_and_rank(std::move(scored), config);
}

UnknownDocLabel::UnknownDocLabel(const DocKey& key)
    : std::invalid_argument("label refers to a document outside the result list: " +
                            to_string(key)) {}

std::vector<RerankedDoc> rerank_within_query(const std::vector<ScoredDoc>& results,
                                             const std::map<DocKey, Label>& labels) {
  std::map<DocKey, std::size_t> index;
  for (std::size_t i = 0; i < results.size(); ++i) index.emplace(results[i].doc.key, i);
  for (const auto& [key, label] : labels) {
    if (!index.count(key)) throw UnknownDocLabel(key);
  }

  std::vector<TermVector> vectors;
  vectors.reserve(results.size());
  for (const auto& r : results) vectors.push_back(build_term_vector(r.doc.text()));

  std::vector<std::size_t> relevant;
  std::vector<std::size_t> irrelevant;
  std::vector<std::size_t> unlabeled;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto it = labels.find(results[i].doc.key);
    if (it == labels.end()) unlabeled.push_back(i);
    else if (it->second == Label::Relevant) relevant.push_back(i);
    else irrelevant.push_back(i);
  }

  auto mean_cosine = [&](std::size_t i, const std::vector<std::size_t>& group) {
    if (group.empty()) return 0.0;
    double total = 0.0;
    for (auto j : group) total += cosine_sim(vectors[i], vectors[j]);
    return total / static_cast<double>(group.size());
  };

  std::vector<double> feedback(results.size(), 0.0);
  for (std::size_t i = 0; i < results.size(); ++i) {
    feedback[i] = mean_cosine(i, relevant) - mean_cosine(i, irrelevant);
  }
  std::stable_sort(unlabeled.begin(), unlabeled.end(),
                   [&](std::size_t a, std::size_t b) { return feedback[a] > feedback[b]; });

  std::vector<RerankedDoc> out;
  out.reserve(results.size());
  auto emit = [&](const std::vector<std::size_t>& group) {
    for (auto i : group) {
      auto it = labels.find(results[i].doc.key);
      std::optional<Label> label;
      if (it != labels.end()) label = it->second;
      out.push_back(RerankedDoc{results[i], label, feedback[i], out.size() + 1});
    }
  };
  emit(relevant);
  emit(unlabeled);
  emit(irrelevant);
  return out;
}

}  // namespace scopesearch
