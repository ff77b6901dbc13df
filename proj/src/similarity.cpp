#include "scopesearch/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace scopesearch {

double cosine_sim(const TermVector& u, const TermVector& v) {
  if (u.empty() || v.empty()) return 0.0;
  const auto& small = u.size() <= v.size() ? u : v;
  const auto& large = u.size() <= v.size() ? v : u;
  double dot = 0.0;
  for (const auto& [term, count] : small.weights()) {
    auto other = large.count(term);
    if (other != 0) dot += static_cast<double>(count) * static_cast<double>(other);
  }
  double sim = dot / std::sqrt(u.squared_norm() * v.squared_norm());
  return std::clamp(sim, 0.0, 1.0);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t above = row[j];
      std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
  auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double monge_elkan(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0.0;
  double total = 0.0;
  for (const auto& token : a) {
    double best = 0.0;
    for (const auto& other : b) best = std::max(best, levenshtein_similarity(token, other));
    total += best;
  }
  return total / static_cast<double>(a.size());
}

}  // namespace scopesearch
