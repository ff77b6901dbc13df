#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace scopesearch {

class StopWords {
 public:
  /// The list shipped in data/stopwords.txt, compiled in.
  static const StopWords& builtin();
  /// One token per line; blank lines and lines starting with '#' are ignored.
  static StopWords from_file(const std::string& path);
  static StopWords from_text(std::string_view text);

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Sparse term -> frequency map. Keys are never stop-words and counts are
/// never zero; the squared norm is kept in sync with the weights.
class TermVector {
 public:
  using Weights = std::map<std::string, std::uint64_t>;

  TermVector() = default;
  /// Zero counts are dropped.
  explicit TermVector(const Weights& weights);

  void add(const std::string& term, std::uint64_t count = 1);
  TermVector& operator+=(const TermVector& other);

  const Weights& weights() const { return weights_; }
  std::uint64_t count(const std::string& term) const;
  bool empty() const { return weights_.empty(); }
  std::size_t size() const { return weights_.size(); }

  double squared_norm() const { return squared_norm_; }
  double norm() const;

  /// Terms by descending frequency, ties by term.
  std::vector<std::pair<std::string, std::uint64_t>> by_frequency() const;

  bool operator==(const TermVector& other) const { return weights_ == other.weights_; }

 private:
  Weights weights_;
  double squared_norm_ = 0.0;
};

/// Lowercase, split on anything that is not alphanumeric, count, and drop
/// stop-words.
TermVector build_term_vector(std::string_view text,
                             const StopWords& stop_words = StopWords::builtin());

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words. Words of
/// length <= 2 and words with non-letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace scopesearch
