#pragma once

// Independent reference implementations and generators shared by the unit
// and acceptance suites. Nothing here calls the code under test except to
// build inputs.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "scopesearch/doc.hpp"
#include "scopesearch/query.hpp"
#include "scopesearch/rng.hpp"

namespace oracle {

using scopesearch::QueryAst;
using scopesearch::QueryAstPtr;
using scopesearch::Rng;

// Full (|a|+1) x (|b|+1) dynamic-programming table.
inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

inline double monge_elkan(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  double total = 0.0;
  for (const auto& x : a) {
    double best = 0.0;
    for (const auto& y : b) {
      auto longest = std::max(x.size(), y.size());
      double sim = longest == 0 ? 1.0
                                : 1.0 - static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
      best = std::max(best, sim);
    }
    total += best;
  }
  return total / static_cast<double>(a.size());
}

inline double cosine(const std::map<std::string, double>& u, const std::map<std::string, double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (const auto& [t, w] : u) {
    nu += w * w;
    auto it = v.find(t);
    if (it != v.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : v) nv += w * w;
  if (nu == 0 || nv == 0) return 0.0;
  return dot / std::sqrt(nu * nv);
}

inline std::string random_string(Rng& rng, std::size_t max_len, std::string_view alphabet = "abcde") {
  std::string s;
  auto n = rng.below(max_len + 1);
  for (std::uint64_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}

// Atom i is the single word "w<i>".
inline std::string atom_word(std::size_t i) { return "w" + std::to_string(i); }

// Direct recursive truth value of an AST under an atom assignment.
inline bool eval_ast(const QueryAst& ast, const std::map<std::string, bool>& present) {
  switch (ast.kind()) {
    case QueryAst::Kind::Atom: return present.at(ast.term().text);
    case QueryAst::Kind::And: return eval_ast(ast.left(), present) && eval_ast(ast.right(), present);
    case QueryAst::Kind::Or: return eval_ast(ast.left(), present) || eval_ast(ast.right(), present);
    case QueryAst::Kind::AndNot:
      return eval_ast(ast.left(), present) && !eval_ast(ast.right(), present);
  }
  return false;
}

// Random query trees over `atoms` distinct words. Negation only appears where
// the clause form can express it: never beneath an Or, and the right side of
// AndNot is an atom or a disjunction of atoms.
class AstGenerator {
 public:
  AstGenerator(Rng& rng, std::size_t atoms) : rng_(rng), atoms_(atoms) {}

  QueryAstPtr any(int depth) {
    if (depth <= 0) return atom();
    switch (rng_.below(4)) {
      case 0: return atom();
      case 1: return QueryAst::make_and(any(depth - 1), any(depth - 1));
      case 2: return QueryAst::make_or(positive(depth - 1), positive(depth - 1));
      default: return QueryAst::make_and_not(any(depth - 1), negatable(depth - 1));
    }
  }

  QueryAstPtr positive(int depth) {
    if (depth <= 0) return atom();
    switch (rng_.below(3)) {
      case 0: return atom();
      case 1: return QueryAst::make_and(positive(depth - 1), positive(depth - 1));
      default: return QueryAst::make_or(positive(depth - 1), positive(depth - 1));
    }
  }

  QueryAstPtr negatable(int depth) {
    if (depth <= 0 || rng_.bernoulli(0.6)) return atom();
    return QueryAst::make_or(negatable(depth - 1), negatable(depth - 1));
  }

  QueryAstPtr atom() { return QueryAst::atom(atom_word(rng_.below(atoms_))); }

 private:
  Rng& rng_;
  std::size_t atoms_;
};

// Documents made of random words drawn from a small vocabulary, so random
// queries over the same vocabulary match a useful fraction of them.
inline std::vector<scopesearch::AbstractDoc> random_corpus(Rng& rng, std::size_t n,
                                                           std::size_t vocabulary) {
  std::vector<scopesearch::AbstractDoc> docs;
  for (std::size_t i = 0; i < n; ++i) {
    scopesearch::AbstractDoc doc;
    doc.key = {scopesearch::ProviderKind::Local, "doc" + std::to_string(i)};
    doc.title = "title " + std::to_string(i);
    std::string text;
    auto words = 2 + rng.below(6);
    for (std::uint64_t w = 0; w < words; ++w) {
      if (!text.empty()) text += ' ';
      text += atom_word(rng.below(vocabulary));
    }
    doc.abstract_text = text;
    docs.push_back(doc);
  }
  return docs;
}

// Population mean and standard deviation, two passes.
inline std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace oracle
