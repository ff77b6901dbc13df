#pragma once

// Boolean query language: parsing, clause-form normalization, rendering and
// a direct text evaluator.
//
//   query := expr
//   expr  := term (("and" | "or" | "and not") term)*
//   term  := ATOM | PHRASE | "(" expr ")"
//
// All operators share one precedence level and associate left to right, so
// "a or (b and c) and not e" reads as ((a or (b and c)) and not e).
// Parentheses override. Keywords are case-insensitive and reserved unless
// quoted. Consecutive bare words form a single atom ("medical nanorobotics").

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace scopesearch {

struct AtomicTerm {
  std::string text;     // lowercase, single-spaced, non-empty
  bool phrase = false;  // quoted by the user and spans several words

  auto operator<=>(const AtomicTerm&) const = default;
};

enum class QueryErrorKind {
  EmptyQuery,
  DanglingOperator,
  ForbiddenNegation,
  UnbalancedParens,
  UnterminatedPhrase,
  UnexpectedToken,
};

std::string_view to_string(QueryErrorKind kind);

class QueryError : public std::runtime_error {
 public:
  QueryError(QueryErrorKind kind, std::size_t position, const std::string& message);

  QueryErrorKind kind() const noexcept { return kind_; }
  /// Byte offset into the query text where the problem was detected.
  std::size_t position() const noexcept { return position_; }

 private:
  QueryErrorKind kind_;
  std::size_t position_;
};

class QueryAst;
using QueryAstPtr = std::shared_ptr<const QueryAst>;

/// Immutable query tree. The right operand of AndNot is an atom or a
/// disjunction of atoms; AndNot never occurs beneath an Or.
class QueryAst {
 public:
  enum class Kind { Atom, And, Or, AndNot };

  static QueryAstPtr atom(AtomicTerm term);
  static QueryAstPtr atom(std::string_view text);
  static QueryAstPtr make_and(QueryAstPtr left, QueryAstPtr right);
  static QueryAstPtr make_or(QueryAstPtr left, QueryAstPtr right);
  static QueryAstPtr make_and_not(QueryAstPtr left, QueryAstPtr right);

  Kind kind() const noexcept { return kind_; }
  const AtomicTerm& term() const;
  const QueryAst& left() const;
  const QueryAst& right() const;
  const QueryAstPtr& left_ptr() const { return left_; }
  const QueryAstPtr& right_ptr() const { return right_; }

  bool contains_negation() const noexcept;

  friend bool operator==(const QueryAst& a, const QueryAst& b);

 private:
  QueryAst(Kind kind, AtomicTerm term, QueryAstPtr left, QueryAstPtr right);

  Kind kind_;
  AtomicTerm term_;
  QueryAstPtr left_;
  QueryAstPtr right_;
};

struct Clause {
  std::set<AtomicTerm> positives;
  std::set<AtomicTerm> negatives;

  bool is_negative() const noexcept { return !negatives.empty(); }
  bool operator==(const Clause&) const = default;
};

/// Conjunction of clauses. A positive clause is a disjunction of atoms; a
/// negative clause holds exactly one atom and excludes documents matching it.
struct NormalizedQuery {
  std::vector<Clause> clauses;

  bool operator==(const NormalizedQuery&) const = default;
};

enum class Polarity { Positive, Negative };

struct PolarTerm {
  AtomicTerm term;
  Polarity polarity;

  auto operator<=>(const PolarTerm&) const = default;
};

QueryAstPtr parse(std::string_view text);

NormalizedQuery normalize(const QueryAst& ast);

/// Throws std::invalid_argument unless the clause-form invariants hold and the
/// first clause is positive.
void validate(const NormalizedQuery& nq);

/// Union of clause members tagged by polarity, ordered and deduplicated.
std::set<PolarTerm> atomic_terms(const NormalizedQuery& nq);

/// Atoms in order of first appearance in the tree, deduplicated.
std::vector<AtomicTerm> atoms_in_order(const QueryAst& ast);

bool has_negation(const NormalizedQuery& nq);

std::string render(const QueryAst& ast);
std::string render(const NormalizedQuery& nq);
std::string render(const AtomicTerm& term);

/// Lowercased alphanumeric tokens; everything else separates tokens.
std::vector<std::string> match_tokens(std::string_view text);

/// Whether an atom occurs in already-tokenized text. Phrases must appear
/// contiguously; other multi-word atoms need every word somewhere.
bool atom_matches(const AtomicTerm& term, const std::vector<std::string>& text_tokens);

bool evaluate(const NormalizedQuery& nq, std::string_view text);
bool evaluate(const NormalizedQuery& nq, const std::vector<std::string>& text_tokens);

/// The EBNF above as printable help text.
std::string_view grammar_help();

}  // namespace scopesearch
