#include "scopesearch/query.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <utility>

namespace scopesearch {

namespace {

char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_keyword(std::string_view word) {
  return word == "and" || word == "or" || word == "not";
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (is_space(c)) {
      if (!current.empty()) words.push_back(std::exchange(current, {}));
    } else {
      current.push_back(ascii_lower(c));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Word, Phrase, LParen, RParen, And, Or, Not, End };

struct Token {
  Tok type;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(std::string_view input) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < input.size()) {
    char c = input[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '(') {
      tokens.push_back({Tok::LParen, "(", i++});
    } else if (c == ')') {
      tokens.push_back({Tok::RParen, ")", i++});
    } else if (c == '"') {
      auto close = input.find('"', i + 1);
      if (close == std::string_view::npos) {
        throw QueryError(QueryErrorKind::UnterminatedPhrase, i, "unterminated quoted phrase");
      }
      tokens.push_back({Tok::Phrase, std::string(input.substr(i + 1, close - i - 1)), i});
      i = close + 1;
    } else {
      std::size_t start = i;
      while (i < input.size() && !is_space(input[i]) && input[i] != '(' && input[i] != ')' &&
             input[i] != '"') {
        ++i;
      }
      std::string word(input.substr(start, i - start));
      std::transform(word.begin(), word.end(), word.begin(), ascii_lower);
      Tok type = Tok::Word;
      if (word == "and") type = Tok::And;
      else if (word == "or") type = Tok::Or;
      else if (word == "not") type = Tok::Not;
      tokens.push_back({type, std::move(word), start});
    }
  }
  tokens.push_back({Tok::End, "", input.size()});
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

bool is_atom_disjunction(const QueryAst& node) {
  switch (node.kind()) {
    case QueryAst::Kind::Atom:
      return true;
    case QueryAst::Kind::Or:
      return is_atom_disjunction(node.left()) && is_atom_disjunction(node.right());
    default:
      return false;
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  QueryAstPtr parse_query() {
    if (peek().type == Tok::End) {
      throw QueryError(QueryErrorKind::EmptyQuery, 0, "query is empty");
    }
    auto ast = parse_expr();
    if (peek().type == Tok::RParen) {
      throw QueryError(QueryErrorKind::UnbalancedParens, peek().pos, "unmatched ')'");
    }
    return ast;
  }

 private:
  const Token& peek() const { return tokens_[index_]; }
  const Token& advance() { return tokens_[index_++]; }

  QueryAstPtr parse_expr() {
    auto left = parse_term(false);
    while (true) {
      const Token& op = peek();
      switch (op.type) {
        case Tok::And: {
          advance();
          if (peek().type == Tok::Not) {
            const Token& not_tok = advance();
            auto right = parse_negated_term(not_tok.pos);
            left = QueryAst::make_and_not(std::move(left), std::move(right));
          } else {
            left = QueryAst::make_and(std::move(left), parse_term(true));
          }
          break;
        }
        case Tok::Or: {
          advance();
          if (peek().type == Tok::Not) {
            throw QueryError(QueryErrorKind::ForbiddenNegation, peek().pos,
                             "\"or not\" is not allowed; only \"and not\" may negate a term");
          }
          auto right = parse_term(true);
          if (left->contains_negation() || right->contains_negation()) {
            throw QueryError(QueryErrorKind::ForbiddenNegation, op.pos,
                             "a negated term cannot be combined with \"or\"");
          }
          left = QueryAst::make_or(std::move(left), std::move(right));
          break;
        }
        case Tok::Not:
          throw QueryError(QueryErrorKind::ForbiddenNegation, op.pos,
                           "\"not\" must follow \"and\"");
        case Tok::Word:
        case Tok::Phrase:
        case Tok::LParen:
          throw QueryError(QueryErrorKind::UnexpectedToken, op.pos,
                           "expected \"and\", \"or\" or \"and not\" before '" + op.text + "'");
        case Tok::RParen:
        case Tok::End:
          return left;
      }
    }
  }

  QueryAstPtr parse_negated_term(std::size_t not_pos) {
    if (peek().type == Tok::Not) {
      throw QueryError(QueryErrorKind::ForbiddenNegation, peek().pos, "double negation");
    }
    auto term = parse_term(true);
    if (!is_atom_disjunction(*term)) {
      throw QueryError(QueryErrorKind::ForbiddenNegation, not_pos,
                       "\"and not\" must be followed by a term or a group of terms joined by \"or\"");
    }
    return term;
  }

  QueryAstPtr parse_term(bool after_operator) {
    const Token& tok = peek();
    switch (tok.type) {
      case Tok::Word: {
        std::vector<std::string> words;
        while (peek().type == Tok::Word) words.push_back(advance().text);
        return QueryAst::atom(AtomicTerm{join_words(words), false});
      }
      case Tok::Phrase: {
        advance();
        auto words = split_words(tok.text);
        if (words.empty()) {
          throw QueryError(QueryErrorKind::UnexpectedToken, tok.pos, "empty quoted phrase");
        }
        bool phrase = words.size() > 1;
        return QueryAst::atom(AtomicTerm{join_words(words), phrase});
      }
      case Tok::LParen: {
        advance();
        if (peek().type == Tok::RParen) {
          throw QueryError(QueryErrorKind::UnexpectedToken, peek().pos, "empty parentheses");
        }
        ++depth_;
        auto inner = parse_expr();
        --depth_;
        if (peek().type != Tok::RParen) {
          throw QueryError(QueryErrorKind::UnbalancedParens, tok.pos, "unmatched '('");
        }
        advance();
        return inner;
      }
      case Tok::And:
      case Tok::Or:
        throw QueryError(QueryErrorKind::DanglingOperator, tok.pos,
                         "operator '" + tok.text + "' has no left operand");
      case Tok::Not:
        throw QueryError(QueryErrorKind::ForbiddenNegation, tok.pos,
                         "a query cannot start with \"not\"; use \"and not\" after a term");
      case Tok::RParen:
        if (after_operator) {
          throw QueryError(QueryErrorKind::DanglingOperator, tok.pos,
                           "operator has no right operand");
        }
        throw QueryError(QueryErrorKind::UnbalancedParens, tok.pos, "unmatched ')'");
      case Tok::End:
        if (after_operator) {
          throw QueryError(QueryErrorKind::DanglingOperator, tok.pos,
                           "operator has no right operand");
        }
        if (depth_ > 0) {
          throw QueryError(QueryErrorKind::UnbalancedParens, tok.pos, "unmatched '('");
        }
        throw QueryError(QueryErrorKind::EmptyQuery, tok.pos, "query is empty");
    }
    throw QueryError(QueryErrorKind::UnexpectedToken, tok.pos, "unexpected token");
  }

  std::vector<Token> tokens_;
  std::size_t index_ = 0;
  int depth_ = 0;
};

void collect_atoms(const QueryAst& node, std::vector<AtomicTerm>& out) {
  if (node.kind() == QueryAst::Kind::Atom) {
    if (std::find(out.begin(), out.end(), node.term()) == out.end()) out.push_back(node.term());
    return;
  }
  collect_atoms(node.left(), out);
  collect_atoms(node.right(), out);
}

std::string render_operand(const QueryAst& node) {
  if (node.kind() == QueryAst::Kind::Atom) return render(node.term());
  return "(" + render(node) + ")";
}

bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

}  // namespace

std::string_view to_string(QueryErrorKind kind) {
  switch (kind) {
    case QueryErrorKind::EmptyQuery: return "EmptyQuery";
    case QueryErrorKind::DanglingOperator: return "DanglingOperator";
    case QueryErrorKind::ForbiddenNegation: return "ForbiddenNegation";
    case QueryErrorKind::UnbalancedParens: return "UnbalancedParens";
    case QueryErrorKind::UnterminatedPhrase: return "UnterminatedPhrase";
    case QueryErrorKind::UnexpectedToken: return "UnexpectedToken";
  }
  return "UnknownQueryError";
}

QueryError::QueryError(QueryErrorKind kind, std::size_t position, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " at " + std::to_string(position) + ": " +
                         message),
      kind_(kind),
      position_(position) {}

// ---------------------------------------------------------------------------
// QueryAst

QueryAst::QueryAst(Kind kind, AtomicTerm term, QueryAstPtr left, QueryAstPtr right)
    : kind_(kind), term_(std::move(term)), left_(std::move(left)), right_(std::move(right)) {}

QueryAstPtr QueryAst::atom(AtomicTerm term) {
  auto words = split_words(term.text);
  if (words.empty()) throw std::invalid_argument("atomic term must not be empty");
  term.text = join_words(words);
  if (words.size() == 1) term.phrase = false;
  if (!term.phrase && words.size() > 1 &&
      std::any_of(words.begin(), words.end(), [](const auto& w) { return is_keyword(w); })) {
    throw std::invalid_argument("unquoted atomic term contains an operator keyword: " + term.text);
  }
  return QueryAstPtr(new QueryAst(Kind::Atom, std::move(term), nullptr, nullptr));
}

QueryAstPtr QueryAst::atom(std::string_view text) {
  return atom(AtomicTerm{std::string(text), false});
}

QueryAstPtr QueryAst::make_and(QueryAstPtr left, QueryAstPtr right) {
  if (!left || !right) throw std::invalid_argument("operands must not be null");
  return QueryAstPtr(new QueryAst(Kind::And, {}, std::move(left), std::move(right)));
}

QueryAstPtr QueryAst::make_or(QueryAstPtr left, QueryAstPtr right) {
  if (!left || !right) throw std::invalid_argument("operands must not be null");
  if (left->contains_negation() || right->contains_negation()) {
    throw std::invalid_argument("negation cannot appear beneath a disjunction");
  }
  return QueryAstPtr(new QueryAst(Kind::Or, {}, std::move(left), std::move(right)));
}

QueryAstPtr QueryAst::make_and_not(QueryAstPtr left, QueryAstPtr right) {
  if (!left || !right) throw std::invalid_argument("operands must not be null");
  if (!is_atom_disjunction(*right)) {
    throw std::invalid_argument("negated operand must be an atom or a disjunction of atoms");
  }
  return QueryAstPtr(new QueryAst(Kind::AndNot, {}, std::move(left), std::move(right)));
}

const AtomicTerm& QueryAst::term() const {
  if (kind_ != Kind::Atom) throw std::logic_error("not an atom");
  return term_;
}

const QueryAst& QueryAst::left() const {
  if (!left_) throw std::logic_error("atom has no operands");
  return *left_;
}

const QueryAst& QueryAst::right() const {
  if (!right_) throw std::logic_error("atom has no operands");
  return *right_;
}

bool QueryAst::contains_negation() const noexcept {
  switch (kind_) {
    case Kind::Atom: return false;
    case Kind::AndNot: return true;
    default: return left_->contains_negation() || right_->contains_negation();
  }
}

bool operator==(const QueryAst& a, const QueryAst& b) {
  if (a.kind_ != b.kind_) return false;
  if (a.kind_ == QueryAst::Kind::Atom) return a.term_ == b.term_;
  return *a.left_ == *b.left_ && *a.right_ == *b.right_;
}

// ---------------------------------------------------------------------------

QueryAstPtr parse(std::string_view text) { return Parser(lex(text)).parse_query(); }

NormalizedQuery normalize(const QueryAst& ast) {
  NormalizedQuery out;
  switch (ast.kind()) {
    case QueryAst::Kind::Atom:
      out.clauses.push_back(Clause{{ast.term()}, {}});
      break;
    case QueryAst::Kind::And: {
      out = normalize(ast.left());
      auto rhs = normalize(ast.right());
      out.clauses.insert(out.clauses.end(), rhs.clauses.begin(), rhs.clauses.end());
      break;
    }
    case QueryAst::Kind::Or: {
      // (l1 ∧ l2 ...) ∨ (r1 ∧ r2 ...) = ∧_{i,j} (li ∨ rj)
      auto lhs = normalize(ast.left());
      auto rhs = normalize(ast.right());
      for (const auto& l : lhs.clauses) {
        for (const auto& r : rhs.clauses) {
          Clause merged = l;
          merged.positives.insert(r.positives.begin(), r.positives.end());
          out.clauses.push_back(std::move(merged));
        }
      }
      break;
    }
    case QueryAst::Kind::AndNot: {
      out = normalize(ast.left());
      std::vector<AtomicTerm> negated;
      collect_atoms(ast.right(), negated);
      for (auto& term : negated) out.clauses.push_back(Clause{{}, {std::move(term)}});
      break;
    }
  }
  return out;
}

void validate(const NormalizedQuery& nq) {
  if (nq.clauses.empty()) throw std::invalid_argument("normalized query has no clauses");
  for (const auto& clause : nq.clauses) {
    if (clause.positives.empty() && clause.negatives.empty()) {
      throw std::invalid_argument("empty clause");
    }
    if (!clause.negatives.empty() && (!clause.positives.empty() || clause.negatives.size() != 1)) {
      throw std::invalid_argument("a negative clause must hold exactly one atom");
    }
  }
  if (nq.clauses.front().is_negative()) {
    throw std::invalid_argument("the first clause must be positive");
  }
}

std::set<PolarTerm> atomic_terms(const NormalizedQuery& nq) {
  std::set<PolarTerm> out;
  for (const auto& clause : nq.clauses) {
    for (const auto& t : clause.positives) out.insert({t, Polarity::Positive});
    for (const auto& t : clause.negatives) out.insert({t, Polarity::Negative});
  }
  return out;
}

std::vector<AtomicTerm> atoms_in_order(const QueryAst& ast) {
  std::vector<AtomicTerm> out;
  collect_atoms(ast, out);
  return out;
}

bool has_negation(const NormalizedQuery& nq) {
  return std::any_of(nq.clauses.begin(), nq.clauses.end(),
                     [](const Clause& c) { return c.is_negative(); });
}

std::string render(const AtomicTerm& term) {
  auto words = split_words(term.text);
  bool quote = term.phrase;
  for (const auto& w : words) {
    if (is_keyword(w) || w.find_first_of("()") != std::string::npos) quote = true;
  }
  return quote ? "\"" + term.text + "\"" : term.text;
}

std::string render(const QueryAst& ast) {
  switch (ast.kind()) {
    case QueryAst::Kind::Atom:
      return render(ast.term());
    case QueryAst::Kind::And:
      return render(ast.left()) + " and " + render_operand(ast.right());
    case QueryAst::Kind::Or:
      return render(ast.left()) + " or " + render_operand(ast.right());
    case QueryAst::Kind::AndNot:
      return render(ast.left()) + " and not " + render_operand(ast.right());
  }
  return {};
}

std::string render(const NormalizedQuery& nq) {
  validate(nq);
  std::string out;
  for (const auto& clause : nq.clauses) {
    if (clause.is_negative()) {
      out += " and not " + render(*clause.negatives.begin());
      continue;
    }
    if (!out.empty()) out += " and ";
    if (clause.positives.size() == 1) {
      out += render(*clause.positives.begin());
      continue;
    }
    std::string group;
    for (const auto& t : clause.positives) {
      if (!group.empty()) group += " or ";
      group += render(t);
    }
    out += "(" + group + ")";
  }
  return out;
}

std::vector<std::string> match_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || uc >= 0x80) {
      current.push_back(ascii_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::exchange(current, {}));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool atom_matches(const AtomicTerm& term, const std::vector<std::string>& text_tokens) {
  auto needle = match_tokens(term.text);
  if (needle.empty()) return false;
  if (term.phrase || needle.size() == 1) return contains_sequence(text_tokens, needle);
  return std::all_of(needle.begin(), needle.end(), [&](const std::string& w) {
    return std::find(text_tokens.begin(), text_tokens.end(), w) != text_tokens.end();
  });
}

bool evaluate(const NormalizedQuery& nq, const std::vector<std::string>& text_tokens) {
  for (const auto& clause : nq.clauses) {
    if (clause.is_negative()) {
      if (atom_matches(*clause.negatives.begin(), text_tokens)) return false;
      continue;
    }
    bool any = std::any_of(clause.positives.begin(), clause.positives.end(),
                           [&](const AtomicTerm& t) { return atom_matches(t, text_tokens); });
    if (!any) return false;
  }
  return true;
}

bool evaluate(const NormalizedQuery& nq, std::string_view text) {
  return evaluate(nq, match_tokens(text));
}

std::string_view grammar_help() {
  return R"EBNF(Query grammar (operators share one precedence level, left to right):
  query := expr
  expr  := term (("and" | "or" | "and not") term)*
  term  := ATOM | PHRASE | "(" expr ")"
ATOM is one or more bare words; PHRASE is text in double quotes.
"not" is only allowed directly after "and"; "or not" and a leading "not" are rejected.
Example: gold or (silver and copper) and not iron
)EBNF";
}

}  // namespace scopesearch
