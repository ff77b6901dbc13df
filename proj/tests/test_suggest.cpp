#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "scopesearch/gateway.hpp"
#include "scopesearch/suggest.hpp"

using namespace scopesearch;

namespace {

TermVector tv(TermVector::Weights w) { return TermVector(w); }

std::vector<TermVector> planted_relevant() {
  std::vector<TermVector> docs;
  const char* fillers[4][3] = {{"shell", "laser", "particle"},
                               {"resonance", "silica", "coating"},
                               {"spectrum", "absorption", "tumor"},
                               {"imaging", "surface", "thermal"}};
  for (auto& row : fillers) {
    TermVector v(TermVector::Weights{{"plasmonic", 5}});
    for (auto t : row) v.add(t);
    docs.push_back(v);
  }
  return docs;
}

std::map<std::string, double> oracle_z(const TermVector& joined) {
  std::vector<double> freqs;
  for (auto& [t, c] : joined.weights()) freqs.push_back(static_cast<double>(c));
  auto [mean, sd] = oracle::mean_sd(freqs);
  std::map<std::string, double> z;
  for (auto& [t, c] : joined.weights()) z[t] = (static_cast<double>(c) - mean) / sd;
  return z;
}

TermVector random_vector(Rng& rng) {
  TermVector::Weights w;
  auto n = 1 + rng.below(6);
  for (std::uint64_t i = 0; i < n; ++i) w[oracle::atom_word(rng.below(12))] += 1 + rng.below(5);
  return TermVector(w);
}

}  // namespace

TEST(JoinedVector, SumsElementWise) {
  std::vector<TermVector> in = {tv({{"a", 1}}), tv({{"a", 2}, {"b", 1}})};
  EXPECT_EQ(joined_vector(in), tv({{"a", 3}, {"b", 1}}));
  EXPECT_TRUE(joined_vector({}).empty());
}

TEST(JoinedVector, EqualsFold) {
  Rng rng(21);
  std::vector<TermVector> in;
  std::map<std::string, std::uint64_t> fold;
  for (int i = 0; i < 10; ++i) {
    in.push_back(random_vector(rng));
    for (auto& [t, c] : in.back().weights()) fold[t] += c;
  }
  auto joined = joined_vector(in);
  EXPECT_EQ(joined.weights(), fold);
  double sq = 0;
  for (auto& [t, c] : fold) sq += static_cast<double>(c * c);
  EXPECT_DOUBLE_EQ(joined.squared_norm(), sq);
}

TEST(ZScores, MatchTwoPassOracle) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TermVector> in;
    for (int i = 0; i < 4; ++i) in.push_back(random_vector(rng));
    auto joined = joined_vector(in);
    auto z = term_z_scores(joined);
    std::set<std::uint64_t> distinct;
    for (auto& [t, c] : joined.weights()) distinct.insert(c);
    if (distinct.size() < 2) {
      EXPECT_TRUE(z.empty());
      continue;
    }
    auto expected = oracle_z(joined);
    ASSERT_EQ(z.size(), expected.size());
    for (const auto& e : z) {
      EXPECT_EQ(e.frequency, joined.count(e.term));
      EXPECT_NEAR(e.z_score, expected.at(e.term), 1e-9 * std::max(1.0, std::abs(e.z_score)));
    }
  }
}

TEST(Suggest, PlantedTermIsTopAddSuggestion) {
  auto rel = planted_relevant();
  auto q = parse("medical nanorobotics and gold");
  auto out = suggest_terms(*q, rel, {});
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out[0].term, "plasmonic");
  EXPECT_EQ(out[0].direction, SuggestionDirection::Add);
  auto expected = oracle_z(joined_vector(rel)).at("plasmonic");
  EXPECT_NEAR(out[0].z_score, expected, 1e-9);
  EXPECT_GE(out[0].z_score, 1.0);
  EXPECT_EQ(out[0].suggested_query, "medical nanorobotics and gold and plasmonic");
  // every other term occurs once, below the mean
  EXPECT_EQ(out.size(), 1u);
}

TEST(Suggest, RemoveDirectionUsesAndNot) {
  auto out = suggest_terms(*parse("medical nanorobotics and gold"), {}, planted_relevant());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].direction, SuggestionDirection::Remove);
  EXPECT_EQ(out[0].suggested_query, "medical nanorobotics and gold and not plasmonic");
}

TEST(Suggest, EqualFrequenciesGiveNothing) {
  std::vector<TermVector> rel = {tv({{"a", 2}, {"b", 2}}), tv({{"c", 2}})};
  EXPECT_TRUE(suggest_terms(*parse("q"), rel, rel).empty());
  EXPECT_TRUE(suggest_terms(*parse("q"), {}, {}).empty());
}

TEST(Suggest, SkipsQueryAtomsAndTheirWords) {
  std::vector<TermVector> rel = {tv({{"medical", 9}, {"gold", 9}, {"nanorobotics", 9}, {"x", 1}}),
                                 tv({{"y", 1}, {"z", 1}, {"shell", 6}})};
  auto out = suggest_terms(*parse("medical nanorobotics and gold"), rel, {});
  for (const auto& s : out) {
    EXPECT_NE(s.term, "medical");
    EXPECT_NE(s.term, "nanorobotics");
    EXPECT_NE(s.term, "gold");
  }
}

TEST(Suggest, SkipsStopWords) {
  // a hand-made vector may carry a stop-word; it must still be filtered
  std::vector<TermVector> rel = {tv({{"the", 20}, {"x", 1}, {"y", 1}, {"z", 1}, {"shell", 20}})};
  auto out = suggest_terms(*parse("q"), rel, {});
  ASSERT_FALSE(out.empty());
  for (const auto& s : out) EXPECT_FALSE(StopWords::builtin().contains(s.term));
}

TEST(Suggest, TruncatesEachSideAndOrdersByZ) {
  TermVector::Weights w;
  for (int i = 0; i < 30; ++i) w["low" + std::to_string(i)] = 1;
  for (int i = 0; i < 8; ++i) w["high" + std::to_string(i)] = 20 + static_cast<std::uint64_t>(i);
  std::vector<TermVector> side = {TermVector(w)};
  auto out = suggest_terms(*parse("q"), side, side, 3);
  ASSERT_EQ(out.size(), 6u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i].direction, SuggestionDirection::Add);
  for (int i = 3; i < 6; ++i) EXPECT_EQ(out[i].direction, SuggestionDirection::Remove);
  EXPECT_EQ(out[0].term, "high7");
  EXPECT_EQ(out[2].term, "high5");
  EXPECT_GE(out[0].z_score, out[1].z_score);
}

TEST(Suggest, SwappingSidesSwapsDirections) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TermVector> rel, irr;
    for (int i = 0; i < 3; ++i) rel.push_back(random_vector(rng));
    for (int i = 0; i < 2; ++i) irr.push_back(random_vector(rng));
    auto q = parse("w0 or w1");
    auto a = suggest_terms(*q, rel, irr);
    auto b = suggest_terms(*q, irr, rel);
    ASSERT_EQ(a.size(), b.size());
    std::map<std::string, std::pair<double, SuggestionDirection>> am, bm;
    for (auto& s : a) am[s.term + (s.direction == SuggestionDirection::Add ? "+" : "-")] = {s.z_score, s.direction};
    for (auto& s : b) bm[s.term + (s.direction == SuggestionDirection::Add ? "-" : "+")] = {s.z_score, s.direction};
    ASSERT_EQ(am.size(), bm.size());
    for (auto& [k, v] : am) {
      ASSERT_TRUE(bm.count(k)) << k;
      EXPECT_DOUBLE_EQ(bm[k].first, v.first);
      EXPECT_NE(bm[k].second, v.second);
    }
  }
}

TEST(ApplySuggestion, AddAppendsAClause) {
  Suggestion s{"x", SuggestionDirection::Add, 1.5, "a and b and x"};
  NormalizedQuery expected;
  for (auto t : {"a", "b", "x"}) {
    Clause c;
    c.positives.insert({t, false});
    expected.clauses.push_back(c);
  }
  EXPECT_EQ(normalize(*apply_suggestion(s)), expected);
}

TEST(ApplySuggestion, RemoveAppendsANegativeClause) {
  Suggestion s{"x", SuggestionDirection::Remove, 1.5, "a and not x"};
  auto nq = normalize(*apply_suggestion(s));
  ASSERT_EQ(nq.clauses.size(), 2u);
  EXPECT_TRUE(nq.clauses[1].is_negative());
  EXPECT_EQ(nq.clauses[1].negatives.begin()->text, "x");
}

TEST(ApplySuggestion, ExtendsTheOriginalClauseForm) {
  Rng rng(24);
  oracle::AstGenerator gen(rng, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto q = gen.any(3);
    auto before = normalize(*q);
    for (auto dir : {SuggestionDirection::Add, SuggestionDirection::Remove}) {
      std::vector<TermVector> side = {tv({{"extra", 9}, {"p", 1}, {"r", 1}, {"s", 1}})};
      auto out = dir == SuggestionDirection::Add ? suggest_terms(*q, side, {}) : suggest_terms(*q, {}, side);
      ASSERT_EQ(out.size(), 1u);
      auto after = normalize(*apply_suggestion(out[0]));
      ASSERT_EQ(after.clauses.size(), before.clauses.size() + 1);
      EXPECT_TRUE(std::equal(before.clauses.begin(), before.clauses.end(), after.clauses.begin()));
      EXPECT_EQ(after.clauses.back().is_negative(), dir == SuggestionDirection::Remove);
      // fixed point through render
      EXPECT_EQ(normalize(*parse(render(after))), after);
    }
  }
}

TEST(Suggest, SuggestedQueriesOnlyNarrowLocalResults) {
  Rng rng(25);
  auto corpus = oracle::random_corpus(rng, 200, 10);
  ProviderGateway gateway({std::make_shared<LocalProvider>(corpus)});
  oracle::AstGenerator gen(rng, 10);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    auto q = gen.any(2);
    auto base = gateway.execute(normalize(*q), 1000).docs;
    if (base.size() < 3) continue;
    std::vector<TermVector> rel, irr;
    for (auto& [key, d] : base) {
      (rng.bernoulli(0.5) ? rel : irr).push_back(build_term_vector(d.text()));
    }
    for (const auto& s : suggest_terms(*q, rel, irr)) {
      auto narrowed = gateway.execute(normalize(*apply_suggestion(s)), 1000).docs;
      for (auto& [key, d] : narrowed) EXPECT_TRUE(base.count(key)) << s.suggested_query;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}
