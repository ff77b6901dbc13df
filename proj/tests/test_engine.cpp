#include <gtest/gtest.h>

#include <algorithm>

#include "scopesearch/engine.hpp"
#include "scopesearch/metrics.hpp"

using namespace scopesearch;

namespace {

AbstractDoc doc(const std::string& id, const std::string& title, const std::string& text) {
  AbstractDoc d;
  d.key = {ProviderKind::Local, id};
  d.title = title;
  d.abstract_text = text;
  return d;
}

// "gold" matches two topics: plasmonic particles (p*) and gold wiring (w*).
std::vector<AbstractDoc> corpus() {
  return {
      doc("p1", "Shells", "gold plasmonic plasmonic plasmonic plasmonic plasmonic resonance"),
      doc("p2", "Rods", "gold plasmonic plasmonic plasmonic plasmonic plasmonic absorption"),
      doc("p3", "Spheres", "gold plasmonic plasmonic plasmonic plasmonic plasmonic heating"),
      doc("p4", "Cages", "gold plasmonic plasmonic plasmonic plasmonic plasmonic imaging"),
      doc("w1", "Bonding", "gold wire bonding wire wire solder"),
      doc("w2", "Contacts", "gold wire contact wire wire solder"),
      doc("w3", "Plating", "gold plating wire copper solder"),
      doc("s1", "Silver", "silver wire"),
  };
}

Clock counter_clock() {
  auto t = std::make_shared<Timestamp>(1000);
  return [t] { return (*t)++; };
}

class FailingProvider : public Provider {
 public:
  ProviderKind kind() const override { return ProviderKind::Arxiv; }
  std::vector<AbstractDoc> fetch(const AtomicTerm&, std::size_t) override {
    throw ProviderError(ProviderKind::Arxiv, ProviderErrorKind::Unavailable, "offline");
  }
};

struct Stack {
  explicit Stack(std::vector<std::shared_ptr<Provider>> providers = {})
      : store(StoreOptions{std::nullopt, counter_clock(), 0}),
        gateway(providers.empty()
                    ? std::vector<std::shared_ptr<Provider>>{std::make_shared<LocalProvider>(corpus())}
                    : providers),
        engine(store, gateway, EngineOptions{}) {
    user = store.create_user("ada").user_id;
  }

  SearchResponse search(const std::string& text, HistoryMode mode = HistoryMode::Base,
                        std::optional<std::string> project = std::nullopt) {
    SearchRequest r;
    r.user_id = user;
    r.text = text;
    r.mode = mode;
    r.project_id = std::move(project);
    return engine.search(r);
  }

  Store store;
  ProviderGateway gateway;
  Engine engine;
  std::string user;
};

std::vector<std::string> order(const SearchResponse& r) {
  std::vector<std::string> out;
  for (auto& s : r.results) out.push_back(s.doc.key.doc_id);
  return out;
}

}  // namespace

TEST(Engine, QuickSearchIsUnpersonalized) {
  Stack s;
  auto r = s.search("gold and solder", HistoryMode::Base);
  EXPECT_EQ(order(r), (std::vector<std::string>{"w1", "w2", "w3"}));
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    EXPECT_EQ(r.results[i].score, 0.0);
    EXPECT_EQ(r.results[i].rank, i + 1);
  }
  EXPECT_EQ(r.history_size, 0u);
  EXPECT_FALSE(r.partial);
  EXPECT_EQ(s.store.query(r.query_id).results.size(), 3u);
}

TEST(Engine, ProjectSearchFollowsLabels) {
  Stack s;
  auto p = s.store.create_project(s.user, "Plasmonics").project_id;
  auto first = s.search("gold", HistoryMode::Project, p);
  auto quick_order = order(s.search("gold", HistoryMode::Base));
  EXPECT_EQ(order(first), quick_order);
  s.engine.label(first.query_id, {ProviderKind::Local, "p1"}, Label::Relevant);
  s.engine.label(first.query_id, {ProviderKind::Local, "w1"}, Label::Irrelevant);

  auto second = s.search("gold", HistoryMode::Project, p);
  EXPECT_EQ(second.history_size, 1u);
  EXPECT_NE(order(second), quick_order);
  // independent recomputation of the ranking
  auto history = s.store.history(s.user, p, HistoryMode::Project, 2, 0);
  auto q = QueryInfo::from_text("gold");
  std::vector<std::pair<double, std::string>> expected;
  for (auto& d : corpus()) {
    if (!evaluate(q.normalized, d.text())) continue;
    expected.push_back({-personalization_score(build_term_vector(d.text()), history, q), d.key.doc_id});
  }
  std::sort(expected.begin(), expected.end());
  ASSERT_EQ(second.results.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(second.results[i].doc.key.doc_id, expected[i].second);
    EXPECT_NEAR(second.results[i].score, -expected[i].first, 1e-12);
  }
  EXPECT_EQ(second.results.front().doc.key.doc_id.front(), 'p');

  // quick search ignores the labels entirely
  EXPECT_EQ(order(s.search("gold", HistoryMode::Base)), quick_order);
}

TEST(Engine, ProjectIsolation) {
  Stack s;
  auto a = s.store.create_project(s.user, "A").project_id;
  auto b = s.store.create_project(s.user, "B").project_id;
  auto r = s.search("gold", HistoryMode::Project, a);
  s.engine.label(r.query_id, {ProviderKind::Local, "w2"}, Label::Relevant);
  EXPECT_EQ(s.search("gold", HistoryMode::Project, b).history_size, 0u);
  EXPECT_EQ(s.search("gold", HistoryMode::Lifetime, b).history_size, 2u);
}

TEST(Engine, RejectsBadRequests) {
  Stack s;
  try {
    s.search("a or not b");
    FAIL();
  } catch (const QueryError& e) {
    EXPECT_EQ(e.kind(), QueryErrorKind::ForbiddenNegation);
  }
  EXPECT_THROW(s.search("gold", HistoryMode::Project), EngineError);
  EXPECT_THROW(s.search("gold", HistoryMode::Project, "missing"), StoreError);
  auto other = s.store.create_user("bob").user_id;
  auto theirs = s.store.create_project(other, "Theirs").project_id;
  try {
    s.search("gold", HistoryMode::Project, theirs);
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_EQ(e.kind(), StoreErrorKind::NotFound);
  }
  auto archived = s.store.create_project(s.user, "Old").project_id;
  s.store.archive_project(archived);
  EXPECT_THROW(s.search("gold", HistoryMode::Project, archived), EngineError);
}

TEST(Engine, Suggestions) {
  Stack s;
  auto r = s.search("gold");
  try {
    s.engine.suggestions(r.query_id);
    FAIL();
  } catch (const EngineError& e) {
    EXPECT_EQ(e.kind(), EngineErrorKind::NoLabelsYet);
  }
  for (auto id : {"p1", "p2", "p3", "p4"}) s.engine.label(r.query_id, {ProviderKind::Local, id}, Label::Relevant);
  auto set = s.engine.suggestions(r.query_id);
  ASSERT_FALSE(set.add.empty());
  EXPECT_EQ(set.add[0].term, "plasmonic");
  EXPECT_EQ(set.add[0].suggested_query, "gold and plasmonic");

  auto r2 = s.search("gold");
  for (auto id : {"w1", "w2", "w3"}) s.engine.label(r2.query_id, {ProviderKind::Local, id}, Label::Irrelevant);
  auto only_remove = s.engine.suggestions(r2.query_id);
  EXPECT_TRUE(only_remove.add.empty());
  ASSERT_FALSE(only_remove.remove.empty());
  EXPECT_EQ(only_remove.remove[0].term, "wire");

  EventFilter f;
  f.types = {"suggestion_shown"};
  EXPECT_EQ(s.store.export_log(f).size(), 2u);
}

TEST(Engine, AcceptedSuggestionIsLogged) {
  Stack s;
  auto r = s.search("gold");
  SearchRequest req;
  req.user_id = s.user;
  req.text = "gold and plasmonic";
  req.suggestion = AcceptedSuggestion{r.query_id, "gold and plasmonic"};
  auto r2 = s.engine.search(req);
  EXPECT_EQ(r2.results.size(), 4u);
  EventFilter f;
  f.types = {"suggestion_accepted"};
  auto log = s.store.export_log(f);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].payload.at("from_query_id"), r.query_id);
  EXPECT_EQ(log[0].payload.at("edited"), false);
}

TEST(Engine, RerankPutsLabeledGroupsAtTheEnds) {
  Stack s;
  auto r = s.search("gold");
  s.engine.label(r.query_id, {ProviderKind::Local, "w3"}, Label::Relevant);
  s.engine.label(r.query_id, {ProviderKind::Local, "p1"}, Label::Irrelevant);
  auto out = s.engine.rerank(r.query_id);
  ASSERT_EQ(out.size(), 7u);
  EXPECT_EQ(out.front().result.doc.key.doc_id, "w3");
  EXPECT_EQ(out.back().result.doc.key.doc_id, "p1");
  // wire documents resemble the relevant one
  EXPECT_EQ(out[1].result.doc.key.doc_id.front(), 'w');
  EXPECT_EQ(out[2].result.doc.key.doc_id.front(), 'w');
}

TEST(Engine, MetricsOverProject) {
  Stack s;
  auto p = s.store.create_project(s.user, "P").project_id;
  auto r = s.search("gold or silver", HistoryMode::Project, p);
  ASSERT_EQ(r.results.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    auto& key = r.results[i].doc.key;
    s.engine.label(r.query_id, key, key.doc_id.front() == 'p' ? Label::Relevant : Label::Irrelevant);
  }
  s.search("silver", HistoryMode::Project, p);  // unlabeled
  auto m = s.engine.metrics(p, 8, 25.0, 35.0);
  ASSERT_EQ(m.queries.size(), 2u);
  EXPECT_DOUBLE_EQ(*m.queries[0].precision, 50.0);
  EXPECT_FALSE(m.queries[1].precision);
  EXPECT_DOUBLE_EQ(*m.mean_precision, 50.0);
  EXPECT_NEAR(*m.normalized_mean_precision, normalize_precision(50.0, 25, 35), 1e-12);
  EXPECT_THROW(s.engine.metrics(p, 0, std::nullopt, std::nullopt), EngineError);
  EXPECT_THROW(s.engine.metrics(p, 8, 25.0, std::nullopt), EngineError);
  EXPECT_THROW(s.engine.metrics(p, 8, 0.0, 35.0), MetricsError);
}

TEST(Engine, PartialAndFailedProviders) {
  Stack partial({std::make_shared<FailingProvider>(), std::make_shared<LocalProvider>(corpus())});
  auto r = partial.search("silver");
  EXPECT_TRUE(r.partial);
  EXPECT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.results.size(), 1u);
  Stack dead({std::make_shared<FailingProvider>()});
  EXPECT_THROW(dead.search("silver"), AllProvidersFailed);
  EXPECT_TRUE(dead.store.queries_of_user(dead.user).empty());
}

TEST(Engine, DeterministicResponses) {
  auto run = [] {
    Stack s;
    auto p = s.store.create_project(s.user, "P").project_id;
    std::string out;
    auto r = s.search("gold", HistoryMode::Project, p);
    s.engine.label(r.query_id, {ProviderKind::Local, "p2"}, Label::Relevant);
    for (auto mode : {HistoryMode::Project, HistoryMode::Random, HistoryMode::Lifetime}) {
      out += to_json(s.search("gold or silver", mode, p)).dump();
    }
    out += to_json(s.engine.suggestions(r.query_id)).dump();
    out += to_json(s.engine.rerank(r.query_id)).dump();
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Engine, ResponseJsonCarriesOnlyThePage) {
  Stack s;
  SearchRequest req;
  req.user_id = s.user;
  req.text = "gold";
  req.offset = 5;
  req.page_size = 10;
  auto j = to_json(s.engine.search(req));
  EXPECT_EQ(j.at("total"), 7);
  ASSERT_EQ(j.at("results").size(), 2u);
  EXPECT_EQ(j.at("results")[0].at("rank"), 6);
  EXPECT_EQ(j.at("normalized"), "gold");
}
