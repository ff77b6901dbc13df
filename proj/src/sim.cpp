#include "scopesearch/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "scopesearch/engine.hpp"
#include "scopesearch/gateway.hpp"
#include "scopesearch/metrics.hpp"

namespace scopesearch {

using nlohmann::json;

namespace {

constexpr std::uint64_t kQueryStream = 0x51ED2701;
constexpr std::uint64_t kLabelStream = 0x1AB3115;

void check(const CorpusConfig& c) {
  if (c.topics < 2) throw SimConfigError("need at least two topics");
  if (c.docs_per_topic == 0 || c.tokens_per_doc == 0) throw SimConfigError("empty documents");
  if (c.vocabulary_size < 10) throw SimConfigError("vocabulary too small");
  if (c.overlap < 0.0 || c.overlap >= 1.0) throw SimConfigError("overlap must be in [0, 1)");
  if (c.zipf_exponent <= 0.0) throw SimConfigError("zipf exponent must be positive");
}

void check_epsilon(double epsilon) {
  if (epsilon < 0.0 || epsilon > 0.2) throw SimConfigError("epsilon must be within [0, 0.2]");
}

std::string make_word(Rng& rng) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::string word;
  auto syllables = 2 + rng.below(2);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    word.push_back(kConsonants[rng.below(kConsonants.size())]);
    word.push_back(kVowels[rng.below(kVowels.size())]);
  }
  if (rng.bernoulli(0.5)) word.push_back(kConsonants[rng.below(kConsonants.size())]);
  return word;
}

std::string draw_text(const SyntheticTopic& topic, std::size_t tokens, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < tokens; ++i) {
    if (i) out.push_back(' ');
    out += topic.vocabulary[rng.weighted(topic.cumulative)];
  }
  return out;
}

// The first `pool` topic-specific terms by probability.
std::vector<std::string> specific_head(const SyntheticTopic& topic, std::size_t pool) {
  std::vector<std::string> out;
  for (auto i : topic.specific) {
    if (out.size() == pool) break;
    out.push_back(topic.vocabulary[i]);
  }
  return out;
}

// "topic term or distractor ...", each distractor being a shared term or a
// term specific to another topic.
std::string pool_query(const SyntheticCorpus& corpus, std::size_t topic, std::size_t pool,
                       std::set<std::string>& used, Rng& rng, std::size_t distractors = 1) {
  auto own = specific_head(corpus.topics[topic], pool);
  std::string term;
  do {
    term = own[rng.below(own.size())];
  } while (used.count(term) && used.size() < own.size());
  used.insert(term);

  std::string text = term;
  for (std::size_t i = 0; i < distractors; ++i) {
    if (!corpus.shared_terms.empty() && rng.bernoulli(0.5)) {
      text += " or " + corpus.shared_terms[rng.below(corpus.shared_terms.size())];
    } else {
      auto other = (topic + 1 + rng.below(corpus.topics.size() - 1)) % corpus.topics.size();
      auto theirs = specific_head(corpus.topics[other], pool);
      text += " or " + theirs[rng.below(theirs.size())];
    }
  }
  return text;
}

Clock counter_clock() {
  auto tick = std::make_shared<Timestamp>(0);
  return [tick] { return ++*tick; };
}

struct Session {
  Store store;
  Engine engine;
  std::string user_id;

  Session(ProviderGateway& gateway, const EngineOptions& options)
      : store(StoreOptions{std::nullopt, counter_clock(), 0}),
        engine(store, gateway, options),
        user_id(store.create_user("sim").user_id) {}
};

struct RoundOutcome {
  std::string query_id;
  double precision = 0.0;
};

// Issues the query, labels the top k and returns precision over them.
RoundOutcome run_round(Session& s, SimUser& user, const std::string& text, HistoryMode mode,
                       const std::optional<std::string>& project, std::size_t topic, std::size_t k) {
  SearchRequest request;
  request.user_id = s.user_id;
  request.text = text;
  request.mode = mode;
  request.project_id = project;
  auto response = s.engine.search(request);
  auto top = std::min(k, response.results.size());
  for (std::size_t i = 0; i < top; ++i) {
    const auto& key = response.results[i].doc.key;
    s.engine.label(response.query_id, key, user.judge(key, topic));
  }
  RoundOutcome out{response.query_id, 0.0};
  if (top > 0) out.precision = precision_at_k(s.store.query(response.query_id), top);
  return out;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::vector<std::uint64_t> require_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw SimConfigError("no seeds");
  return seeds;
}

}  // namespace

double standard_error(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return sd / std::sqrt(static_cast<double>(values.size()));
}

SyntheticCorpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
  check(config);
  Rng rng(seed);
  const auto shared_count = static_cast<std::size_t>(
      std::llround(config.overlap * static_cast<double>(config.vocabulary_size)));
  const auto specific_count = config.vocabulary_size - shared_count;

  std::set<std::string> seen;
  auto fresh_word = [&] {
    for (;;) {
      auto w = make_word(rng);
      if (w == "and" || w == "or" || w == "not" || StopWords::builtin().contains(w)) continue;
      if (seen.insert(w).second) return w;
    }
  };

  SyntheticCorpus corpus;
  for (std::size_t i = 0; i < shared_count; ++i) corpus.shared_terms.push_back(fresh_word());
  std::set<std::string> shared(corpus.shared_terms.begin(), corpus.shared_terms.end());

  for (std::size_t t = 0; t < config.topics; ++t) {
    SyntheticTopic topic;
    topic.topic_id = t;
    topic.vocabulary = corpus.shared_terms;
    for (std::size_t i = 0; i < specific_count; ++i) topic.vocabulary.push_back(fresh_word());
    rng.shuffle(topic.vocabulary);  // shared terms land at arbitrary ranks
    double running = 0.0;
    for (std::size_t r = 0; r < topic.vocabulary.size(); ++r) {
      running += 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_exponent);
      topic.cumulative.push_back(running);
      if (!shared.count(topic.vocabulary[r])) topic.specific.push_back(r);
    }
    corpus.topics.push_back(std::move(topic));
  }

  const auto total = config.topics * config.docs_per_topic;
  std::vector<std::size_t> numbers(total);
  for (std::size_t i = 0; i < total; ++i) numbers[i] = i + 1;
  rng.shuffle(numbers);  // id order carries no topic signal

  std::size_t next = 0;
  for (const auto& topic : corpus.topics) {
    for (std::size_t d = 0; d < config.docs_per_topic; ++d) {
      std::ostringstream id;
      id << 'd' << std::setw(5) << std::setfill('0') << numbers[next++];
      AbstractDoc doc;
      doc.key = DocKey{ProviderKind::Local, id.str()};
      doc.title = draw_text(topic, config.title_tokens, rng);
      doc.abstract_text = draw_text(topic, config.tokens_per_doc, rng);
      corpus.topic_of[doc.key.doc_id] = topic.topic_id;
      corpus.docs.push_back(std::move(doc));
    }
  }
  return corpus;
}

SimUser::SimUser(const SyntheticCorpus& corpus, double epsilon, std::uint64_t seed)
    : corpus_(corpus), epsilon_(epsilon), rng_(seed) {
  check_epsilon(epsilon);
}

Label SimUser::judge(const DocKey& doc, std::size_t current_topic) {
  bool relevant = corpus_.topic_of.at(doc.doc_id) == current_topic;
  if (epsilon_ > 0.0 && rng_.bernoulli(epsilon_)) relevant = !relevant;
  return relevant ? Label::Relevant : Label::Irrelevant;
}

// ---------------------------------------------------------------------------
// drift

const ModeCurve& DriftReport::curve(HistoryMode mode) const {
  for (const auto& c : curves) {
    if (c.mode == mode) return c;
  }
  throw std::out_of_range("mode not simulated");
}

DriftReport run_drift_experiment(const std::vector<HistoryMode>& modes,
                                 const std::vector<std::uint64_t>& seeds, const DriftConfig& config) {
  check(config.corpus);
  check_epsilon(config.epsilon);
  if (modes.empty()) throw SimConfigError("no modes");
  if (config.queries_per_topic == 0 || config.k == 0) throw SimConfigError("empty experiment");

  DriftReport report;
  report.config = config;
  report.seeds = require_seeds(seeds);
  const auto n_queries = 2 * config.queries_per_topic;
  for (auto mode : modes) {
    ModeCurve curve;
    curve.mode = mode;
    report.curves.push_back(curve);
  }

  for (auto seed : seeds) {
    auto corpus = generate_corpus(config.corpus, seed);
    ProviderGateway gateway({std::make_shared<LocalProvider>(corpus.docs)}, [] { return Timestamp{0}; });

    Rng query_rng(seed ^ kQueryStream);
    std::vector<std::string> queries;
    for (std::size_t topic = 0; topic < 2; ++topic) {
      std::set<std::string> used;
      for (std::size_t j = 0; j < config.queries_per_topic; ++j) {
        queries.push_back(pool_query(corpus, topic, config.query_term_pool, used, query_rng));
      }
    }

    EngineOptions options;
    options.filter = config.filter;
    options.term_limit = corpus.docs.size();
    options.seed = seed;
    for (auto& curve : report.curves) {
      Session session(gateway, options);
      SimUser user(corpus, config.epsilon, seed ^ kLabelStream);
      std::string projects[2] = {session.store.create_project(session.user_id, "topic-1").project_id,
                                 session.store.create_project(session.user_id, "topic-2").project_id};
      std::vector<double> precisions;
      for (std::size_t i = 0; i < n_queries; ++i) {
        auto topic = i < config.queries_per_topic ? 0 : 1;
        auto outcome = run_round(session, user, queries[i], curve.mode, projects[topic], topic, config.k);
        precisions.push_back(outcome.precision);
      }
      curve.per_seed.push_back(std::move(precisions));
    }
  }

  for (auto& curve : report.curves) {
    for (std::size_t i = 0; i < n_queries; ++i) {
      std::vector<double> column;
      for (const auto& row : curve.per_seed) column.push_back(row[i]);
      curve.mean.push_back(mean_of(column));
      curve.standard_error.push_back(standard_error(column));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// suggestions

std::string_view to_string(SuggestionPolicy policy) {
  switch (policy) {
    case SuggestionPolicy::SearchOnly: return "search-only";
    case SuggestionPolicy::SuggestionOnly: return "suggestion-only";
    case SuggestionPolicy::SuggestionAndSearch: return "suggestion-and-search";
  }
  return "search-only";
}

std::optional<SuggestionPolicy> suggestion_policy_from_string(std::string_view text) {
  for (auto p : {SuggestionPolicy::SearchOnly, SuggestionPolicy::SuggestionOnly,
                 SuggestionPolicy::SuggestionAndSearch}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

const PolicyResult& SuggestionReport::result(SuggestionPolicy policy) const {
  for (const auto& p : policies) {
    if (p.policy == policy) return p;
  }
  throw std::out_of_range("policy not simulated");
}

namespace {

// Precision of a query's unpersonalized top k as the simulated user would
// judge it, without issuing it.
double preview_precision(ProviderGateway& gateway, const SyntheticCorpus& corpus,
                         const std::string& text, std::size_t topic, const SuggestionConfig& config) {
  auto info = QueryInfo::from_text(text);
  auto docs = gateway.execute(info.normalized, corpus.docs.size()).docs;
  auto ranked = filter_and_rank(docs, {}, info, config.filter);
  auto top = std::min(config.k, ranked.size());
  if (top == 0) return 0.0;
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < top; ++i) {
    if (corpus.topic_of.at(ranked[i].doc.key.doc_id) == topic) ++relevant;
  }
  return 100.0 * static_cast<double>(relevant) / static_cast<double>(top);
}

std::optional<Suggestion> top_suggestion(Engine& engine, const std::string& query_id) {
  SuggestionSet set;
  try {
    set = engine.suggestions(query_id);
  } catch (const EngineError&) {
    return std::nullopt;  // nothing labeled
  }
  if (!set.add.empty()) return set.add.front();
  if (!set.remove.empty()) return set.remove.front();
  return std::nullopt;
}

}  // namespace

SuggestionReport run_suggestion_experiment(const std::vector<SuggestionPolicy>& policies,
                                           const std::vector<std::uint64_t>& seeds,
                                           const SuggestionConfig& config) {
  check(config.corpus);
  check_epsilon(config.epsilon);
  if (policies.empty()) throw SimConfigError("no policies");
  if (config.max_rounds == 0 || config.k == 0) throw SimConfigError("empty experiment");
  if (config.threshold < 0.0 || config.threshold > 100.0) {
    throw SimConfigError("threshold must be a percentage");
  }

  SuggestionReport report;
  report.config = config;
  report.seeds = require_seeds(seeds);
  for (auto p : policies) report.policies.push_back(PolicyResult{p, {}, 0.0, 0.0, 0.0});

  constexpr std::size_t kTopic = 0;
  for (auto seed : seeds) {
    auto corpus = generate_corpus(config.corpus, seed);
    ProviderGateway gateway({std::make_shared<LocalProvider>(corpus.docs)}, [] { return Timestamp{0}; });

    Rng query_rng(seed ^ kQueryStream);
    std::set<std::string> used;
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < config.max_rounds; ++i) {
      pool.push_back(pool_query(corpus, kTopic, config.query_term_pool, used, query_rng,
                                config.pool_distractors));
    }

    EngineOptions options;
    options.filter = config.filter;
    options.term_limit = corpus.docs.size();
    options.max_per_side = config.max_per_side;
    options.seed = seed;
    for (auto& result : report.policies) {
      Session session(gateway, options);
      SimUser user(corpus, config.epsilon, seed ^ kLabelStream);
      std::size_t next_pool = 0;
      std::size_t needed = config.max_rounds + 1;
      RoundOutcome last;
      for (std::size_t round = 1; round <= config.max_rounds; ++round) {
        std::optional<std::string> text;
        if (round > 1 && result.policy != SuggestionPolicy::SearchOnly) {
          if (auto s = top_suggestion(session.engine, last.query_id)) {
            if (result.policy == SuggestionPolicy::SuggestionOnly ||
                preview_precision(gateway, corpus, s->suggested_query, kTopic, config) > last.precision) {
              text = s->suggested_query;
            }
          }
        }
        if (!text) text = pool[next_pool++];
        last = run_round(session, user, *text, HistoryMode::Base, std::nullopt, kTopic, config.k);
        if (last.precision >= config.threshold) {
          needed = round;
          break;
        }
      }
      result.queries_per_seed.push_back(needed);
    }
  }

  for (auto& result : report.policies) {
    std::vector<double> values(result.queries_per_seed.begin(), result.queries_per_seed.end());
    result.mean_queries = mean_of(values);
    result.standard_error = standard_error(values);
    auto reached = std::count_if(result.queries_per_seed.begin(), result.queries_per_seed.end(),
                                 [&](std::size_t q) { return q <= config.max_rounds; });
    result.reached_fraction = static_cast<double>(reached) / static_cast<double>(seeds.size());
  }
  return report;
}

// ---------------------------------------------------------------------------
// output

namespace {

json corpus_json(const CorpusConfig& c) {
  return {{"topics", c.topics},
          {"docs_per_topic", c.docs_per_topic},
          {"tokens_per_doc", c.tokens_per_doc},
          {"title_tokens", c.title_tokens},
          {"vocabulary_size", c.vocabulary_size},
          {"overlap", c.overlap},
          {"zipf_exponent", c.zipf_exponent}};
}

}  // namespace

json to_json(const DriftReport& report) {
  json curves = json::array();
  for (const auto& c : report.curves) {
    curves.push_back({{"mode", to_string(c.mode)},
                      {"mean_precision", c.mean},
                      {"standard_error", c.standard_error},
                      {"per_seed", c.per_seed}});
  }
  return {{"experiment", "drift"},
          {"seeds", report.seeds},
          {"config",
           {{"corpus", corpus_json(report.config.corpus)},
            {"epsilon", report.config.epsilon},
            {"queries_per_topic", report.config.queries_per_topic},
            {"k", report.config.k},
            {"query_term_pool", report.config.query_term_pool}}},
          {"curves", curves}};
}

json to_json(const SuggestionReport& report) {
  json policies = json::array();
  for (const auto& p : report.policies) {
    policies.push_back({{"policy", to_string(p.policy)},
                        {"mean_queries", p.mean_queries},
                        {"standard_error", p.standard_error},
                        {"reached_fraction", p.reached_fraction},
                        {"queries_per_seed", p.queries_per_seed}});
  }
  return {{"experiment", "suggestion"},
          {"seeds", report.seeds},
          {"config",
           {{"corpus", corpus_json(report.config.corpus)},
            {"epsilon", report.config.epsilon},
            {"k", report.config.k},
            {"threshold", report.config.threshold},
            {"max_rounds", report.config.max_rounds},
            {"query_term_pool", report.config.query_term_pool},
            {"pool_distractors", report.config.pool_distractors}}},
          {"policies", policies}};
}

std::string format_table(const DriftReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "mean precision@" << report.config.k << " (%) +- standard error over "
      << report.seeds.size() << " seeds\n";
  out << std::left << std::setw(10) << "mode";
  auto columns = report.curves.empty() ? 0 : report.curves.front().mean.size();
  for (std::size_t i = 0; i < columns; ++i) out << std::right << std::setw(15) << ("q" + std::to_string(i + 1));
  out << '\n';
  for (const auto& c : report.curves) {
    out << std::left << std::setw(10) << to_string(c.mode);
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << c.mean[i] << "+-" << c.standard_error[i];
      out << std::right << std::setw(15) << cell.str();
    }
    out << '\n';
  }
  return out.str();
}

std::string format_table(const SuggestionReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "queries to reach " << report.config.threshold << "% precision@" << report.config.k
      << " over " << report.seeds.size() << " seeds\n";
  out << std::left << std::setw(24) << "policy" << std::right << std::setw(10) << "mean"
      << std::setw(10) << "stderr" << std::setw(10) << "reached" << '\n';
  for (const auto& p : report.policies) {
    out << std::left << std::setw(24) << to_string(p.policy) << std::right << std::setw(10)
        << p.mean_queries << std::setw(10) << p.standard_error << std::setw(9)
        << 100.0 * p.reached_fraction << "%\n";
  }
  return out.str();
}

std::string plot_data(const DriftReport& report) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "query_index\tmode\tmean\tstderr\n";
  for (const auto& c : report.curves) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      out << i + 1 << '\t' << to_string(c.mode) << '\t' << c.mean[i] << '\t' << c.standard_error[i] << '\n';
    }
  }
  return out.str();
}

}  // namespace scopesearch
