#include "scopesearch/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace scopesearch {

Timestamp system_now() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string_view to_string(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::Unavailable: return "ProviderUnavailable";
    case ProviderErrorKind::Rejected: return "ProviderRejected";
    case ProviderErrorKind::RateLimited: return "RateLimited";
  }
  return "ProviderError";
}

ProviderError::ProviderError(ProviderKind provider, ProviderErrorKind kind,
                             const std::string& message)
    : std::runtime_error(std::string(to_string(provider)) + ": " + std::string(to_string(kind)) +
                         ": " + message),
      provider_(provider),
      kind_(kind) {}

namespace {

std::string join_failures(const std::vector<std::string>& failures) {
  std::string out = "all providers failed";
  for (const auto& f : failures) out += "; " + f;
  return out;
}

}  // namespace

AllProvidersFailed::AllProvidersFailed(const std::vector<std::string>& failures)
    : std::runtime_error(join_failures(failures)) {}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  auto now = std::chrono::steady_clock::now();
  if (next_ > now) {
    auto wait_until = next_;
    next_ += interval_;
    lock.unlock();
    std::this_thread::sleep_until(wait_until);
    return;
  }
  next_ = now + interval_;
}

// ---------------------------------------------------------------------------
// LocalProvider

LocalProvider::LocalProvider(std::vector<AbstractDoc> docs) : docs_(std::move(docs)) {
  tokens_.reserve(docs_.size());
  for (std::uint32_t i = 0; i < docs_.size(); ++i) {
    docs_[i].key.provider = ProviderKind::Local;
    tokens_.push_back(match_tokens(docs_[i].text()));
    auto unique = tokens_.back();
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (const auto& token : unique) postings_[token].push_back(i);
  }
}

std::vector<AbstractDoc> LocalProvider::parse_corpus(std::string_view text) {
  std::vector<AbstractDoc> docs;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    auto first_tab = line.find('\t');
    if (first_tab == std::string_view::npos || first_tab == 0) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": expected doc_id<TAB>title<TAB>abstract");
    }
    AbstractDoc doc;
    doc.key = DocKey{ProviderKind::Local, std::string(line.substr(0, first_tab))};
    auto rest = line.substr(first_tab + 1);
    auto second_tab = rest.find('\t');
    if (second_tab == std::string_view::npos) {
      doc.title = std::string(rest);
      doc.stub = true;
    } else {
      doc.title = std::string(rest.substr(0, second_tab));
      doc.abstract_text = std::string(rest.substr(second_tab + 1));
      doc.stub = doc.abstract_text.empty();
    }
    if (!seen.insert(doc.key.doc_id).second) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": duplicate doc_id " + doc.key.doc_id);
    }
    docs.push_back(std::move(doc));
    if (end == text.size()) break;
  }
  return docs;
}

std::shared_ptr<LocalProvider> LocalProvider::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return std::make_shared<LocalProvider>(parse_corpus(buffer.str()));
}

std::vector<AbstractDoc> LocalProvider::fetch(const AtomicTerm& atom, std::size_t limit) {
  std::vector<AbstractDoc> out;
  auto needle = match_tokens(atom.text);
  if (needle.empty() || limit == 0) return out;

  std::vector<std::uint32_t> candidates;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    auto it = postings_.find(needle[i]);
    if (it == postings_.end()) return out;
    if (i == 0) {
      candidates = it->second;
      continue;
    }
    std::vector<std::uint32_t> narrowed;
    std::set_intersection(candidates.begin(), candidates.end(), it->second.begin(),
                          it->second.end(), std::back_inserter(narrowed));
    candidates = std::move(narrowed);
  }
  for (auto i : candidates) {
    if (!atom_matches(atom, tokens_[i])) continue;
    out.push_back(docs_[i]);
    if (out.size() == limit) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Set algebra

DocSet combine(const DocSet& acc, const DocSet& clause_set, bool negative) {
  DocSet out;
  for (const auto& [key, doc] : acc) {
    bool present = clause_set.count(key) != 0;
    if (present != negative) out.emplace(key, doc);
  }
  return out;
}

DocSet merge_providers(const std::vector<DocSet>& sets) {
  DocSet all;
  for (const auto& set : sets) {
    for (const auto& [key, doc] : set) all.emplace(key, doc);
  }
  DocSet out;
  std::map<std::string, DocKey> by_title;
  for (auto& [key, doc] : all) {
    auto title_key = title_merge_key(doc.title);
    if (!title_key.empty()) {
      auto it = by_title.find(title_key);
      if (it != by_title.end() && it->second.provider != key.provider) {
        auto& kept = out.at(it->second);
        bool known = std::any_of(kept.also_known_as.begin(), kept.also_known_as.end(),
                                 [&](const DocKey& k) { return k.provider == key.provider; });
        if (!known) {
          kept.also_known_as.push_back(key);
          continue;
        }
      }
      by_title.emplace(title_key, key);
    }
    out.emplace(key, doc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ProviderGateway

ProviderGateway::ProviderGateway(std::vector<std::shared_ptr<Provider>> providers, Clock clock)
    : providers_(std::move(providers)), clock_(std::move(clock)) {}

DocSet ProviderGateway::fetch_term(Provider& provider, const AtomicTerm& atom, std::size_t limit) {
  CacheKey key{provider.kind(), atom.text, atom.phrase, limit};
  {
    std::shared_lock lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  DocSet fetched;
  auto now = clock_();
  for (auto& doc : provider.fetch(atom, limit)) {
    doc.key.provider = provider.kind();
    doc.fetched_at = now;
    fetched.emplace(doc.key, std::move(doc));
  }
  std::unique_lock lock(cache_mutex_);
  ++misses_;
  return cache_.emplace(std::move(key), std::move(fetched)).first->second;
}

std::size_t ProviderGateway::cache_misses() const {
  std::shared_lock lock(cache_mutex_);
  return misses_;
}

DocSet ProviderGateway::execute_on(Provider& provider, const NormalizedQuery& nq,
                                   std::size_t limit) {
  std::optional<DocSet> acc;
  for (const auto& clause : nq.clauses) {
    if (clause.is_negative()) continue;
    DocSet clause_set;
    for (const auto& atom : clause.positives) {
      for (auto& [key, doc] : fetch_term(provider, atom, limit)) clause_set.emplace(key, doc);
    }
    acc = acc ? combine(*acc, clause_set, false) : std::move(clause_set);
    if (acc->empty()) return {};
  }
  if (!acc) return {};
  for (const auto& clause : nq.clauses) {
    if (!clause.is_negative()) continue;
    acc = combine(*acc, fetch_term(provider, *clause.negatives.begin(), limit), true);
    if (acc->empty()) break;
  }
  return std::move(*acc);
}

ExecuteResult ProviderGateway::execute(const NormalizedQuery& nq, std::size_t limit) {
  validate(nq);
  if (providers_.empty()) throw std::invalid_argument("no providers configured");

  ExecuteResult result;
  std::vector<DocSet> succeeded;
  auto record_failure = [&](const std::exception& e) { result.failures.emplace_back(e.what()); };

  if (providers_.size() == 1) {
    try {
      succeeded.push_back(execute_on(*providers_.front(), nq, limit));
    } catch (const ProviderError& e) {
      record_failure(e);
    }
  } else {
    std::vector<std::future<DocSet>> pending;
    for (auto& provider : providers_) {
      pending.push_back(std::async(std::launch::async, [this, &provider, &nq, limit] {
        return execute_on(*provider, nq, limit);
      }));
    }
    for (auto& f : pending) {
      try {
        succeeded.push_back(f.get());
      } catch (const ProviderError& e) {
        record_failure(e);
      }
    }
  }
  if (succeeded.empty()) throw AllProvidersFailed(result.failures);
  result.partial = !result.failures.empty();
  result.docs = merge_providers(succeeded);
  return result;
}

}  // namespace scopesearch
