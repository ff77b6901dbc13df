#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scopesearch {

/// Declaration order is the provider tie-break order.
enum class ProviderKind { Arxiv, Pubmed, Local };

std::string_view to_string(ProviderKind kind);
std::optional<ProviderKind> provider_from_string(std::string_view name);

struct DocKey {
  ProviderKind provider = ProviderKind::Local;
  std::string doc_id;

  auto operator<=>(const DocKey&) const = default;
};

/// "provider:doc_id", e.g. "arxiv:2101.00001".
std::string to_string(const DocKey& key);
std::optional<DocKey> parse_doc_key(std::string_view text);

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct AbstractDoc {
  DocKey key;
  std::string title;
  std::string abstract_text;
  Timestamp fetched_at = 0;
  /// Local stubs may legitimately carry no abstract.
  bool stub = false;
  /// Other providers' ids for the same paper, filled by provider merging.
  std::vector<DocKey> also_known_as;

  std::string text() const { return title + "\n" + abstract_text; }
  bool operator==(const AbstractDoc&) const = default;
};

/// Documents keyed and ordered by (provider, doc_id).
using DocSet = std::map<DocKey, AbstractDoc>;

/// Lowercase alphanumeric-only form of a title; the cross-provider
/// near-duplicate key.
std::string title_merge_key(std::string_view title);

}  // namespace scopesearch
