#include "scopesearch/doc.hpp"

#include <cctype>

namespace scopesearch {

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Arxiv: return "arxiv";
    case ProviderKind::Pubmed: return "pubmed";
    case ProviderKind::Local: return "local";
  }
  return "unknown";
}

std::optional<ProviderKind> provider_from_string(std::string_view name) {
  if (name == "arxiv") return ProviderKind::Arxiv;
  if (name == "pubmed") return ProviderKind::Pubmed;
  if (name == "local") return ProviderKind::Local;
  return std::nullopt;
}

std::string to_string(const DocKey& key) {
  return std::string(to_string(key.provider)) + ":" + key.doc_id;
}

std::optional<DocKey> parse_doc_key(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) return std::nullopt;
  auto provider = provider_from_string(text.substr(0, colon));
  if (!provider) return std::nullopt;
  return DocKey{*provider, std::string(text.substr(colon + 1))};
}

std::string title_merge_key(std::string_view title) {
  std::string key;
  for (char c : title) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) key.push_back(static_cast<char>(std::tolower(uc)));
  }
  return key;
}

}  // namespace scopesearch
