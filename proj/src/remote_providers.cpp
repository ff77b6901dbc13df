// arXiv and PubMed adapters. Kept apart from the rest of the gateway so only
// this translation unit pulls in the HTTP client.

#include <httplib.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cctype>
#include <sstream>
#include <thread>

#include "scopesearch/gateway.hpp"

namespace scopesearch {

namespace {

namespace pt = boost::property_tree;

std::string url_encode(std::string_view value) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : value) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(c);
    } else {
      out.push_back('%');
      out.push_back(kHex[uc >> 4]);
      out.push_back(kHex[uc & 0x0F]);
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

// Text of an element including nested inline markup such as <i> or <sup>.
std::string element_text(const pt::ptree& node) {
  std::string out = node.data();
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    auto inner = element_text(child);
    if (!inner.empty()) out += " " + inner;
  }
  return collapse_whitespace(out);
}

const pt::ptree& child_or_empty(const pt::ptree& node, const std::string& path) {
  static const pt::ptree empty;
  auto child = node.get_child_optional(path);
  return child ? *child : empty;
}

pt::ptree parse_xml(ProviderKind provider, const std::string& xml) {
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ProviderError(provider, ProviderErrorKind::Rejected,
                        std::string("malformed XML: ") + e.what());
  }
  return tree;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_base_url(const std::string& base) {
  auto scheme_end = base.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = base.find('/', host_start);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base;
  } else {
    out.origin = base.substr(0, path_start);
    out.prefix = base.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

std::chrono::milliseconds retry_after(const httplib::Response& response,
                                      std::chrono::milliseconds cap) {
  std::chrono::milliseconds wait{1000};
  if (response.has_header("Retry-After")) {
    try {
      wait = std::chrono::seconds(std::stol(response.get_header_value("Retry-After")));
    } catch (const std::exception&) {
      // HTTP-date form; fall back to the default wait
    }
  }
  return std::clamp(wait, std::chrono::milliseconds{0}, cap);
}

std::string http_get(ProviderKind provider, const ProviderConfig& config, RateLimiter& limiter,
                     const std::string& path) {
  auto url = split_base_url(config.base_url);
  for (int attempt = 0;; ++attempt) {
    limiter.acquire();
    httplib::Client client(url.origin);
    auto timeout_s = config.request_timeout.count() / 1000;
    auto timeout_us = (config.request_timeout.count() % 1000) * 1000;
    client.set_connection_timeout(timeout_s, timeout_us);
    client.set_read_timeout(timeout_s, timeout_us);
    client.set_follow_location(true);
    auto response = client.Get(url.prefix + path);
    if (!response) {
      throw ProviderError(provider, ProviderErrorKind::Unavailable,
                          httplib::to_string(response.error()));
    }
    if (response->status == 200) return response->body;
    if (response->status == 429 || response->status == 503) {
      if (attempt >= config.max_retries) {
        throw ProviderError(provider, ProviderErrorKind::RateLimited,
                            "HTTP " + std::to_string(response->status) + " after " +
                                std::to_string(attempt + 1) + " attempts");
      }
      std::this_thread::sleep_for(retry_after(*response, config.max_retry_wait));
      continue;
    }
    throw ProviderError(provider, ProviderErrorKind::Rejected,
                        "HTTP " + std::to_string(response->status));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// arXiv

ArxivProvider::ArxivProvider(ProviderConfig config)
    : config_(std::move(config)), limiter_(config_.min_request_interval) {}

std::vector<AbstractDoc> ArxivProvider::parse_feed(const std::string& xml) {
  auto tree = parse_xml(ProviderKind::Arxiv, xml);
  auto feed = tree.get_child_optional("feed");
  if (!feed) throw ProviderError(ProviderKind::Arxiv, ProviderErrorKind::Rejected, "no <feed>");

  std::vector<AbstractDoc> docs;
  for (const auto& [name, entry] : *feed) {
    if (name != "entry") continue;
    auto id = collapse_whitespace(entry.get<std::string>("id", ""));
    if (id.find("/api/errors") != std::string::npos) {
      throw ProviderError(ProviderKind::Arxiv, ProviderErrorKind::Rejected,
                          "arXiv error: " + element_text(child_or_empty(entry, "summary")));
    }
    auto abs = id.find("/abs/");
    AbstractDoc doc;
    doc.key = DocKey{ProviderKind::Arxiv, abs == std::string::npos ? id : id.substr(abs + 5)};
    doc.title = element_text(child_or_empty(entry, "title"));
    doc.abstract_text = element_text(child_or_empty(entry, "summary"));
    if (doc.key.doc_id.empty() || doc.title.empty()) continue;
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<AbstractDoc> ArxivProvider::fetch(const AtomicTerm& atom, std::size_t limit) {
  limit = std::min(limit, config_.max_results_per_term);
  std::string path = "/api/query?search_query=" + url_encode("all:\"" + atom.text + "\"") +
                     "&start=0&max_results=" + std::to_string(limit);
  auto docs = parse_feed(http_get(kind(), config_, limiter_, path));
  if (docs.size() > limit) docs.resize(limit);
  return docs;
}

// ---------------------------------------------------------------------------
// PubMed

PubmedProvider::PubmedProvider(ProviderConfig config)
    : config_(std::move(config)), limiter_(config_.min_request_interval) {}

std::vector<std::string> PubmedProvider::parse_search_ids(const std::string& xml) {
  auto tree = parse_xml(ProviderKind::Pubmed, xml);
  auto result = tree.get_child_optional("eSearchResult");
  if (!result) {
    throw ProviderError(ProviderKind::Pubmed, ProviderErrorKind::Rejected, "no <eSearchResult>");
  }
  if (auto error = result->get_optional<std::string>("ERROR")) {
    throw ProviderError(ProviderKind::Pubmed, ProviderErrorKind::Rejected, *error);
  }
  std::vector<std::string> ids;
  if (auto list = result->get_child_optional("IdList")) {
    for (const auto& [name, id] : *list) {
      if (name == "Id") ids.push_back(collapse_whitespace(id.data()));
    }
  }
  return ids;
}

std::vector<AbstractDoc> PubmedProvider::parse_articles(const std::string& xml) {
  auto tree = parse_xml(ProviderKind::Pubmed, xml);
  auto set = tree.get_child_optional("PubmedArticleSet");
  if (!set) {
    throw ProviderError(ProviderKind::Pubmed, ProviderErrorKind::Rejected,
                        "no <PubmedArticleSet>");
  }
  std::vector<AbstractDoc> docs;
  for (const auto& [name, article] : *set) {
    if (name != "PubmedArticle") continue;
    auto citation = article.get_child_optional("MedlineCitation");
    if (!citation) continue;
    AbstractDoc doc;
    doc.key = DocKey{ProviderKind::Pubmed,
                     collapse_whitespace(child_or_empty(*citation, "PMID").data())};
    doc.title = element_text(child_or_empty(*citation, "Article.ArticleTitle"));
    if (auto abstract = citation->get_child_optional("Article.Abstract")) {
      for (const auto& [part_name, part] : *abstract) {
        if (part_name != "AbstractText") continue;
        if (!doc.abstract_text.empty()) doc.abstract_text.push_back(' ');
        doc.abstract_text += element_text(part);
      }
    }
    if (doc.key.doc_id.empty() || doc.title.empty()) continue;
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<AbstractDoc> PubmedProvider::fetch(const AtomicTerm& atom, std::size_t limit) {
  limit = std::min(limit, config_.max_results_per_term);
  std::string key_param = config_.api_key.empty() ? "" : "&api_key=" + url_encode(config_.api_key);
  std::string term = atom.phrase ? "\"" + atom.text + "\"" : atom.text;
  auto ids = parse_search_ids(http_get(kind(), config_, limiter_,
                                       "/esearch.fcgi?db=pubmed&term=" + url_encode(term) +
                                           "&retmax=" + std::to_string(limit) + key_param));
  if (ids.empty()) return {};
  if (ids.size() > limit) ids.resize(limit);
  std::string id_list;
  for (const auto& id : ids) {
    if (!id_list.empty()) id_list += ",";
    id_list += id;
  }
  return parse_articles(http_get(kind(), config_, limiter_,
                                 "/efetch.fcgi?db=pubmed&id=" + url_encode(id_list) +
                                     "&rettype=abstract&retmode=xml" + key_param));
}

}  // namespace scopesearch
