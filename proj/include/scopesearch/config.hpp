#pragma once

// Runtime configuration: built-in defaults, overlaid by an optional JSON file,
// overlaid by environment variables. Every leaf key has an environment name
// formed from its path, upper-cased and joined with '_' under the
// SCOPESEARCH_ prefix; providers.arxiv.base_url becomes
// SCOPESEARCH_PROVIDERS_ARXIV_BASE_URL.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopesearch/gateway.hpp"
#include "scopesearch/relevance.hpp"

namespace scopesearch {

inline constexpr const char* kEnvPrefix = "SCOPESEARCH_";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RemoteProviderSettings {
  bool enabled = false;
  ProviderConfig provider;
};

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Empty keeps the store in memory.
  std::string store_dir;
  std::uint64_t seed = 0;
  FilterConfig filter;
  std::size_t max_per_side = 5;
  std::size_t page_size = 10;
  std::size_t term_limit = 100;

  bool local_enabled = true;
  std::string local_corpus = "data/sample_corpus.tsv";
  RemoteProviderSettings arxiv;
  RemoteProviderSettings pubmed;
};

/// Defaults as a JSON document; also the schema for files and the
/// environment.
nlohmann::json default_config_json();

/// `overrides` maps environment names to raw values. Unknown keys in the file
/// or unknown SCOPESEARCH_ variables are errors.
Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::map<std::string, std::string>& overrides);

/// SCOPESEARCH_* variables of the current process.
std::map<std::string, std::string> environment_overrides();

nlohmann::json to_json(const Config& config);

/// Instantiates the enabled providers in tie-break order.
std::vector<std::shared_ptr<Provider>> make_providers(const Config& config);

}  // namespace scopesearch
