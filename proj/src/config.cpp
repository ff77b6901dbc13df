#include "scopesearch/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

extern char** environ;

namespace scopesearch {

using nlohmann::json;

json default_config_json() {
  return {
      {"host", "127.0.0.1"},
      {"port", 8080},
      {"store_dir", ""},
      {"seed", 0},
      {"filter_sd", 2.0},
      {"filter_min_retention", 0.6},
      {"max_per_side", 5},
      {"page_size", 10},
      {"term_limit", 100},
      {"providers",
       {{"local", {{"enabled", true}, {"corpus", "data/sample_corpus.tsv"}}},
        {"arxiv",
         {{"enabled", false},
          {"base_url", "https://export.arxiv.org"},
          {"max_results_per_term", 100},
          {"timeout_ms", 10000},
          {"min_interval_ms", 3000},
          {"max_retries", 2},
          {"max_retry_wait_ms", 30000}}},
        {"pubmed",
         {{"enabled", false},
          {"base_url", "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"},
          {"max_results_per_term", 100},
          {"timeout_ms", 10000},
          {"min_interval_ms", 340},
          {"max_retries", 2},
          {"max_retry_wait_ms", 30000},
          {"api_key", ""}}}}},
  };
}

namespace {

std::string env_name(const std::string& pointer) {
  std::string out = kEnvPrefix;
  for (std::size_t i = 1; i < pointer.size(); ++i) {
    char c = pointer[i];
    out.push_back(c == '/' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

json coerce(const std::string& name, const std::string& raw, const json& like) {
  try {
    if (like.is_boolean()) {
      std::string v = raw;
      std::transform(v.begin(), v.end(), v.begin(), ::tolower);
      if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
      if (v == "0" || v == "false" || v == "no" || v == "off") return false;
      throw std::invalid_argument("not a boolean");
    }
    std::size_t used = 0;
    if (like.is_number_integer()) {
      auto v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number()) {
      auto v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
  } catch (const std::exception& e) {
    throw ConfigError(name + "=" + raw + ": " + e.what());
  }
  return raw;
}

void check_types(const json& flat_defaults, const json& flat) {
  for (const auto& [pointer, value] : flat.items()) {
    auto it = flat_defaults.find(pointer);
    if (it == flat_defaults.end()) throw ConfigError("unknown configuration key " + pointer);
    bool ok = it->is_boolean()          ? value.is_boolean()
              : it->is_number_integer() ? value.is_number_integer()
              : it->is_number()         ? value.is_number()
                                        : value.is_string();
    if (!ok) throw ConfigError("configuration key " + pointer + " has the wrong type");
  }
}

std::chrono::milliseconds ms(const json& j, const char* key) {
  auto v = j.at(key).get<std::int64_t>();
  if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
  return std::chrono::milliseconds(v);
}

RemoteProviderSettings remote_from_json(const json& j) {
  RemoteProviderSettings s;
  s.enabled = j.at("enabled");
  s.provider.base_url = j.at("base_url");
  auto max_results = j.at("max_results_per_term").get<std::int64_t>();
  if (max_results < 1) throw ConfigError("max_results_per_term must be >= 1");
  s.provider.max_results_per_term = static_cast<std::size_t>(max_results);
  s.provider.request_timeout = ms(j, "timeout_ms");
  s.provider.min_request_interval = ms(j, "min_interval_ms");
  s.provider.max_retry_wait = ms(j, "max_retry_wait_ms");
  s.provider.max_retries = j.at("max_retries");
  if (s.provider.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  s.provider.api_key = j.value("api_key", "");
  return s;
}

std::size_t positive(const json& j, const char* key) {
  auto v = j.at(key).get<std::int64_t>();
  if (v < 1) throw ConfigError(std::string(key) + " must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::map<std::string, std::string>& overrides) {
  json merged = default_config_json();
  const json flat_defaults = merged.flatten();

  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    json loaded;
    try {
      loaded = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(file->string() + ": " + e.what());
    }
    if (!loaded.is_object()) throw ConfigError(file->string() + ": expected a JSON object");
    check_types(flat_defaults, loaded.flatten());
    merged.merge_patch(loaded);
  }

  std::map<std::string, std::string> by_env;
  for (const auto& [pointer, value] : flat_defaults.items()) by_env[env_name(pointer)] = pointer;
  for (const auto& [name, raw] : overrides) {
    auto it = by_env.find(name);
    if (it == by_env.end()) throw ConfigError("unknown environment variable " + name);
    json::json_pointer pointer(it->second);
    merged[pointer] = coerce(name, raw, flat_defaults.at(it->second));
  }

  Config c;
  try {
    c.host = merged.at("host");
    c.port = merged.at("port");
    if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
    c.store_dir = merged.at("store_dir");
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.filter.sd_multiplier = merged.at("filter_sd");
    c.filter.min_retention = merged.at("filter_min_retention");
    if (c.filter.sd_multiplier < 0) throw ConfigError("filter_sd must be >= 0");
    if (c.filter.min_retention < 0 || c.filter.min_retention > 1) {
      throw ConfigError("filter_min_retention must be within [0, 1]");
    }
    c.max_per_side = positive(merged, "max_per_side");
    c.page_size = positive(merged, "page_size");
    c.term_limit = positive(merged, "term_limit");
    const auto& providers = merged.at("providers");
    c.local_enabled = providers.at("local").at("enabled");
    c.local_corpus = providers.at("local").at("corpus");
    c.arxiv = remote_from_json(providers.at("arxiv"));
    c.pubmed = remote_from_json(providers.at("pubmed"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

std::map<std::string, std::string> environment_overrides() {
  std::map<std::string, std::string> out;
  const std::string prefix = kEnvPrefix;
  for (char** entry = environ; entry && *entry; ++entry) {
    std::string_view item(*entry);
    if (item.rfind(prefix, 0) != 0) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
  }
  return out;
}

json to_json(const Config& c) {
  auto remote = [](const RemoteProviderSettings& s) {
    json j = {{"enabled", s.enabled},
              {"base_url", s.provider.base_url},
              {"max_results_per_term", s.provider.max_results_per_term},
              {"timeout_ms", s.provider.request_timeout.count()},
              {"min_interval_ms", s.provider.min_request_interval.count()},
              {"max_retries", s.provider.max_retries},
              {"max_retry_wait_ms", s.provider.max_retry_wait.count()}};
    return j;
  };
  json pubmed = remote(c.pubmed);
  pubmed["api_key"] = c.pubmed.provider.api_key.empty() ? "" : "(set)";
  return {{"host", c.host},
          {"port", c.port},
          {"store_dir", c.store_dir},
          {"seed", c.seed},
          {"filter_sd", c.filter.sd_multiplier},
          {"filter_min_retention", c.filter.min_retention},
          {"max_per_side", c.max_per_side},
          {"page_size", c.page_size},
          {"term_limit", c.term_limit},
          {"providers",
           {{"local", {{"enabled", c.local_enabled}, {"corpus", c.local_corpus}}},
            {"arxiv", remote(c.arxiv)},
            {"pubmed", pubmed}}}};
}

std::vector<std::shared_ptr<Provider>> make_providers(const Config& config) {
  std::vector<std::shared_ptr<Provider>> out;
  if (config.arxiv.enabled) out.push_back(std::make_shared<ArxivProvider>(config.arxiv.provider));
  if (config.pubmed.enabled) {
    out.push_back(std::make_shared<PubmedProvider>(config.pubmed.provider));
  }
  if (config.local_enabled) out.push_back(LocalProvider::from_file(config.local_corpus));
  return out;
}

}  // namespace scopesearch
