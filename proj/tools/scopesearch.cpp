// Command-line front end: serve the HTTP API or run the same operations
// directly against a store directory.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "scopesearch/config.hpp"
#include "scopesearch/engine.hpp"
#include "scopesearch/http_server.hpp"
#include "scopesearch/sim.hpp"

using namespace scopesearch;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;

struct Options {
  std::string config_file;
  std::string store_dir;
  std::string providers;
  std::string corpus;
  std::optional<std::uint64_t> seed;
  std::string format = "table";
  std::string user = "cli";
};

std::filesystem::path resolve_data_file(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || std::filesystem::exists(p)) return p;
  auto fallback = std::filesystem::path(SCOPESEARCH_SOURCE_DIR) / p;
  return std::filesystem::exists(fallback) ? fallback : p;
}

Config effective_config(const Options& o) {
  std::optional<std::filesystem::path> file;
  if (!o.config_file.empty()) file = o.config_file;
  auto config = load_config(file, environment_overrides());
  if (!o.store_dir.empty()) config.store_dir = o.store_dir;
  if (config.store_dir.empty()) config.store_dir = "scopesearch-data";
  if (!o.corpus.empty()) config.local_corpus = o.corpus;
  if (o.seed) config.seed = *o.seed;
  if (!o.providers.empty()) {
    config.local_enabled = config.arxiv.enabled = config.pubmed.enabled = false;
    std::stringstream list(o.providers);
    std::string name;
    while (std::getline(list, name, ',')) {
      if (name == "local") config.local_enabled = true;
      else if (name == "arxiv") config.arxiv.enabled = true;
      else if (name == "pubmed") config.pubmed.enabled = true;
      else throw ConfigError("unknown provider " + name);
    }
  }
  config.local_corpus = resolve_data_file(config.local_corpus).string();
  return config;
}

// Everything a command needs, built lazily so `simulate` touches no store.
struct Context {
  Config config;
  Store store;
  ProviderGateway gateway;
  Engine engine;

  explicit Context(Config c)
      : config(std::move(c)),
        store(StoreOptions{std::filesystem::path(config.store_dir)}),
        gateway(make_providers(config)),
        engine(store, gateway,
               EngineOptions{config.filter, config.term_limit, config.max_per_side, config.page_size,
                             config.seed}) {}

  std::string user_id(const std::string& name) {
    if (auto u = store.user_by_name(name)) return u->user_id;
    return store.create_user(name).user_id;
  }
};

std::string clip(const std::string& text, std::size_t width) {
  if (text.size() <= width) return text;
  return text.substr(0, width - 3) + "...";
}

void print(const Options& o, const json& structured, const std::string& table) {
  if (o.format == "json") std::cout << structured.dump(2) << '\n';
  else std::cout << table;
}

std::string search_table(const SearchResponse& r) {
  std::ostringstream out;
  out << "query " << r.query_id << ": " << r.normalized << "  (" << r.results.size()
      << " results, mode " << to_string(r.mode) << ")\n";
  auto end = std::min(r.results.size(), r.offset + r.page_size);
  for (auto i = std::min(r.offset, end); i < end; ++i) {
    const auto& s = r.results[i];
    out << std::setw(4) << s.rank << "  " << std::left << std::setw(22) << to_string(s.doc.key)
        << std::right << std::setw(9) << std::fixed << std::setprecision(4) << s.score << "  "
        << clip(s.doc.title, 70) << '\n';
  }
  return out.str();
}

std::string suggestions_table(const SuggestionSet& set) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  for (const auto* side : {&set.add, &set.remove}) {
    out << (side == &set.add ? "add:\n" : "remove:\n");
    if (side->empty()) out << "  (none)\n";
    for (const auto& s : *side) out << "  z=" << s.z_score << "  " << s.suggested_query << '\n';
  }
  return out.str();
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < count; ++i) seeds.push_back(first + i);
  return seeds;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

HttpServer* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Project-scoped Boolean meta-search over research abstracts"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--config", o.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--store-dir", o.store_dir, "Store directory (default ./scopesearch-data)");
  app.add_option("--providers", o.providers, "Comma-separated subset of local,arxiv,pubmed");
  app.add_option("--corpus", o.corpus, "Local corpus file (doc_id<TAB>title<TAB>abstract)");
  app.add_option("--seed", o.seed, "Seed for random history sampling and simulations");
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"table", "json"}));
  app.add_option("--user", o.user, "Display name of the acting user (created on first use)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* search = app.add_subcommand("search", "Run a query");
  std::string query_text;
  std::string mode_text = "quick";
  std::optional<std::string> project_opt;
  std::size_t offset = 0;
  std::optional<std::size_t> page_size;
  search->add_option("query", query_text, "Boolean query")->required();
  search->add_option("--mode", mode_text, "quick|base|random|project|lifetime");
  search->add_option("--project", project_opt, "Project id");
  search->add_option("--offset", offset);
  search->add_option("--page-size", page_size);

  auto* label = app.add_subcommand("label", "Label a result of a query");
  std::string query_id;
  std::string doc_text;
  std::string label_text;
  label->add_option("query_id", query_id)->required();
  label->add_option("doc", doc_text, "provider:doc_id")->required();
  label->add_option("label", label_text)->required()->check(
      CLI::IsMember({"relevant", "irrelevant", "clear"}));

  auto* suggest = app.add_subcommand("suggest", "Next-query suggestions for a labeled query");
  suggest->add_option("query_id", query_id)->required();

  auto* rerank = app.add_subcommand("rerank", "Re-order a query's results by its labels");
  rerank->add_option("query_id", query_id)->required();

  auto* project = app.add_subcommand("project", "Manage projects");
  project->require_subcommand(1, 1);
  auto* project_list = project->add_subcommand("list", "List projects");
  bool include_archived = false;
  project_list->add_flag("--archived", include_archived, "Include archived projects");
  auto* project_create = project->add_subcommand("create", "Create a project");
  std::string project_name;
  project_create->add_option("name", project_name)->required();

  auto* metrics = app.add_subcommand("metrics", "Precision of a project's queries");
  std::string metrics_project;
  std::size_t k = 10;
  std::optional<double> rsb;
  std::optional<double> max_rsb;
  metrics->add_option("project", metrics_project)->required();
  metrics->add_option("-k", k);
  metrics->add_option("--rsb", rsb);
  metrics->add_option("--max-rsb", max_rsb);

  auto* simulate = app.add_subcommand("simulate", "Run a synthetic experiment");
  std::string experiment;
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  std::string out_file;
  std::string plot_file;
  double epsilon = 0.0;
  double threshold = 50.0;
  simulate->add_option("experiment", experiment)->required()->check(
      CLI::IsMember({"drift", "suggestion"}));
  simulate->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  simulate->add_option("--first-seed", first_seed);
  simulate->add_option("--out", out_file, "Write the JSON report here");
  simulate->add_option("--plot-data", plot_file, "Write (query_index, mode, mean, stderr) rows");
  simulate->add_option("--epsilon", epsilon, "Label noise rate");
  simulate->add_option("--threshold", threshold, "Precision threshold (%) for suggestion runs");

  auto* export_log = app.add_subcommand("export-log", "Print the action log as JSON lines");
  std::optional<std::string> export_project;
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;
  bool all_types = false;
  bool all_users = false;
  export_log->add_option("--project", export_project);
  export_log->add_option("--from", from, "Inclusive lower bound, ms since epoch");
  export_log->add_option("--to", to, "Exclusive upper bound, ms since epoch");
  export_log->add_flag("--all-types", all_types, "Include user and project events");
  export_log->add_flag("--all-users", all_users, "Do not restrict to --user");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << '\n' << grammar_help();
    return kExitValidation;
  }

  try {
    if (simulate->parsed()) {
      if (o.seed) first_seed = *o.seed;
      auto seed_values = seed_list(first_seed, seeds);
      if (experiment == "drift") {
        DriftConfig config;
        config.epsilon = epsilon;
        auto report = run_drift_experiment({HistoryMode::Base, HistoryMode::Random,
                                            HistoryMode::Project, HistoryMode::Lifetime},
                                           seed_values, config);
        if (!out_file.empty()) write_file(out_file, to_json(report).dump(2) + "\n");
        if (!plot_file.empty()) write_file(plot_file, plot_data(report));
        print(o, to_json(report), format_table(report));
      } else {
        SuggestionConfig config;
        config.epsilon = epsilon;
        config.threshold = threshold;
        auto report = run_suggestion_experiment({SuggestionPolicy::SearchOnly,
                                                 SuggestionPolicy::SuggestionOnly,
                                                 SuggestionPolicy::SuggestionAndSearch},
                                                seed_values, config);
        if (!out_file.empty()) write_file(out_file, to_json(report).dump(2) + "\n");
        print(o, to_json(report), format_table(report));
      }
      return 0;
    }

    Context ctx(effective_config(o));

    if (serve->parsed()) {
      HttpServer server(ctx.engine);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      auto h = host.value_or(ctx.config.host);
      auto p = port.value_or(ctx.config.port);
      std::cerr << "listening on " << h << ":" << p << '\n';
      bool ok = server.listen(h, p);
      g_server = nullptr;
      if (!ok) {
        std::cerr << "error: cannot listen on " << h << ":" << p << '\n';
        return kExitValidation;
      }
      return 0;
    }

    auto user_id = ctx.user_id(o.user);

    if (search->parsed()) {
      auto mode = history_mode_from_string(mode_text);
      if (!mode) throw EngineError(EngineErrorKind::Validation, "unknown mode " + mode_text);
      SearchRequest request{user_id, query_text, *mode, project_opt, offset, page_size, std::nullopt};
      auto response = ctx.engine.search(request);
      for (const auto& f : response.failures) std::cerr << "warning: " << f << '\n';
      print(o, to_json(response), search_table(response));
    } else if (label->parsed()) {
      auto key = parse_doc_key(doc_text);
      if (!key) throw EngineError(EngineErrorKind::Validation, "doc must look like provider:id");
      std::optional<Label> value;
      if (label_text != "clear") value = label_from_string(label_text);
      auto record = ctx.engine.label(query_id, *key, value);
      print(o, to_json(record),
            "query " + record.query_id + ": " + std::to_string(record.labels.size()) + " labels\n");
    } else if (suggest->parsed()) {
      auto set = ctx.engine.suggestions(query_id);
      print(o, to_json(set), suggestions_table(set));
    } else if (rerank->parsed()) {
      auto docs = ctx.engine.rerank(query_id);
      std::ostringstream table;
      for (const auto& d : docs) {
        table << std::setw(4) << d.position << "  " << std::left << std::setw(11)
              << (d.label ? std::string(to_string(*d.label)) : "-") << std::setw(22)
              << to_string(d.result.doc.key) << std::right << std::setw(9) << std::fixed
              << std::setprecision(4) << d.feedback << "  " << clip(d.result.doc.title, 60) << '\n';
      }
      print(o, to_json(docs), table.str());
    } else if (project_list->parsed()) {
      json list = json::array();
      std::ostringstream table;
      for (const auto& p : ctx.store.projects_of(user_id, include_archived)) {
        auto stats = ctx.store.statistics(p.project_id);
        list.push_back(to_json(p, stats));
        table << std::left << std::setw(6) << p.project_id << std::setw(30) << clip(p.name, 28)
              << stats.query_count << " queries, " << stats.label_count << " labels"
              << (p.archived ? " (archived)" : "") << '\n';
      }
      print(o, list, table.str());
    } else if (project_create->parsed()) {
      auto p = ctx.store.create_project(user_id, project_name);
      print(o, to_json(p, ctx.store.statistics(p.project_id)), p.project_id + "\n");
    } else if (metrics->parsed()) {
      auto report = ctx.engine.metrics(metrics_project, k, rsb, max_rsb);
      std::ostringstream table;
      table << std::fixed << std::setprecision(2);
      for (const auto& q : report.queries) {
        table << std::left << std::setw(8) << q.query_id;
        if (q.precision) table << *q.precision << "%\n";
        else table << "(fewer than " << k << " labels)\n";
      }
      if (report.mean_precision) table << "mean " << *report.mean_precision << "%\n";
      if (report.normalized_mean_precision) {
        table << "normalized " << *report.normalized_mean_precision << "%\n";
      }
      print(o, to_json(report), table.str());
    } else if (export_log->parsed()) {
      EventFilter filter;
      if (!all_users) filter.user_id = user_id;
      filter.project_id = export_project;
      filter.from = from;
      filter.to = to;
      filter.all_types = all_types;
      for (const auto& e : ctx.store.export_log(filter)) std::cout << to_json(e).dump() << '\n';
    }
    return 0;
  } catch (const AllProvidersFailed& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const QueryError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << grammar_help();
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
