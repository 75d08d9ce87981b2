// hssps: corpus generation, benchmarks, the buffer cache experiment,
// parameter sweeps, and token debugging.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hssps/hssps.hpp"

namespace fs = std::filesystem;
using namespace hssps;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadConfig = 2, kInvariant = 3, kTokenRejected = 4 };

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::map<std::string, std::string> overrides;
};

/// Adds --config, --out, and one --<key> flag per config key.
void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--config", opts.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--out", opts.out_dir, "output directory");
  for (const auto& key : known_config_keys()) {
    app->add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.overrides[key] = v; }, "config key " + key);
  }
}

KeyValueConfig load_config(const CommonOptions& opts) {
  KeyValueConfig cfg;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw SpecError("cannot read " + opts.config_path);
    cfg = KeyValueConfig::parse(in);
    for (const auto& [key, value] : cfg.entries()) {
      if (!is_known_config_key(key)) throw SpecError("unknown config key '" + key + "'");
    }
  }
  for (const auto& [key, value] : opts.overrides) cfg.set(key, value);
  return cfg;
}

std::ofstream open_out(const CommonOptions& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  const auto path = fs::path(opts.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> csv_list(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  for (auto& item : detail::split(text, ',')) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

template <typename T>
std::vector<T> number_list(const std::string& text, std::string_view what) {
  std::vector<T> out;
  for (const auto& item : csv_list(text)) out.push_back(detail::parse_number<T>(item, what));
  return out;
}

int cmd_gen(const CommonOptions& opts) {
  const auto spec = CorpusSpec::from_config(load_config(opts));
  const auto corpus = generate_corpus(spec);
  auto out = open_out(opts, "corpus.tsv");
  write_corpus(out, corpus);
  auto conf = open_out(opts, "corpus.conf");
  const auto written = spec.to_config();
  for (const auto& [key, value] : written.entries()) conf << key << " = " << value << '\n';
  std::cout << "wrote " << corpus.size() << " records to " << (fs::path(opts.out_dir) / "corpus.tsv").string()
            << '\n';
  return kOk;
}

int cmd_bench(const CommonOptions& opts) {
  const auto cfg = load_config(opts);
  auto corpus = CorpusSpec::from_config(cfg, reference_corpus_spec());
  auto workload = workload_from(cfg);
  if (cfg.contains("seed")) corpus.seed = workload.seed;
  const auto report = run_benchmark(corpus, engine_config_from(cfg), workload, storage_config_from(cfg));
  auto csv = open_out(opts, "metrics.csv");
  write_metrics_csv(csv, report);
  auto summary = open_out(opts, "summary.txt");
  write_summary(summary, report);
  write_summary(std::cout, report);
  return kOk;
}

int cmd_cache_exp(const CommonOptions& opts, const std::string& query) {
  const auto cfg = load_config(opts);
  const auto corpus = CorpusSpec::from_config(cfg, cache_experiment_corpus());
  CacheExperimentConfig exp;
  exp.storage = storage_config_from(cfg);
  if (!query.empty()) exp.query = query;
  const auto report = buffer_cache_experiment(corpus, exp);
  auto csv = open_out(opts, "cache_experiment.csv");
  write_cache_experiment_csv(csv, report);
  write_cache_experiment_csv(std::cout, report);
  std::cout << "pool_pages=" << report.pool_pages << " working_set_pages=" << report.working_set_pages
            << " corpus_pages=" << report.corpus_pages << " plans_identical=" << (report.plans_identical() ? 1 : 0)
            << " cold/warm=" << detail::fixed3(report.cold_warm_ratio())
            << " after_load/warm=" << detail::fixed3(report.evicted_warm_ratio()) << '\n';
  return kOk;
}

struct SweepOptions {
  std::string candidates, values, wr, wc, empty;
};

int cmd_sweep(const CommonOptions& opts, const SweepOptions& s) {
  const auto cfg = load_config(opts);
  auto corpus = CorpusSpec::from_config(cfg, reference_corpus_spec());
  auto workload = workload_from(cfg);
  if (cfg.contains("seed")) corpus.seed = workload.seed;
  SweepGrid grid;
  grid.candidates_per_event = number_list<std::uint32_t>(s.candidates, "candidates_per_event");
  grid.values_per_candidate = number_list<std::uint32_t>(s.values, "values_per_candidate");
  grid.weight_relevance = number_list<double>(s.wr, "weight_relevance");
  grid.weight_cost = number_list<double>(s.wc, "weight_cost");
  grid.empty_threshold = number_list<std::uint32_t>(s.empty, "empty_threshold");
  const auto points = sensitivity_sweep(corpus, engine_config_from(cfg), workload, grid, storage_config_from(cfg));
  auto csv = open_out(opts, "sweep.csv");
  write_sweep_csv(csv, points);
  write_sweep_csv(std::cout, points);
  return kOk;
}

struct TokenOptions {
  std::string key_hex = std::string(64, '0');
  std::string tenant;
  std::string universe;
  std::string searched;
  std::uint32_t empty = 0;
  std::uint64_t cursor = 0;
  Tick issued = 0;
  Tick ttl = kDefaultTokenTtl;
  std::string token;
  Tick now = 0;
};

void print_payload(const TokenPayload& p) {
  std::cout << "version=" << int(p.version) << " tenant=" << p.tenant_id << " consecutive_empty="
            << p.consecutive_empty << " cursor=" << p.cursor << " issued_at=" << p.issued_at
            << " expires_at=" << p.expires_at << " searched=";
  bool first = true;
  for (const auto& v : p.searched_values) {
    std::cout << (first ? "" : ",") << v;
    first = false;
  }
  std::cout << '\n';
}

int cmd_token_mint(const TokenOptions& t) {
  TokenPayload p;
  p.tenant_id = t.tenant;
  for (const auto& v : csv_list(t.searched)) p.searched_values.insert(v);
  p.consecutive_empty = t.empty;
  p.cursor = t.cursor;
  p.issued_at = t.issued;
  p.expires_at = t.issued + t.ttl;
  std::cout << mint(p, detail::parse_token_key(t.key_hex), csv_list(t.universe)) << '\n';
  return kOk;
}

int cmd_token_verify(const TokenOptions& t) {
  try {
    print_payload(verify(t.token, detail::parse_token_key(t.key_hex), t.tenant, t.now, csv_list(t.universe)));
    return kOk;
  } catch (const TokenError& e) {
    std::cout << "rejected: " << to_string(e.code()) << '\n';
    std::cerr << e.what() << '\n';
    return kTokenRejected;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-time search space partitioning: simulator and benchmarks"};
  app.require_subcommand(1);

  CommonOptions gen_opts, bench_opts, cache_opts, sweep_opts;
  auto* gen = app.add_subcommand("gen", "generate a corpus");
  add_common(gen, gen_opts);
  auto* bench = app.add_subcommand("bench", "run the three-condition benchmark");
  add_common(bench, bench_opts);
  auto* cache = app.add_subcommand("cache-exp", "same query three times: cold, warm, after load");
  add_common(cache, cache_opts);
  std::string cache_query;
  cache->add_option("--query", cache_query, "query text");
  auto* sweep = app.add_subcommand("sweep", "grid of HSSPS parameters");
  add_common(sweep, sweep_opts);
  SweepOptions grid;
  sweep->add_option("--grid-candidates", grid.candidates, "comma list of candidates_per_event");
  sweep->add_option("--grid-values", grid.values, "comma list of values_per_candidate");
  sweep->add_option("--grid-weight-relevance", grid.wr, "comma list of weight_relevance");
  sweep->add_option("--grid-weight-cost", grid.wc, "comma list of weight_cost");
  sweep->add_option("--grid-empty-threshold", grid.empty, "comma list of empty_threshold");

  auto* token = app.add_subcommand("token", "mint or verify page tokens");
  token->require_subcommand(1);
  TokenOptions tok;
  auto* mint_cmd = token->add_subcommand("mint", "mint a token");
  auto* verify_cmd = token->add_subcommand("verify", "verify and decode a token");
  for (auto* sub : {mint_cmd, verify_cmd}) {
    sub->add_option("--key", tok.key_hex, "64 hex digit signing key");
    sub->add_option("--tenant", tok.tenant, "tenant id")->required();
    sub->add_option("--universe", tok.universe, "comma list of partition values")->required();
  }
  mint_cmd->add_option("--searched", tok.searched, "comma list of searched values");
  mint_cmd->add_option("--empty", tok.empty, "consecutive empty executions");
  mint_cmd->add_option("--cursor", tok.cursor, "rotation cursor");
  mint_cmd->add_option("--issued", tok.issued, "issue tick");
  mint_cmd->add_option("--ttl", tok.ttl, "lifetime in ticks");
  verify_cmd->add_option("--token", tok.token, "token text")->required();
  verify_cmd->add_option("--now", tok.now, "current tick");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kBadConfig;
  }

  try {
    if (*gen) return cmd_gen(gen_opts);
    if (*bench) return cmd_bench(bench_opts);
    if (*cache) return cmd_cache_exp(cache_opts, cache_query);
    if (*sweep) return cmd_sweep(sweep_opts, grid);
    if (*mint_cmd) return cmd_token_mint(tok);
    if (*verify_cmd) return cmd_token_verify(tok);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
