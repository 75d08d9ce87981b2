#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hssps/config.hpp"
#include "hssps/corpus.hpp"
#include "hssps/engine.hpp"

namespace hssps {

// ---------------------------------------------------------------------------
// Conditions and templates
// ---------------------------------------------------------------------------

enum class Condition { unpaginated, index, hssps };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::unpaginated: return "unpaginated";
    case Condition::index: return "index";
    case Condition::hssps: return "hssps";
  }
  return "?";
}

inline std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "unpaginated") return Condition::unpaginated;
  if (s == "index") return Condition::index;
  if (s == "hssps" || s == "hsspc") return Condition::hssps;
  return std::nullopt;
}

/// Corpus facts templates draw parameters from.
struct TemplateContext {
  std::vector<std::string> regions;
  Tick horizon = 1;

  static TemplateContext from(const Corpus& corpus) {
    TemplateContext ctx;
    std::set<std::string> regions;
    for (const auto& r : corpus) {
      regions.insert(r.region);
      ctx.horizon = std::max(ctx.horizon, r.updated_at);
    }
    ctx.regions.assign(regions.begin(), regions.end());
    return ctx;
  }
};

struct QueryTemplate {
  std::string name;
  std::string query_class;
  /// Broad scans expected to match a large share of the tenant.
  bool high_cardinality = false;
  std::function<Query(std::mt19937_64&, const TemplateContext&, const std::string& tenant)> make;
};

namespace detail {

inline std::vector<std::string> pick_regions(std::mt19937_64& rng, const TemplateContext& ctx, std::size_t k) {
  auto pool = ctx.regions;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(k, pool.size()));
  return pool;
}

inline Tick fraction_of(const TemplateContext& ctx, double f) {
  return static_cast<Tick>(std::llround(static_cast<double>(ctx.horizon) * f));
}

inline QueryTemplate make_template(std::string name, std::string cls, bool high,
                                   std::function<Predicate(std::mt19937_64&, const TemplateContext&)> filter,
                                   std::function<std::optional<Predicate>(std::mt19937_64&, const TemplateContext&)>
                                       correlated = {}) {
  QueryTemplate t;
  t.name = std::move(name);
  t.query_class = cls;
  t.high_cardinality = high;
  t.make = [cls, filter = std::move(filter), correlated = std::move(correlated)](
               std::mt19937_64& rng, const TemplateContext& ctx, const std::string& tenant) {
    Query q;
    q.tenant_id = tenant;
    q.query_class = cls;
    q.filter = filter(rng, ctx);
    if (correlated) q.correlated = correlated(rng, ctx);
    return q;
  };
  return t;
}

}  // namespace detail

/// The thirteen workload query types.
///
///   search-heavy      region_multi services_broad service_ec2 region_single service_rds
///   recency           recent_updates recent_ec2 stale_resources
///   join-heavy        join_instances_with_roles join_snapshots_of_dbs join_regions_with_clusters
///   service-specific  lambda_in_region eks_workloads
inline std::vector<QueryTemplate> standard_templates() {
  using detail::make_template;
  using P = Predicate;
  auto svc = [](Service s) { return std::string(to_string(s)); };
  std::vector<QueryTemplate> out;

  out.push_back(make_template("region_multi", "search-heavy", true, [](auto& rng, const auto& ctx) {
    return P::in(Field::region, detail::pick_regions(rng, ctx, 3));
  }));
  out.push_back(make_template("services_broad", "search-heavy", true, [svc](auto&, const auto&) {
    return P::in(Field::service, {svc(Service::ec2), svc(Service::ebs), svc(Service::iam)});
  }));
  out.push_back(make_template("service_ec2", "search-heavy", true,
                              [svc](auto&, const auto&) { return P::eq(Field::service, svc(Service::ec2)); }));
  out.push_back(make_template("region_single", "search-heavy", true, [](auto& rng, const auto& ctx) {
    return P::eq(Field::region, detail::pick_regions(rng, ctx, 1).front());
  }));
  out.push_back(make_template("service_rds", "search-heavy", false,
                              [svc](auto&, const auto&) { return P::eq(Field::service, svc(Service::rds)); }));

  out.push_back(make_template("recent_updates", "recency", false, [](auto& rng, const auto& ctx) {
    std::uniform_real_distribution<double> back(0.02, 0.08);
    return P::updated_at_least(detail::fraction_of(ctx, 1.0 - back(rng)));
  }));
  out.push_back(make_template("recent_ec2", "recency", false, [svc](auto&, const auto& ctx) {
    return P::all_of({P::eq(Field::service, svc(Service::ec2)), P::updated_at_least(detail::fraction_of(ctx, 0.9))});
  }));
  out.push_back(make_template("stale_resources", "recency", true, [](auto& rng, const auto& ctx) {
    std::uniform_real_distribution<double> cut(0.3, 0.5);
    return P::updated_before(detail::fraction_of(ctx, cut(rng)));
  }));

  out.push_back(make_template(
      "join_instances_with_roles", "join-heavy", true,
      [svc](auto&, const auto&) { return P::eq(Field::service, svc(Service::ec2)); },
      [](auto&, const auto&) { return std::optional<Predicate>(P::eq(Field::resource_type, "role")); }));
  out.push_back(make_template(
      "join_snapshots_of_dbs", "join-heavy", false,
      [](auto&, const auto&) { return P::eq(Field::resource_type, "db_snapshot"); },
      [](auto&, const auto&) { return std::optional<Predicate>(P::eq(Field::resource_type, "db_instance")); }));
  out.push_back(make_template(
      "join_regions_with_clusters", "join-heavy", false,
      [](auto& rng, const auto& ctx) { return P::in(Field::region, detail::pick_regions(rng, ctx, 2)); },
      [svc](auto&, const auto&) { return std::optional<Predicate>(P::eq(Field::service, svc(Service::eks))); }));

  out.push_back(make_template("lambda_in_region", "service-specific", false, [svc](auto& rng, const auto& ctx) {
    return P::all_of({P::eq(Field::service, svc(Service::lambda)),
                      P::eq(Field::region, detail::pick_regions(rng, ctx, 1).front())});
  }));
  out.push_back(make_template("eks_workloads", "service-specific", false,
                              [svc](auto&, const auto&) { return P::eq(Field::service, svc(Service::eks)); }));
  return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct StorageConfig {
  std::uint32_t page_size = kDefaultPageSize;
  /// Pool capacity as a fraction of data pages.
  double pool_fraction = 0.10;
  CostModel cost;
  Tick refresh_interval = kDefaultRefreshInterval;
  std::map<std::string, Tick> tenant_refresh_intervals;

  void validate() const {
    if (page_size < 64) throw SpecError("page_size must be >= 64 bytes");
    if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) throw SpecError("pool_fraction must be in (0,1]");
    cost.validate();
    if (refresh_interval < 1) throw SpecError("refresh_interval must be >= 1 tick");
    for (const auto& [tenant, t] : tenant_refresh_intervals) {
      if (t < 1) throw SpecError("refresh_interval for " + tenant + " must be >= 1 tick");
    }
  }
};

enum class PagingPolicy {
  /// Keep paging until the client holds page_size_rows rows or the token runs out.
  until_rows,
  /// Follow every token to the end.
  exhaust,
};

struct WorkloadSpec {
  std::uint64_t seed = 1;
  /// Weight per standard template, in template order; empty means uniform.
  std::vector<double> mix;
  std::uint32_t concurrency = 8;
  /// Ticks; 0 only with queries_per_stream > 0 (run until every stream finishes).
  Tick duration = 21600;
  std::vector<Condition> conditions = {Condition::unpaginated, Condition::index, Condition::hssps};
  /// Mean exponential think time between logical queries, in simulated units.
  double think_time = 300'000.0;
  /// Logical queries per stream; 0 means unbounded within the duration.
  std::uint32_t queries_per_stream = 0;
  PagingPolicy paging = PagingPolicy::until_rows;
  /// Simulated units charged per explain() call.
  double explain_cost = 2.0;
  Tick start_tick = 0;
  /// Build a fresh Engine for every page request.
  bool rebuild_engine = false;

  std::vector<double> effective_mix(std::size_t templates) const {
    if (mix.empty()) return std::vector<double>(templates, 1.0 / static_cast<double>(templates));
    return mix;
  }

  void validate(std::size_t templates) const {
    if (concurrency < 1) throw SpecError("concurrency must be >= 1");
    if (duration < 0) throw SpecError("duration must be >= 0");
    if (duration == 0 && queries_per_stream == 0) {
      throw SpecError("duration 0 needs queries_per_stream > 0");
    }
    if (conditions.empty()) throw SpecError("at least one condition is required");
    if (!(std::isfinite(think_time) && think_time >= 0.0)) throw SpecError("think_time must be >= 0");
    if (!(std::isfinite(explain_cost) && explain_cost >= 0.0)) throw SpecError("explain_cost must be >= 0");
    if (!mix.empty()) {
      if (mix.size() != templates) throw SpecError("mix must give one weight per query template");
      double sum = 0.0;
      for (double w : mix) {
        if (!(std::isfinite(w) && w >= 0.0)) throw SpecError("mix weights must be finite and >= 0");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-6) throw SpecError("mix weights must sum to 1");
    }
  }
};

namespace detail {

inline TokenKey parse_token_key(std::string_view hex) {
  TokenKey key{};
  if (hex.size() != key.size() * 2) throw SpecError("token_key must be 64 hex digits");
  for (std::size_t i = 0; i < key.size(); ++i) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, value, 16);
    if (ec != std::errc() || ptr != hex.data() + 2 * i + 2) throw SpecError("token_key must be 64 hex digits");
    key[i] = static_cast<std::uint8_t>(value);
  }
  return key;
}

inline std::string hex_of(const TokenKey& key) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto b : key) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xF];
  }
  return out;
}

}  // namespace detail

/// Applies one heuristic key; false if `key` is not a heuristic key.
inline bool apply_heuristic_key(HeuristicConfig& h, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "candidates_per_event") {
    h.candidates_per_event = parse_number<std::uint32_t>(value, key);
  } else if (key == "values_per_candidate") {
    h.values_per_candidate = parse_number<std::uint32_t>(value, key);
  } else if (key == "weight_relevance") {
    h.weight_relevance = parse_number<double>(value, key);
  } else if (key == "weight_cost") {
    h.weight_cost = parse_number<double>(value, key);
  } else if (key == "heuristic_mix") {
    const auto parts = detail::split(value, ',');
    if (parts.size() != 3) throw SpecError("heuristic_mix must be recency,resource_count,relevance");
    h.mix = HeuristicMix{parse_number<double>(parts[0], key), parse_number<double>(parts[1], key),
                         parse_number<double>(parts[2], key)};
  } else if (key == "cold_start_threshold") {
    h.cold_start_threshold = parse_number<Tick>(value, key);
  } else {
    return false;
  }
  return true;
}

inline const std::set<std::string>& heuristic_config_keys() {
  static const std::set<std::string> keys = {"candidates_per_event", "values_per_candidate", "weight_relevance",
                                             "weight_cost",          "heuristic_mix",        "cold_start_threshold"};
  return keys;
}

/// Splits `tenant.<id>.<key>` for heuristic keys and refresh_interval;
/// nullopt for any other key.
inline std::optional<std::pair<std::string, std::string>> tenant_override_key(std::string_view key) {
  if (key.substr(0, 7) != "tenant.") return std::nullopt;
  const auto rest = key.substr(7);
  const auto dot = rest.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return std::nullopt;
  std::string tenant(rest.substr(0, dot));
  std::string field(rest.substr(dot + 1));
  if (!heuristic_config_keys().count(field) && field != "refresh_interval") return std::nullopt;
  return std::pair{std::move(tenant), std::move(field)};
}

/// Global keys first; `tenant.<id>.<key>` overrides then start from the
/// resulting global heuristics.
inline EngineConfig engine_config_from(const KeyValueConfig& cfg, EngineConfig base = {}) {
  using detail::parse_number;
  for (const auto& [key, value] : cfg.entries()) {
    if (apply_heuristic_key(base.heuristics, key, value)) continue;
    if (key == "cardinality_threshold") {
      base.cardinality_threshold = parse_number<std::uint64_t>(value, key);
    } else if (key == "key_field") {
      if (value == "account") {
        base.key_field = KeyField::account;
      } else if (value == "account_region") {
        base.key_field = KeyField::account_region;
      } else {
        throw SpecError("key_field must be account or account_region");
      }
    } else if (key == "empty_threshold") {
      base.termination.empty_threshold = parse_number<std::uint32_t>(value, key);
    } else if (key == "token_ttl") {
      base.token_ttl = parse_number<Tick>(value, key);
    } else if (key == "token_key") {
      base.token_key = detail::parse_token_key(value);
    }
  }
  for (const auto& [key, value] : cfg.entries()) {
    auto t = tenant_override_key(key);
    if (!t || !heuristic_config_keys().count(t->second)) continue;
    auto [it, fresh] = base.tenant_heuristics.try_emplace(t->first, base.heuristics);
    apply_heuristic_key(it->second, t->second, value);
  }
  base.validate();
  return base;
}

inline StorageConfig storage_config_from(const KeyValueConfig& cfg, StorageConfig base = {}) {
  using detail::parse_number;
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "page_size") {
      base.page_size = parse_number<std::uint32_t>(value, key);
    } else if (key == "pool_fraction") {
      base.pool_fraction = parse_number<double>(value, key);
    } else if (key == "hit_cost") {
      base.cost.hit_cost = parse_number<double>(value, key);
    } else if (key == "miss_cost") {
      base.cost.miss_cost = parse_number<double>(value, key);
    } else if (key == "refresh_interval") {
      base.refresh_interval = parse_number<Tick>(value, key);
    } else if (auto t = tenant_override_key(key); t && t->second == "refresh_interval") {
      base.tenant_refresh_intervals[t->first] = parse_number<Tick>(value, key);
    }
  }
  base.validate();
  return base;
}

inline WorkloadSpec workload_from(const KeyValueConfig& cfg, WorkloadSpec base = {}) {
  using detail::parse_number;
  const auto templates = standard_templates();
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "seed") {
      base.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "concurrency") {
      base.concurrency = parse_number<std::uint32_t>(value, key);
    } else if (key == "duration") {
      base.duration = parse_number<Tick>(value, key);
    } else if (key == "think_time") {
      base.think_time = parse_number<double>(value, key);
    } else if (key == "queries_per_stream") {
      base.queries_per_stream = parse_number<std::uint32_t>(value, key);
    } else if (key == "explain_cost") {
      base.explain_cost = parse_number<double>(value, key);
    } else if (key == "start_tick") {
      base.start_tick = parse_number<Tick>(value, key);
    } else if (key == "rebuild_engine") {
      base.rebuild_engine = value == "true" || value == "1";
    } else if (key == "paging") {
      if (value == "until_rows") {
        base.paging = PagingPolicy::until_rows;
      } else if (value == "exhaust") {
        base.paging = PagingPolicy::exhaust;
      } else {
        throw SpecError("paging must be until_rows or exhaust");
      }
    } else if (key == "conditions") {
      base.conditions.clear();
      for (const auto& item : detail::split(value, ',')) {
        auto c = parse_condition(item);
        if (!c) throw SpecError("unknown condition '" + item + "'");
        base.conditions.push_back(*c);
      }
    } else if (key == "mix") {
      base.mix.assign(templates.size(), 0.0);
      for (const auto& item : detail::split(value, ',')) {
        const auto kv = detail::split(item, ':');
        auto it = kv.size() == 2 ? std::find_if(templates.begin(), templates.end(),
                                                [&](const QueryTemplate& t) { return t.name == kv[0]; })
                                 : templates.end();
        if (it == templates.end()) throw SpecError("mix entries must be <template>:<weight>, got '" + item + "'");
        base.mix[static_cast<std::size_t>(it - templates.begin())] = parse_number<double>(kv[1], key);
      }
    }
  }
  base.validate(templates.size());
  return base;
}

/// Every plain key the config readers understand; `tenant.<id>.<key>`
/// heuristic overrides are accepted on top of these.
inline std::set<std::string> known_config_keys() {
  return {"seed", "tenants", "accounts_per_tenant", "resources_per_account", "deleted_ratio_range", "recency_skew",
          "horizon", "service_mix", "sparse_services", "sparse_presence", "regions", "payload_sizes",
          "cardinality_threshold", "key_field", "candidates_per_event", "values_per_candidate", "weight_relevance",
          "weight_cost", "heuristic_mix", "cold_start_threshold", "empty_threshold", "token_ttl", "token_key",
          "page_size", "pool_fraction", "hit_cost", "miss_cost", "refresh_interval", "concurrency", "duration",
          "think_time", "queries_per_stream", "explain_cost", "start_tick", "rebuild_engine", "paging",
          "conditions", "mix"};
}

inline bool is_known_config_key(std::string_view key) {
  return known_config_keys().count(std::string(key)) != 0 || tenant_override_key(key).has_value();
}

/// 1 tenant, 100 accounts of 1,000 resources, 0-30% deleted per account.
inline CorpusSpec reference_corpus_spec(std::uint64_t seed = 1) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.tenants = 1;
  spec.accounts_per_tenant = SizeDistribution::fixed_size(100);
  spec.resources_per_account = SizeDistribution::fixed_size(1000);
  spec.deleted_ratio_range = {0.0, 0.3};
  return spec;
}

inline WorkloadSpec reference_workload(std::uint64_t seed = 1) {
  WorkloadSpec w;
  w.seed = seed;
  return w;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Nearest-rank percentile, p in (0, 100]. Empty input yields 0.
inline double percentile(std::vector<double> samples, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in (0, 100]");
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double exact = p * static_cast<double>(samples.size()) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

struct LatencySummary {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double mean = 0.0;
};

inline LatencySummary summarize(const std::vector<double>& samples) {
  LatencySummary s;
  if (samples.empty()) return s;
  s.p50 = percentile(samples, 50);
  s.p95 = percentile(samples, 95);
  s.p99 = percentile(samples, 99);
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(samples.size());
  return s;
}

/// Metrics for one condition, either overall or for one query type. A
/// request is one page request; a logical query is a client's full sequence.
struct TypeMetrics {
  std::string query_type;
  std::string query_class;
  bool high_cardinality = false;
  std::uint64_t requests = 0;
  std::uint64_t logical_queries = 0;
  std::uint64_t rows_returned = 0;
  std::uint64_t empty_results = 0;
  std::uint64_t token_errors = 0;
  /// Request latencies in simulated units, completion order.
  std::vector<double> latencies;
  LatencySummary latency;
  double throughput_per_min = 0.0;
  double aas = 0.0;
  ExecutionStats io;

  double empty_rate() const {
    return requests == 0 ? 0.0 : static_cast<double>(empty_results) / static_cast<double>(requests);
  }
};

struct ConditionMetrics {
  Condition condition = Condition::unpaginated;
  TypeMetrics all;
  std::vector<TypeMetrics> per_type;
  std::vector<std::uint64_t> per_stream_requests;
  PoolCounters pool;
  /// Simulated units covered; the duration, or the makespan of an unbounded run.
  double window = 0.0;
  /// I/O of every execution started, including ones cut off by the window.
  ExecutionStats started_io;
};

struct MetricsReport {
  /// Window length in simulated units; the whole run.
  double window = 0.0;
  std::vector<ConditionMetrics> conditions;

  const ConditionMetrics& at(Condition c) const {
    for (const auto& m : conditions) {
      if (m.condition == c) return m;
    }
    throw std::out_of_range("condition not in report");
  }
};

namespace detail {

struct Request {
  std::size_t stream = 0;
  double arrival = 0.0;
  double planning_left = 0.0;
  PreparedPage page;
  std::optional<Execution> exec;

  bool finished() const { return planning_left <= 0.0 && (!exec || exec->done()); }
};

struct Stream {
  std::mt19937_64 rng;
  double next_arrival = 0.0;
  bool waiting = true;  // thinking, with next_arrival set
  bool retired = false;
  std::uint32_t started = 0;
  // Current logical query.
  std::size_t template_index = 0;
  Query query;
  std::optional<std::string> token;
  std::uint64_t rows_so_far = 0;
};

inline std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

class Simulation {
 public:
  Simulation(const TableLayout& layout, const EngineConfig& engine, const WorkloadSpec& workload,
             const StorageConfig& storage, Condition condition)
      : layout_(layout),
        engine_config_(engine),
        workload_(workload),
        storage_(storage),
        condition_(condition),
        templates_(standard_templates()),
        mix_(workload.effective_mix(templates_.size())),
        ctx_(TemplateContext::from(layout.records())),
        pool_(pool_capacity_for(layout, storage.pool_fraction)),
        metadata_(layout.corpus_ptr(), storage.refresh_interval),
        engine_(engine),
        state_{layout_, pool_, storage_.cost, metadata_, cursors_},
        sched_rng_(seeded(workload.seed, 0x5C4ED, 0)) {
    if (layout.tenants().empty()) throw SpecError("benchmark corpus has no tenants");
    for (const auto& [tenant, t] : storage.tenant_refresh_intervals) metadata_.set_tenant_interval(tenant, t);
    metrics_.condition = condition;
    metrics_.all.query_type = "all";
    metrics_.all.query_class = "all";
    for (const auto& t : templates_) {
      TypeMetrics m;
      m.query_type = t.name;
      m.query_class = t.query_class;
      m.high_cardinality = t.high_cardinality;
      metrics_.per_type.push_back(std::move(m));
    }
    metrics_.per_stream_requests.assign(workload.concurrency, 0);
    in_flight_per_type_.assign(templates_.size(), 0);
    area_per_type_.assign(templates_.size(), 0.0);
    for (std::uint32_t s = 0; s < workload.concurrency; ++s) {
      Stream st;
      st.rng = seeded(workload.seed, 0x57EA4, s);
      st.next_arrival = think(st);
      streams_.push_back(std::move(st));
    }
  }

  ConditionMetrics run() && {
    const bool bounded = workload_.duration > 0;
    const double limit = static_cast<double>(workload_.duration) * 1000.0;
    while (true) {
      admit();
      if (active_.empty()) {
        auto next = next_arrival();
        if (!next || (bounded && *next >= limit)) break;
        clock_ = *next;
        continue;
      }
      if (bounded && clock_ >= limit) break;
      std::uniform_int_distribution<std::size_t> pick(0, active_.size() - 1);
      const std::size_t i = pick(sched_rng_);
      auto& r = active_[i];
      double cost = 0.0;
      if (r.planning_left > 0.0) {
        cost = r.planning_left;
        r.planning_left = 0.0;
      } else {
        const auto outcome = r.exec->step(pool_, storage_.cost);
        cost = outcome == AccessOutcome::hit ? storage_.cost.hit_cost : storage_.cost.miss_cost;
      }
      advance_clock(cost, bounded ? limit : -1.0);
      if (r.finished()) finish(i, bounded ? limit : -1.0);
    }
    for (auto& r : active_) {
      if (r.exec) metrics_.started_io += r.exec->stats();
    }
    window_ = bounded ? limit : clock_;
    metrics_.window = window_;
    finalize();
    return std::move(metrics_);
  }

 private:
  double think(Stream& s) {
    if (workload_.think_time <= 0.0) return clock_;
    std::exponential_distribution<double> d(1.0 / workload_.think_time);
    return clock_ + d(s.rng);
  }

  std::optional<double> next_arrival() const {
    std::optional<double> out;
    for (const auto& s : streams_) {
      if (s.waiting && !s.retired && (!out || s.next_arrival < *out)) out = s.next_arrival;
    }
    return out;
  }

  Tick tick_at(double t) const { return workload_.start_tick + static_cast<Tick>(std::floor(t / 1000.0)); }

  void admit() {
    for (std::size_t s = 0; s < streams_.size(); ++s) {
      auto& st = streams_[s];
      if (!st.waiting || st.retired || st.next_arrival > clock_) continue;
      st.waiting = false;
      issue(s, st.next_arrival, /*new_query=*/true);
    }
  }

  void issue(std::size_t s, double arrival, bool new_query) {
    auto& st = streams_[s];
    if (new_query) {
      std::discrete_distribution<std::size_t> which(mix_.begin(), mix_.end());
      st.template_index = which(st.rng);
      const auto& tenants = layout_.tenants();
      std::uniform_int_distribution<std::size_t> tenant(0, tenants.size() - 1);
      const auto& tenant_id = tenants[tenant(st.rng)];
      st.query = templates_[st.template_index].make(st.rng, ctx_, tenant_id);
      st.token.reset();
      st.rows_so_far = 0;
      ++st.started;
    }
    Request r;
    r.stream = s;
    r.arrival = arrival;
    const Tick now = tick_at(arrival);
    if (condition_ == Condition::hssps) {
      std::optional<Engine> fresh;
      if (workload_.rebuild_engine) fresh.emplace(engine_config_);
      const Engine& engine = fresh ? *fresh : engine_;
      try {
        r.page = st.token ? engine.prepare_next(st.query, *st.token, state_, now)
                          : engine.prepare_first(st.query, state_, now);
      } catch (const TokenError&) {
        ++metrics_.all.token_errors;
        ++metrics_.per_type[st.template_index].token_errors;
        end_query(s, false);
        return;
      }
    } else {
      const auto snap = metadata_.current(now, &st.query.tenant_id);
      r.page.query = st.query;
      r.page.plan = explain(layout_, *snap, st.query, storage_.cost,
                            condition_ == Condition::index ? AccessPreference::index : AccessPreference::scan);
      r.page.explains = 1;
    }
    r.planning_left = static_cast<double>(r.page.explains) * workload_.explain_cost;
    if (!r.page.nothing_to_run) r.exec.emplace(layout_, r.page.query, r.page.plan);
    ++in_flight_per_type_[st.template_index];
    active_.push_back(std::move(r));
    if (active_.back().finished()) finish(active_.size() - 1, -1.0);
  }

  void advance_clock(double dt, double limit) {
    const double from = limit < 0 ? clock_ : std::min(clock_, limit);
    const double to = limit < 0 ? clock_ + dt : std::min(clock_ + dt, limit);
    area_ += static_cast<double>(active_.size()) * (to - from);
    for (std::size_t t = 0; t < templates_.size(); ++t) {
      area_per_type_[t] += static_cast<double>(in_flight_per_type_[t]) * (to - from);
    }
    clock_ += dt;
  }

  void finish(std::size_t i, double limit) {
    Request r = std::move(active_[i]);
    if (i + 1 != active_.size()) active_[i] = std::move(active_.back());
    active_.pop_back();

    auto& st = streams_[r.stream];
    --in_flight_per_type_[st.template_index];
    ExecutionResult result;
    if (r.exec) result = std::move(*r.exec).take_result();
    if (result.stats.pages_touched != result.stats.shared_hits + result.stats.disk_reads) {
      throw InvariantViolation("execution accounting: pages_touched != shared_hits + disk_reads");
    }
    metrics_.started_io += result.stats;

    const Engine& engine = engine_;
    PageResult page = engine.complete(std::move(r.page), std::move(result), tick_at(clock_));
    const bool in_window = limit < 0 || clock_ <= limit;
    if (in_window) {
      for (auto* m : {&metrics_.all, &metrics_.per_type[st.template_index]}) {
        ++m->requests;
        m->rows_returned += page.rows.size();
        if (page.rows.empty()) ++m->empty_results;
        m->latencies.push_back(clock_ - r.arrival);
        m->io += page.stats;
      }
      ++metrics_.per_stream_requests[r.stream];
    }

    st.rows_so_far += page.rows.size();
    st.token = std::move(page.next_token);
    const bool more = condition_ == Condition::hssps && st.token &&
                      (workload_.paging == PagingPolicy::exhaust || st.rows_so_far < st.query.page_size_rows);
    if (more) {
      issue(r.stream, clock_, false);
    } else {
      end_query(r.stream, in_window);
    }
  }

  void end_query(std::size_t s, bool counted) {
    auto& st = streams_[s];
    if (counted) {
      ++metrics_.all.logical_queries;
      ++metrics_.per_type[st.template_index].logical_queries;
    }
    if (workload_.queries_per_stream > 0 && st.started >= workload_.queries_per_stream) {
      st.retired = true;
      return;
    }
    st.waiting = true;
    st.next_arrival = think(st);
  }

  void finalize() {
    metrics_.pool = pool_.counters();
    const double minutes = window_ / 60'000.0;
    auto close = [&](TypeMetrics& m, double area) {
      m.latency = summarize(m.latencies);
      m.throughput_per_min = minutes > 0 ? static_cast<double>(m.requests) / minutes : 0.0;
      m.aas = window_ > 0 ? area / window_ : 0.0;
    };
    close(metrics_.all, area_);
    for (std::size_t t = 0; t < templates_.size(); ++t) close(metrics_.per_type[t], area_per_type_[t]);
  }

  const TableLayout& layout_;
  EngineConfig engine_config_;
  WorkloadSpec workload_;
  StorageConfig storage_;
  Condition condition_;
  std::vector<QueryTemplate> templates_;
  std::vector<double> mix_;
  TemplateContext ctx_;
  BufferPool pool_;
  MetadataStore metadata_;
  CursorStore cursors_;
  Engine engine_;
  EngineState state_;
  std::mt19937_64 sched_rng_;
  std::vector<Stream> streams_;
  std::vector<Request> active_;
  std::vector<std::uint32_t> in_flight_per_type_;
  std::vector<double> area_per_type_;
  double area_ = 0.0;
  double clock_ = 0.0;
  double window_ = 0.0;
  ConditionMetrics metrics_;
};

inline void check_invariants(const ConditionMetrics& m, std::uint32_t concurrency) {
  const auto& io = m.started_io;
  if (io.pages_touched != m.pool.shared_hits + m.pool.disk_reads || io.shared_hits != m.pool.shared_hits ||
      io.disk_reads != m.pool.disk_reads) {
    throw InvariantViolation("conservation: per-query page accesses differ from pool counters under " +
                             std::string(to_string(m.condition)));
  }
  auto check = [&](const TypeMetrics& t) {
    if (!(t.latency.p50 <= t.latency.p95 && t.latency.p95 <= t.latency.p99)) {
      throw InvariantViolation("percentiles not monotone for " + t.query_type);
    }
    if (!(t.aas >= 0.0 && t.aas <= concurrency + 1e-9)) {
      throw InvariantViolation("AAS outside [0, concurrency] for " + t.query_type);
    }
  };
  check(m.all);
  std::uint64_t requests = 0;
  for (const auto& t : m.per_type) {
    check(t);
    requests += t.requests;
  }
  if (requests != m.all.requests) throw InvariantViolation("per-type request counts do not add up");
}

}  // namespace detail

/// Runs every condition of `workload` on a prebuilt layout, each with a
/// fresh cold pool, metadata cache, and cursor store.
inline MetricsReport run_benchmark(const TableLayout& layout, const EngineConfig& engine, const WorkloadSpec& workload,
                                   const StorageConfig& storage = {}) {
  engine.validate();
  storage.validate();
  workload.validate(standard_templates().size());
  MetricsReport report;
  for (auto c : workload.conditions) {
    detail::Simulation sim(layout, engine, workload, storage, c);
    auto m = std::move(sim).run();
    detail::check_invariants(m, workload.concurrency);
    report.conditions.push_back(std::move(m));
  }
  for (const auto& c : report.conditions) report.window = std::max(report.window, c.window);
  return report;
}

inline MetricsReport run_benchmark(const CorpusSpec& corpus, const EngineConfig& engine, const WorkloadSpec& workload,
                                   const StorageConfig& storage = {}) {
  corpus.validate();
  engine.validate();
  storage.validate();
  workload.validate(standard_templates().size());
  TableLayout layout(std::make_shared<const Corpus>(generate_corpus(corpus)), LayoutOptions{storage.page_size});
  return run_benchmark(layout, engine, workload, storage);
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed3(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

}  // namespace detail

inline constexpr std::string_view kMetricColumns =
    "requests,logical_queries,rows_returned,empty_results,empty_rate,p50,p95,p99,mean_latency,"
    "throughput_per_min,aas,pages_touched,shared_hits,disk_reads,evictions,token_errors";

/// The metric columns for one row, in kMetricColumns order.
inline std::string format_metrics(const TypeMetrics& m) {
  using detail::fixed3;
  std::ostringstream out;
  out << m.requests << ',' << m.logical_queries << ',' << m.rows_returned << ',' << m.empty_results << ','
      << fixed3(m.empty_rate()) << ',' << fixed3(m.latency.p50) << ',' << fixed3(m.latency.p95) << ','
      << fixed3(m.latency.p99) << ',' << fixed3(m.latency.mean) << ',' << fixed3(m.throughput_per_min) << ','
      << fixed3(m.aas) << ',' << m.io.pages_touched << ',' << m.io.shared_hits << ',' << m.io.disk_reads << ','
      << m.io.evictions << ',' << m.token_errors;
  return out.str();
}

inline void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "condition,query_type,query_class,high_cardinality," << kMetricColumns << '\n';
  for (const auto& c : report.conditions) {
    auto row = [&](const TypeMetrics& m) {
      out << to_string(c.condition) << ',' << m.query_type << ',' << m.query_class << ','
          << (m.high_cardinality ? 1 : 0) << ',' << format_metrics(m) << '\n';
    };
    row(c.all);
    for (const auto& t : c.per_type) row(t);
  }
}

/// Pooled latencies of the high-cardinality query types.
inline LatencySummary high_cardinality_latency(const ConditionMetrics& m) {
  std::vector<double> samples;
  for (const auto& t : m.per_type) {
    if (t.high_cardinality) samples.insert(samples.end(), t.latencies.begin(), t.latencies.end());
  }
  return summarize(samples);
}

inline void write_summary(std::ostream& out, const MetricsReport& report) {
  using detail::fixed3;
  out << "window: " << fixed3(report.window) << " units\n";
  for (const auto& c : report.conditions) {
    const auto hc = high_cardinality_latency(c);
    out << to_string(c.condition) << ": requests=" << c.all.requests << " logical=" << c.all.logical_queries
        << " p50=" << fixed3(c.all.latency.p50) << " p95=" << fixed3(c.all.latency.p95)
        << " p99=" << fixed3(c.all.latency.p99) << " hc_p95=" << fixed3(hc.p95)
        << " throughput/min=" << fixed3(c.all.throughput_per_min) << " aas=" << fixed3(c.all.aas)
        << " disk_reads=" << c.all.io.disk_reads << " shared_hits=" << c.all.io.shared_hits
        << " empty_rate=" << fixed3(c.all.empty_rate()) << '\n';
  }
  auto find = [&](Condition want) -> const ConditionMetrics* {
    for (const auto& c : report.conditions) {
      if (c.condition == want) return &c;
    }
    return nullptr;
  };
  const auto* u = find(Condition::unpaginated);
  const auto* h = find(Condition::hssps);
  if (u && h) {
    const double up95 = high_cardinality_latency(*u).p95;
    const double hp95 = high_cardinality_latency(*h).p95;
    auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    out << "hssps/unpaginated: hc_p95 " << fixed3(ratio(hp95, up95)) << " requests "
        << fixed3(ratio(static_cast<double>(h->all.requests), static_cast<double>(u->all.requests))) << " aas "
        << fixed3(ratio(h->all.aas, u->all.aas)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Buffer cache experiment
// ---------------------------------------------------------------------------

/// 12 tenants of 10 accounts x 800 resources. The queried tenant's pages
/// fit in a pool of 10% of the corpus; the other tenants supply the load.
inline CorpusSpec cache_experiment_corpus(std::uint64_t seed = 1) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.tenants = 12;
  spec.accounts_per_tenant = SizeDistribution::fixed_size(10);
  spec.resources_per_account = SizeDistribution::fixed_size(800);
  spec.deleted_ratio_range = {0.0, 0.3};
  return spec;
}

struct CacheExperimentConfig {
  StorageConfig storage;
  /// The broad query; its tenant defaults to the first one.
  std::string query = "tenant=t000 and service in (ebs, ec2, iam, s3)";
  /// Full scans of every other tenant between runs 2 and 3.
  std::uint32_t load_passes = 1;
};

struct CacheRun {
  std::string label;
  QueryPlan plan;
  ExecutionStats stats;
};

struct CacheExperimentReport {
  std::array<CacheRun, 3> runs;
  std::size_t pool_pages = 0;
  std::size_t working_set_pages = 0;
  std::size_t corpus_pages = 0;

  bool plans_identical() const { return runs[0].plan == runs[1].plan && runs[1].plan == runs[2].plan; }

  double cold_warm_ratio() const {
    return runs[1].stats.simulated_time > 0 ? runs[0].stats.simulated_time / runs[1].stats.simulated_time : 0.0;
  }

  double evicted_warm_ratio() const {
    return runs[1].stats.simulated_time > 0 ? runs[2].stats.simulated_time / runs[1].stats.simulated_time : 0.0;
  }
};

inline CacheExperimentReport buffer_cache_experiment(const CorpusSpec& corpus, const CacheExperimentConfig& config = {}) {
  corpus.validate();
  config.storage.validate();
  TableLayout layout(std::make_shared<const Corpus>(generate_corpus(corpus)), LayoutOptions{config.storage.page_size});
  BufferPool pool(pool_capacity_for(layout, config.storage.pool_fraction));
  MetadataStore metadata(layout.corpus_ptr(), config.storage.refresh_interval);
  const auto snap = metadata.current(0);
  const Query query = parse_query(config.query);
  const auto& cost = config.storage.cost;

  CacheExperimentReport report;
  report.pool_pages = pool.capacity();
  report.corpus_pages = layout.data_page_count();

  auto run = [&](std::size_t i, std::string label) {
    report.runs[i].label = std::move(label);
    report.runs[i].plan = explain(layout, *snap, query, cost);
    report.runs[i].stats = execute(layout, pool, cost, query, report.runs[i].plan).stats;
  };

  pool.evict_all();
  run(0, "cold");
  report.working_set_pages = report.runs[0].stats.pages_touched;
  run(1, "warm");
  for (std::uint32_t pass = 0; pass < config.load_passes; ++pass) {
    for (const auto& tenant : layout.tenants()) {
      if (tenant == query.tenant_id) continue;
      Query load;
      load.tenant_id = tenant;
      execute(layout, pool, cost, load, explain(layout, *snap, load, cost));
    }
  }
  run(2, "after_load");
  return report;
}

inline void write_cache_experiment_csv(std::ostream& out, const CacheExperimentReport& report) {
  out << "run,simulated_time,shared_hits,disk_reads,pages_touched,evictions,plan_path,estimated_pages,estimated_cost\n";
  for (const auto& r : report.runs) {
    out << r.label << ',' << detail::fixed3(r.stats.simulated_time) << ',' << r.stats.shared_hits << ','
        << r.stats.disk_reads << ',' << r.stats.pages_touched << ',' << r.stats.evictions << ','
        << to_string(r.plan.path) << ',' << r.plan.estimated_pages << ',' << detail::fixed3(r.plan.estimated_cost)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sensitivity sweep
// ---------------------------------------------------------------------------

/// Parameter values to sweep; an empty axis keeps the base value.
struct SweepGrid {
  std::vector<std::uint32_t> candidates_per_event;
  std::vector<std::uint32_t> values_per_candidate;
  std::vector<double> weight_relevance;
  std::vector<double> weight_cost;
  std::vector<std::uint32_t> empty_threshold;
};

struct SweepPoint {
  std::uint32_t candidates_per_event = 0;
  std::uint32_t values_per_candidate = 0;
  double weight_relevance = 0.0;
  double weight_cost = 0.0;
  std::uint32_t empty_threshold = 0;
  TypeMetrics metrics;
};

/// Runs the HSSPS condition at every grid point over one shared corpus.
inline std::vector<SweepPoint> sensitivity_sweep(const CorpusSpec& corpus, const EngineConfig& engine,
                                                 WorkloadSpec workload, const SweepGrid& grid,
                                                 const StorageConfig& storage = {}) {
  corpus.validate();
  workload.conditions = {Condition::hssps};
  TableLayout layout(std::make_shared<const Corpus>(generate_corpus(corpus)), LayoutOptions{storage.page_size});

  auto axis = [](const auto& values, auto base) {
    return values.empty() ? std::vector<decltype(base)>{base} : std::vector<decltype(base)>(values.begin(), values.end());
  };
  const auto& h = engine.heuristics;
  std::vector<SweepPoint> out;
  for (auto big_n : axis(grid.candidates_per_event, h.candidates_per_event)) {
    for (auto small_n : axis(grid.values_per_candidate, h.values_per_candidate)) {
      for (auto wr : axis(grid.weight_relevance, h.weight_relevance)) {
        for (auto wc : axis(grid.weight_cost, h.weight_cost)) {
          for (auto et : axis(grid.empty_threshold, engine.termination.empty_threshold)) {
            EngineConfig point = engine;
            point.heuristics.candidates_per_event = big_n;
            point.heuristics.values_per_candidate = small_n;
            point.heuristics.weight_relevance = wr;
            point.heuristics.weight_cost = wc;
            point.termination.empty_threshold = et;
            auto report = run_benchmark(layout, point, workload, storage);
            out.push_back({big_n, small_n, wr, wc, et, report.at(Condition::hssps).all});
          }
        }
      }
    }
  }
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "candidates_per_event,values_per_candidate,weight_relevance,weight_cost,empty_threshold," << kMetricColumns
      << '\n';
  for (const auto& p : points) {
    out << p.candidates_per_event << ',' << p.values_per_candidate << ',' << detail::fixed3(p.weight_relevance) << ','
        << detail::fixed3(p.weight_cost) << ',' << p.empty_threshold << ',' << format_metrics(p.metrics) << '\n';
  }
}

}  // namespace hssps
