// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "hssps/hssps.hpp"
#include "support/oracles.hpp"

using namespace hssps;

namespace {

// Pinned thresholds.
constexpr std::size_t kMinQueries = 500;
constexpr std::size_t kMinCorpora = 20;
constexpr std::size_t kMaxAccounts = 200;
constexpr std::size_t kMaxRecords = 100'000;
constexpr double kEquivalenceBudgetSeconds = 120.0;
constexpr double kMinColdWarmRatio = 10.0;
constexpr double kMaxP95Ratio = 0.5;
constexpr double kMinCompletedRatio = 2.0;
constexpr double kMinMatchRate = 0.5;
constexpr double kMaxAasRatio = 0.25;
constexpr std::size_t kTokenPayloads = 1000;
constexpr std::size_t kTokensForBitFlips = 100;
constexpr double kScaleFactors[] = {1e-6, 0.5, 3.0, 1e6};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

struct Stage {
  std::shared_ptr<const Corpus> corpus;
  TableLayout layout;
  BufferPool pool;
  CostModel cost;
  MetadataStore metadata;
  CursorStore cursors;

  Stage(Corpus c, double pool_fraction)
      : corpus(std::make_shared<const Corpus>(std::move(c))),
        layout(corpus),
        pool(pool_capacity_for(layout, pool_fraction)),
        metadata(corpus) {}

  EngineState state() { return EngineState{layout, pool, cost, metadata, cursors}; }
};

TokenKey key_of(std::uint8_t seed) {
  TokenKey k{};
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(seed + 7 * i);
  return k;
}

std::vector<std::string> accounts(const std::string& tenant, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(account_name(tenant, i));
  return out;
}

// Traversal facts shared by criteria 1 and 6.
std::size_t g_traced_pages = 0;
std::size_t g_repeated_values = 0;

void semantic_equivalence(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t queries = 0, corpora = 0, rows = 0, pages = 0, max_records = 0, max_accounts = 0;
  for (; corpora < kMinCorpora; ++corpora) {
    auto spec = oracle::random_spec(rng, kMaxAccounts, 200);
    if (rng() % 3 == 0) spec.resources_per_account = SizeDistribution::zipf(20 + rng() % 300, 1.0);
    auto records = generate_corpus(spec);
    Stage stage(records, 0.05 + static_cast<double>(rng() % 20) / 100.0);
    max_records = std::max(max_records, records.size());
    std::map<std::string, std::size_t> per_tenant;
    for (const auto& [account, summary] : corpus_stats(records)) ++per_tenant[summary.tenant_id];
    for (const auto& [tenant, n] : per_tenant) max_accounts = std::max(max_accounts, n);

    EngineConfig config;
    config.cardinality_threshold = 1;
    config.token_key = key_of(static_cast<std::uint8_t>(corpora));
    config.heuristics.candidates_per_event = 1 + static_cast<std::uint32_t>(rng() % 5);
    config.heuristics.values_per_candidate = 1 + static_cast<std::uint32_t>(rng() % 12);
    config.key_field = corpora % 4 == 3 ? KeyField::account_region : KeyField::account;
    config.termination.empty_threshold = std::numeric_limits<std::uint32_t>::max();
    const Engine engine(config);

    const auto tenants = stage.layout.tenants();
    for (int i = 0; i < 25; ++i, ++queries) {
      const auto& tenant = tenants[rng() % tenants.size()];
      const auto q = oracle::random_query(rng, tenant, spec.horizon);
      if (!engine.eligible(q, stage.layout)) {
        o.require(false, "ineligible query " + print_query(q));
        continue;
      }
      auto st = stage.state();
      Tick now = 1 + static_cast<Tick>(rng() % 100);
      std::vector<RowId> got;
      std::set<std::string> searched;
      auto page = engine.first_page(q, st, now);
      for (;;) {
        ++pages;
        got.insert(got.end(), page.rows.begin(), page.rows.end());
        if (page.diagnostics) {
          for (const auto& v : page.diagnostics->values) {
            if (!searched.insert(v).second) ++g_repeated_values;
          }
        }
        if (!page.next_token) break;
        page = engine.next_page(q, *page.next_token, st, ++now);
      }
      const auto want = oracle::evaluate(*stage.corpus, q);
      rows += want.size();
      o.require(oracle::sorted(got) == want, "rows differ for " + print_query(q));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  g_traced_pages = pages;
  o.require(queries >= kMinQueries && corpora >= kMinCorpora, "too few queries or corpora");
  o.require(max_accounts <= kMaxAccounts && max_records <= kMaxRecords, "corpus exceeds desk scale");
  o.require(seconds < kEquivalenceBudgetSeconds, "over the runtime budget");
  o.detail << queries << " queries over " << corpora << " corpora, " << pages << " pages, " << rows
           << " rows, largest corpus " << max_records << " records / " << max_accounts << " accounts, " << std::fixed
           << std::setprecision(1) << seconds << "s";
}

void buffer_cache(Outcome& o) {
  const auto r = buffer_cache_experiment(cache_experiment_corpus());
  o.require(r.plans_identical(), "plans differ");
  o.require(r.runs[1].stats.disk_reads == 0, "warm run read from disk");
  o.require(r.cold_warm_ratio() >= kMinColdWarmRatio, "cold/warm ratio too low");
  o.require(r.pool_pages * 10 <= r.corpus_pages + 9, "pool is not 10% of the table");
  o.detail << "cold/warm " << std::fixed << std::setprecision(2) << r.cold_warm_ratio() << ", after_load/warm "
           << r.evicted_warm_ratio() << ", warm disk_reads " << r.runs[1].stats.disk_reads << ", pool "
           << r.pool_pages << " of " << r.corpus_pages << " pages, working set " << r.working_set_pages;
}

const MetricsReport& reference_report() {
  static const MetricsReport report = [] {
    auto w = reference_workload();
    w.concurrency = 8;
    w.conditions = {Condition::unpaginated, Condition::hssps};
    return run_benchmark(reference_corpus_spec(), EngineConfig{}, w);
  }();
  return report;
}

void latency_trend(Outcome& o) {
  const auto& u = reference_report().at(Condition::unpaginated);
  const auto& h = reference_report().at(Condition::hssps);
  const double up95 = high_cardinality_latency(u).p95;
  const double hp95 = high_cardinality_latency(h).p95;
  const double p95_ratio = up95 > 0 ? hp95 / up95 : 1.0;
  const double done_ratio =
      u.all.logical_queries > 0 ? static_cast<double>(h.all.logical_queries) / static_cast<double>(u.all.logical_queries)
                                : 0.0;
  o.require(up95 > 0 && p95_ratio <= kMaxP95Ratio, "high-cardinality P95 ratio");
  o.require(done_ratio >= kMinCompletedRatio, "completed-query ratio");
  o.detail << "hc P95 hssps/unpaginated " << std::fixed << std::setprecision(4) << p95_ratio << " (" << hp95 << " vs "
           << up95 << "), queries per window " << h.all.logical_queries << " vs " << u.all.logical_queries << " = "
           << std::setprecision(2) << done_ratio << "x, page requests " << h.all.requests << " vs "
           << u.all.requests;
}

void index_degradation(Outcome& o) {
  Stage stage(generate_corpus(reference_corpus_spec()), 0.10);
  const auto snap = stage.metadata.current(0);
  const auto ctx = TemplateContext::from(*stage.corpus);
  const auto tenant_rows = static_cast<double>(stage.layout.tenant_rows("t000"));
  std::mt19937_64 rng(4);
  std::size_t checked = 0;
  std::ostringstream seen;
  for (const auto& t : standard_templates()) {
    if (!t.high_cardinality) continue;
    for (int i = 0; i < 3; ++i) {
      const auto q = t.make(rng, ctx, "t000");
      const double match = static_cast<double>(oracle::evaluate(*stage.corpus, q).size()) / tenant_rows;
      const auto index_plan = explain(stage.layout, *snap, q, stage.cost, AccessPreference::index);
      if (match < kMinMatchRate || index_plan.path != AccessPath::index) continue;
      const auto full_plan = explain(stage.layout, *snap, q, stage.cost, AccessPreference::scan);
      stage.pool.evict_all();
      const auto via_index = execute(stage.layout, stage.pool, stage.cost, q, index_plan).stats.simulated_time;
      stage.pool.evict_all();
      const auto via_scan = execute(stage.layout, stage.pool, stage.cost, q, full_plan).stats.simulated_time;
      ++checked;
      o.require(via_index >= via_scan, "index beat the scan on " + print_query(q));
      if (i == 0) {
        seen << "; " << t.name << " match " << std::fixed << std::setprecision(2) << match << " index/full "
             << via_index / via_scan;
      }
    }
  }
  o.require(checked > 0, "no template reaches the match-rate floor");
  o.detail << checked << " cold executions" << seen.str();
}

void aas_trend(Outcome& o) {
  const auto& u = reference_report().at(Condition::unpaginated);
  const auto& h = reference_report().at(Condition::hssps);
  const double ratio = u.all.aas > 0 ? h.all.aas / u.all.aas : 1.0;
  o.require(u.all.aas > 0 && ratio <= kMaxAasRatio, "AAS ratio");
  o.detail << "AAS hssps " << std::fixed << std::setprecision(3) << h.all.aas << " vs unpaginated " << u.all.aas
           << " = " << ratio << "x";
}

std::optional<TokenErrc> rejection(const std::string& token, const TokenKey& key, const std::string& tenant,
                                   Tick now, const std::vector<std::string>& universe) {
  try {
    verify(token, key, tenant, now, universe);
  } catch (const TokenError& e) {
    return e.code();
  }
  return std::nullopt;
}

void token_suite(Outcome& o) {
  std::mt19937_64 rng(99);
  const auto key = key_of(5);
  std::size_t flips = 0;
  std::vector<std::string> sampled;
  for (std::size_t i = 0; i < kTokenPayloads; ++i) {
    const auto tenant = tenant_name(rng() % 3);
    const auto universe = accounts(tenant, 1 + rng() % 200);
    TokenPayload p;
    p.tenant_id = tenant;
    for (const auto& v : universe) {
      if (rng() % 2) p.searched_values.insert(v);
    }
    p.consecutive_empty = static_cast<std::uint32_t>(rng() % 10);
    p.cursor = rng();
    p.issued_at = static_cast<Tick>(rng() % 1'000'000);
    p.expires_at = p.issued_at + 1 + static_cast<Tick>(rng() % 7200);
    const auto token = mint(p, key, universe);
    bool same = false;
    try {
      same = verify(token, key, tenant, p.issued_at, universe) == p;
    } catch (const TokenError&) {
    }
    o.require(same, "round trip");
    o.require(!rejection(token, key, tenant, p.expires_at - 1, universe), "accepted one tick before expiry");
    o.require(rejection(token, key, tenant, p.expires_at, universe) == TokenErrc::expired, "expiry boundary");
    o.require(rejection(token, key, tenant + "x", p.issued_at, universe) == TokenErrc::tenant, "tenant mismatch");

    if (i < kTokensForBitFlips) {
      const auto dot1 = token.find('.');
      const auto dot2 = token.find('.', dot1 + 1);
      const auto body = *base64url::decode(token.substr(dot1 + 1, dot2 - dot1 - 1));
      const auto tag = *base64url::decode(token.substr(dot2 + 1));
      for (int part = 0; part < 2; ++part) {
        const auto& bytes = part == 0 ? body : tag;
        for (std::size_t b = 0; b < bytes.size() * 8; ++b) {
          auto bad = bytes;
          bad[b / 8] ^= static_cast<std::uint8_t>(1u << (b % 8));
          const auto forged = "v1." + base64url::encode(part == 0 ? bad : body) + "." +
                              base64url::encode(part == 1 ? bad : tag);
          ++flips;
          o.require(rejection(forged, key, tenant, p.issued_at, universe) == TokenErrc::forgery, "bit flip accepted");
        }
      }
      for (std::size_t c = 0; c < token.size(); ++c) {
        auto bad = token;
        bad[c] ^= 1;
        ++flips;
        o.require(rejection(bad, key, tenant, p.issued_at, universe).has_value(), "text bit flip accepted");
      }
    }
  }
  o.require(g_traced_pages > 0 && g_repeated_values == 0, "a partition value was searched twice");
  o.detail << kTokenPayloads << " round trips, " << flips << " corruptions of " << kTokensForBitFlips
           << " tokens rejected, " << g_traced_pages << " traced pages with " << g_repeated_values << " repeats";
}

Corpus heuristic_corpus(std::mt19937_64& rng) {
  auto spec = oracle::random_spec(rng, 40, 80);
  spec.tenants = 1;
  return generate_corpus(spec);
}

void heuristic_properties(Outcome& o) {
  std::mt19937_64 rng(7);
  std::size_t cases = 0;
  for (int round = 0; round < 30; ++round) {
    auto records = heuristic_corpus(rng);
    Stage stage(records, 0.1);
    const auto snap = stage.metadata.current(0);
    const auto universe = partition_universe(*snap, "t000", KeyField::account);
    const auto q = oracle::random_query(rng, "t000", 10'000, false);
    HeuristicConfig config;

    // Exclusion soundness and completeness.
    std::set<std::string> excluded;
    for (const auto& v : universe) {
      if (rng() % 3 == 0) excluded.insert(v);
    }
    const auto ranking = rank_values(*snap, "t000", q, excluded, config);
    std::set<std::string> ranked;
    for (const auto& r : ranking) ranked.insert(r.value);
    o.require(ranked.size() == ranking.size(), "duplicate ranked value");
    for (const auto& v : universe) o.require(ranked.count(v) != excluded.count(v), "exclusion");
    ++cases;

    // Raising one account's active ratio never lowers its score.
    const auto target = universe[rng() % universe.size()];
    auto raised = records;
    bool changed = false;
    for (auto& r : raised) {
      if (r.account_id == target && r.is_deleted) {
        r.is_deleted = false;
        changed = true;
        break;
      }
    }
    if (changed) {
      MetadataStore before_store(std::make_shared<const Corpus>(records));
      MetadataStore after_store(std::make_shared<const Corpus>(raised));
      auto score_of = [&](MetadataStore& m) {
        const auto s = m.current(0);
        o.require(active_ratio(*s, target, KeyField::account) >= 0.0, "ratio");
        for (const auto& r : rank_values(*s, "t000", q, {}, config)) {
          if (r.value == target) return std::pair{r.score, active_ratio(*s, target, KeyField::account)};
        }
        return std::pair{-1.0, -1.0};
      };
      const auto [before, ratio_before] = score_of(before_store);
      const auto [after, ratio_after] = score_of(after_store);
      o.require(ratio_after > ratio_before, "active ratio did not rise");
      o.require(after >= before, "score fell as active ratio rose");
      ++cases;
    }

    // Composite score is non-increasing in estimated_rows at fixed relevance.
    std::vector<PartitionCandidate> cands(2 + rng() % 6);
    const double relevance = static_cast<double>(rng() % 100) / 100.0;
    for (auto& c : cands) {
      c.relevance_score = relevance;
      c.plan.estimated_rows = rng() % 5000;
      c.values = {std::to_string(rng())};
    }
    score_candidates(cands, config);
    for (const auto& a : cands) {
      for (const auto& b : cands) {
        if (a.plan.estimated_rows <= b.plan.estimated_rows) {
          o.require(a.cost_penalty <= b.cost_penalty && a.composite_score >= b.composite_score, "row monotonicity");
        }
      }
    }
    ++cases;

    // Argmax invariance under positive scaling.
    for (auto& c : cands) c.composite_score = static_cast<double>(static_cast<int>(rng() % 200) - 100) / 7.0;
    const auto best = select_best(cands).values;
    for (double k : kScaleFactors) {
      auto scaled = cands;
      for (auto& c : scaled) c.composite_score *= k;
      o.require(select_best(scaled).values == best, "argmax changed under scaling");
    }
    ++cases;

    // Cold start: uniform scores, round-robin covers the universe within |U| selections.
    HeuristicConfig cold = config;
    cold.cold_start_threshold = 1'000'000;
    const std::size_t top_n = 1 + rng() % 4;
    std::set<std::string> covered;
    for (std::uint64_t cursor = 0; cursor < universe.size(); ++cursor) {
      const auto r = rotate(rank_values(*snap, "t000", q, {}, cold), cursor);
      for (const auto& v : r) o.require(v.score == r.front().score, "cold start scores not uniform");
      o.require(r.front().value == universe[cursor % universe.size()], "cold start is not round-robin");
      for (std::size_t j = 0; j < std::min(top_n, r.size()); ++j) covered.insert(r[j].value);
    }
    o.require(covered.size() == universe.size(), "round-robin left a value unselected");
    ++cases;
  }
  o.detail << cases << " property cases over 30 corpora";
}

void termination(Outcome& o) {
  std::mt19937_64 rng(8);
  std::size_t cases = 0;
  for (int round = 0; round < 200; ++round) {
    const auto universe = accounts("t000", 2 + rng() % 60);
    const auto threshold = 1 + static_cast<std::uint32_t>(rng() % 8);
    TokenPayload p;
    p.tenant_id = "t000";
    std::uint32_t streak = 0;
    std::size_t next = 0;
    for (;;) {
      const bool empty = rng() % 3 != 0;
      const auto take = std::min<std::size_t>(1 + rng() % 4, universe.size() - next);
      std::set<std::string> executed(universe.begin() + static_cast<std::ptrdiff_t>(next),
                                     universe.begin() + static_cast<std::ptrdiff_t>(next + take));
      next += take;
      streak = empty ? streak + 1 : 0;
      const auto r = advance(p, executed, empty ? 0 : 5, p.cursor + 1, universe, threshold);
      const bool expect_end = streak >= threshold || next == universe.size();
      o.require(std::holds_alternative<Exhausted>(r) == expect_end, "termination fired at the wrong step");
      if (std::holds_alternative<Exhausted>(r)) break;
      p = std::get<TokenPayload>(r);
      o.require(p.consecutive_empty == streak, "empty streak miscounted");
      o.require(p.searched_values.size() < universe.size(), "covered universe without exhausting");
    }
    ++cases;
  }

  // End to end: a query with no matches stops after exactly `threshold` pages.
  std::mt19937_64 crng(9);
  auto spec = oracle::random_spec(crng, 60, 50);
  spec.tenants = 1;
  spec.accounts_per_tenant = SizeDistribution::fixed_size(60);
  Stage stage(generate_corpus(spec), 0.1);
  const auto q = parse_query("tenant=t000 and service=eks and resource_type=bucket");
  for (std::uint32_t threshold = 1; threshold <= 6; ++threshold) {
    EngineConfig config;
    config.cardinality_threshold = 1;
    config.heuristics.values_per_candidate = 3;
    config.termination.empty_threshold = threshold;
    const Engine engine(config);
    auto st = stage.state();
    std::size_t pages = 1;
    Tick now = 1;
    auto page = engine.first_page(q, st, now);
    while (page.next_token) {
      page = engine.next_page(q, *page.next_token, st, ++now);
      ++pages;
    }
    o.require(pages == threshold, "engine page count differs from empty_threshold");
    ++cases;
  }
  o.detail << cases << " traces";
}

std::string csv_of(const MetricsReport& r) {
  std::ostringstream out;
  write_metrics_csv(out, r);
  return out.str();
}

void determinism(Outcome& o) {
  auto w = reference_workload(11);
  w.duration = 7200;
  const auto spec = reference_corpus_spec(3);
  const auto a = csv_of(run_benchmark(spec, EngineConfig{}, w));
  const auto b = csv_of(run_benchmark(spec, EngineConfig{}, w));
  w.rebuild_engine = true;
  const auto c = csv_of(run_benchmark(spec, EngineConfig{}, w));
  o.require(a == b, "two runs differ");
  o.require(a == c, "engine reconstruction changed the CSV");
  const auto lines = static_cast<std::size_t>(std::count(a.begin(), a.end(), '\n'));
  o.detail << lines << " CSV lines, " << a.size() << " bytes, identical across 2 runs and a per-request engine rebuild";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"semantic equivalence", semantic_equivalence},
      {"buffer cache mechanism", buffer_cache},
      {"latency trend", latency_trend},
      {"index degradation trend", index_degradation},
      {"AAS trend", aas_trend},
      {"token suite", token_suite},
      {"heuristic properties", heuristic_properties},
      {"termination", termination},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
