#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hssps/heuristics.hpp"
#include "hssps/metadata.hpp"
#include "hssps/pagination.hpp"
#include "hssps/query.hpp"
#include "hssps/storage.hpp"

namespace hssps {

struct EngineConfig {
  /// Minimum tenant row count before a query is partitioned.
  std::uint64_t cardinality_threshold = 10'000;
  KeyField key_field = KeyField::account;
  HeuristicConfig heuristics;
  std::map<std::string, HeuristicConfig> tenant_heuristics;
  TerminationConfig termination;
  TokenKey token_key{};
  Tick token_ttl = kDefaultTokenTtl;

  const HeuristicConfig& heuristics_for(const std::string& tenant) const {
    auto it = tenant_heuristics.find(tenant);
    return it == tenant_heuristics.end() ? heuristics : it->second;
  }

  void validate() const {
    heuristics.validate();
    for (const auto& [tenant, h] : tenant_heuristics) h.validate();
    termination.validate();
    if (token_ttl < 1) throw SpecError("token_ttl must be >= 1 tick");
  }
};

/// Mutable collaborators shared by engine instances.
struct EngineState {
  const TableLayout& layout;
  BufferPool& pool;
  const CostModel& cost;
  MetadataStore& metadata;
  CursorStore& cursors;
};

/// What one partitioning event chose, for observability.
struct EventDiagnostics {
  std::vector<std::string> values;
  double relevance_score = 0.0;
  double cost_penalty = 0.0;
  double composite_score = 0.0;
  std::size_t candidates = 0;
  std::uint32_t consecutive_empty = 0;
  bool empty_result = false;
};

struct PageResult {
  std::vector<RowId> rows;
  /// Absent once the traversal is exhausted (and always for pass-through).
  std::optional<std::string> next_token;
  ExecutionStats stats;
  QueryPlan plan;
  std::optional<EventDiagnostics> diagnostics;
};

/// A page request planned but not yet executed. `query`/`plan` may be run
/// directly or interleaved by a scheduler, then handed to Engine::complete.
struct PreparedPage {
  Query query;
  QueryPlan plan;
  bool paginated = false;
  std::size_t explains = 0;
  // Pagination context, set when `paginated`.
  TokenPayload payload;
  std::vector<std::string> universe;
  std::set<std::string> executed_values;
  std::uint32_t empty_threshold = 1;
  std::optional<EventDiagnostics> diagnostics;
  /// Nothing left to search; completes with no rows and no token.
  bool nothing_to_run = false;
};

/// Partitioning orchestrator. Holds only configuration: every page request
/// is answered from (query, token, key, snapshot) plus the shared storage.
class Engine {
 public:
  explicit Engine(EngineConfig config) : config_(std::move(config)) { config_.validate(); }

  const EngineConfig& config() const { return config_; }

  /// Unscoped by the partition key and the tenant has enough rows.
  bool eligible(const Query& q, const TableLayout& layout) const {
    return !constrains_key(q, config_.key_field) && layout.tenant_rows(q.tenant_id) >= config_.cardinality_threshold &&
           layout.tenant_rows(q.tenant_id) > 0;
  }

  PreparedPage prepare_first(const Query& q, const EngineState& st, Tick now) const {
    if (!eligible(q, st.layout)) {
      PreparedPage page;
      page.query = q;
      const auto snap = st.metadata.current(now, &q.tenant_id);
      page.plan = explain(st.layout, *snap, q, st.cost);
      page.explains = 1;
      return page;
    }
    const auto snap = st.metadata.current(now, &q.tenant_id);
    TokenPayload payload;
    payload.tenant_id = q.tenant_id;
    payload.cursor = st.cursors.advance(q.tenant_id, query_signature(q));
    return partition_event(q, st, *snap, std::move(payload));
  }

  PreparedPage prepare_next(const Query& q, std::string_view token, const EngineState& st, Tick now) const {
    const auto snap = st.metadata.current(now, &q.tenant_id);
    const auto universe = partition_universe(*snap, q.tenant_id, config_.key_field);
    auto payload = verify(token, config_.token_key, q.tenant_id, now, universe);
    return partition_event(q, st, *snap, std::move(payload));
  }

  /// Finishes a prepared page with its execution result: advances the
  /// traversal state and mints the next token unless exhausted.
  PageResult complete(PreparedPage page, ExecutionResult result, Tick now) const {
    PageResult out;
    out.rows = std::move(result.rows);
    out.stats = result.stats;
    out.plan = std::move(page.plan);
    out.diagnostics = std::move(page.diagnostics);
    if (out.diagnostics) out.diagnostics->empty_result = out.rows.empty();
    if (!page.paginated || page.nothing_to_run) return out;

    auto next = advance(page.payload, page.executed_values, out.rows.size(), page.payload.cursor + 1, page.universe,
                        page.empty_threshold);
    if (auto* p = std::get_if<TokenPayload>(&next)) {
      out.diagnostics->consecutive_empty = p->consecutive_empty;
      p->issued_at = now;
      p->expires_at = now + config_.token_ttl;
      out.next_token = mint(*p, config_.token_key, page.universe);
    } else {
      out.diagnostics->consecutive_empty = out.rows.empty() ? page.payload.consecutive_empty + 1 : 0;
    }
    return out;
  }

  PageResult first_page(const Query& q, const EngineState& st, Tick now) const {
    return run(prepare_first(q, st, now), st, now);
  }

  PageResult next_page(const Query& q, std::string_view token, const EngineState& st, Tick now) const {
    return run(prepare_next(q, token, st, now), st, now);
  }

 private:
  PageResult run(PreparedPage page, const EngineState& st, Tick now) const {
    ExecutionResult result;
    if (!page.nothing_to_run) result = execute(st.layout, st.pool, st.cost, page.query, page.plan);
    return complete(std::move(page), std::move(result), now);
  }

  PreparedPage partition_event(const Query& q, const EngineState& st, const Snapshot& snap,
                               TokenPayload payload) const {
    const auto& heuristics = config_.heuristics_for(q.tenant_id);
    PreparedPage page;
    page.paginated = true;
    page.query = q;
    page.universe = partition_universe(snap, q.tenant_id, config_.key_field);
    page.empty_threshold = config_.termination.threshold_for(q.query_class);

    auto ranking = rotate(rank_values(snap, q.tenant_id, q, payload.searched_values, heuristics, config_.key_field),
                          payload.cursor);
    page.payload = std::move(payload);
    if (ranking.empty()) {
      page.nothing_to_run = true;
      page.diagnostics = EventDiagnostics{};
      return page;
    }
    auto candidates = generate_candidates(ranking, q, config_.key_field, heuristics, st.layout, snap, st.cost);
    const auto& best = select_best(candidates);
    page.query = best.query;
    page.plan = best.plan;
    page.explains = candidates.size();
    page.executed_values.insert(best.values.begin(), best.values.end());
    page.diagnostics = EventDiagnostics{best.values, best.relevance_score, best.cost_penalty, best.composite_score,
                                        candidates.size(), 0, false};
    return page;
  }

  EngineConfig config_;
};

}  // namespace hssps
