#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hssps/metadata.hpp"
#include "hssps/query.hpp"
#include "hssps/storage.hpp"

namespace hssps {

/// Weights of the three partitioning heuristics.
struct HeuristicMix {
  double recency = 0.0;
  double resource_count = 0.0;
  double relevance = 0.0;
  bool operator==(const HeuristicMix&) const = default;
};

struct HeuristicConfig {
  std::uint32_t candidates_per_event = 5;
  std::uint32_t values_per_candidate = 10;
  double weight_relevance = 1.0;
  double weight_cost = 1.0;
  /// Unset: (0.25, 0.25, 0.50) when the query names a service, else (0.5, 0.5, 0).
  std::optional<HeuristicMix> mix;
  /// Ticks of snapshot history a tenant needs before heuristics engage; 0 disables.
  Tick cold_start_threshold = 0;

  void validate() const {
    if (candidates_per_event < 1) throw SpecError("candidates_per_event must be >= 1");
    if (values_per_candidate < 1) throw SpecError("values_per_candidate must be >= 1");
    auto ok = [](double w) { return std::isfinite(w) && w >= 0.0; };
    if (!ok(weight_relevance) || !ok(weight_cost)) throw SpecError("scoring weights must be finite and >= 0");
    if (mix) {
      if (!ok(mix->recency) || !ok(mix->resource_count) || !ok(mix->relevance)) {
        throw SpecError("heuristic mix weights must be finite and >= 0");
      }
      if (!(mix->recency > 0 || mix->resource_count > 0 || mix->relevance > 0)) {
        throw SpecError("at least one heuristic mix weight must be > 0");
      }
    }
    if (cold_start_threshold < 0) throw SpecError("cold_start_threshold must be >= 0");
  }

  HeuristicMix effective_mix(bool names_service) const {
    if (mix) return *mix;
    return names_service ? HeuristicMix{0.25, 0.25, 0.50} : HeuristicMix{0.5, 0.5, 0.0};
  }

  bool operator==(const HeuristicConfig&) const = default;
};

struct RankedValue {
  std::string value;
  double score = 0.0;
  bool operator==(const RankedValue&) const = default;
};

/// Partition values by descending score, ties by ascending value.
using ValueRanking = std::vector<RankedValue>;

/// Services the outer filter references.
inline std::set<Service> referenced_services(const Predicate& p) {
  std::set<Service> out;
  if (p.kind == Predicate::Kind::compare && p.field == Field::service) {
    for (const auto& v : p.values) {
      if (auto s = parse_service(v)) out.insert(*s);
    }
  }
  for (const auto& c : p.children) {
    auto sub = referenced_services(c);
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

/// All partition values of `tenant` known to the snapshot, sorted.
inline std::vector<std::string> partition_universe(const Snapshot& snap, const std::string& tenant, KeyField key) {
  if (key == KeyField::account) return snap.accounts_of(tenant);
  std::vector<std::string> out;
  for (const auto& a : snap.accounts_of(tenant)) {
    for (const auto& [region, counts] : snap.accounts.at(a).per_region) out.push_back(composite_value(a, region));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// active / (active + deleted) for a partition value; 1.0 when it holds no records.
inline double active_ratio(const Snapshot& snap, const std::string& value, KeyField key) {
  std::uint64_t active = 0, total = 0;
  if (key == KeyField::account) {
    if (const auto* s = snap.find(value)) {
      active = s->active_count;
      total = s->total();
    }
  } else {
    const auto [account, region] = split_composite(value);
    if (const auto* s = snap.find(std::string(account))) {
      if (auto it = s->per_region.find(std::string(region)); it != s->per_region.end()) {
        active = it->second.active;
        total = it->second.active + it->second.deleted;
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(active) / static_cast<double>(total);
}

namespace detail {

inline std::string account_of(const std::string& value, KeyField key) {
  return key == KeyField::account ? value : std::string(split_composite(value).first);
}

}  // namespace detail

/// Phase one: scores every non-excluded partition value of the tenant.
///
///   score = mix.recency * recency + mix.resource_count * active_ratio
///         + mix.relevance * service_match
///
/// recency is the account's last-update rank among the tenant's accounts,
/// scaled to [0,1]; service_match is the account's live count of the queried
/// services over the tenant maximum (1.0 when no service is named). During
/// cold start every score is 0, which leaves pure round-robin to `rotate`.
inline ValueRanking rank_values(const Snapshot& snap, const std::string& tenant, const Query& query,
                                const std::set<std::string>& excluded, const HeuristicConfig& config,
                                KeyField key = KeyField::account) {
  const auto& accounts = snap.accounts_of(tenant);
  const auto services = referenced_services(query.filter);
  const auto mix = config.effective_mix(!services.empty());
  const bool cold = config.cold_start_threshold > 0 && snap.history(tenant) < config.cold_start_threshold;

  std::vector<Tick> last_updates;
  std::uint64_t max_match = 0;
  for (const auto& a : accounts) {
    const auto& s = snap.accounts.at(a);
    last_updates.push_back(s.last_updated_at);
    std::uint64_t m = 0;
    for (auto svc : services) m += s.service_count(svc);
    max_match = std::max(max_match, m);
  }
  std::sort(last_updates.begin(), last_updates.end());

  auto recency = [&](const AccountStats& s) {
    if (last_updates.size() <= 1) return 1.0;
    const auto older = std::lower_bound(last_updates.begin(), last_updates.end(), s.last_updated_at) - last_updates.begin();
    return static_cast<double>(older) / static_cast<double>(last_updates.size() - 1);
  };
  auto service_match = [&](const AccountStats& s) {
    if (services.empty()) return 1.0;
    if (max_match == 0) return 0.0;
    std::uint64_t m = 0;
    for (auto svc : services) m += s.service_count(svc);
    return static_cast<double>(m) / static_cast<double>(max_match);
  };

  ValueRanking ranking;
  for (const auto& value : partition_universe(snap, tenant, key)) {
    if (excluded.count(value)) continue;
    double score = 0.0;
    if (!cold) {
      const auto& s = snap.accounts.at(detail::account_of(value, key));
      score = mix.recency * recency(s) + mix.resource_count * active_ratio(snap, value, key) +
              mix.relevance * service_match(s);
    }
    ranking.push_back({value, score});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedValue& a, const RankedValue& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.value < b.value;
  });
  return ranking;
}

/// Rotates each band of equal scores left by `cursor`; order across bands is kept.
inline ValueRanking rotate(ValueRanking ranking, std::uint64_t cursor) {
  auto band_start = ranking.begin();
  while (band_start != ranking.end()) {
    auto band_end = std::find_if(band_start, ranking.end(),
                                 [&](const RankedValue& v) { return v.score != band_start->score; });
    const auto size = static_cast<std::uint64_t>(band_end - band_start);
    std::rotate(band_start, band_start + static_cast<std::ptrdiff_t>(cursor % size), band_end);
    band_start = band_end;
  }
  return ranking;
}

struct PartitionCandidate {
  Query query;
  /// Sorted partition values injected into the query.
  std::vector<std::string> values;
  QueryPlan plan;
  double relevance_score = 0.0;
  double cost_penalty = 0.0;
  double composite_score = 0.0;
};

/// cost_penalty = estimated_rows / max estimated_rows in the event;
/// composite = w_r * relevance - w_c * cost_penalty.
inline void score_candidates(std::vector<PartitionCandidate>& candidates, const HeuristicConfig& config) {
  std::uint64_t max_rows = 0;
  for (const auto& c : candidates) max_rows = std::max(max_rows, c.plan.estimated_rows);
  for (auto& c : candidates) {
    c.cost_penalty =
        max_rows == 0 ? 0.0 : static_cast<double>(c.plan.estimated_rows) / static_cast<double>(max_rows);
    c.composite_score = config.weight_relevance * c.relevance_score - config.weight_cost * c.cost_penalty;
  }
}

/// Phase two inputs: up to N candidates of up to n values each. Candidate i
/// takes ranking slice [i*n, i*n + n); when the ranking runs out the last slice
/// is pulled back to end at the final value, so it overlaps its neighbour but
/// keeps n values. Fewer than n values yield one candidate with all of them.
inline std::vector<PartitionCandidate> generate_candidates(const ValueRanking& ranking, const Query& query,
                                                           KeyField key, const HeuristicConfig& config,
                                                           const TableLayout& layout, const Snapshot& snap,
                                                           const CostModel& cost = {}) {
  if (ranking.empty()) throw std::logic_error("generate_candidates: empty ranking");
  const std::size_t total = ranking.size();
  const std::size_t n = config.values_per_candidate;
  const std::size_t count =
      total <= n ? 1 : std::min<std::size_t>(config.candidates_per_event, (total + n - 1) / n);

  std::vector<PartitionCandidate> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t begin = i * n;
    std::size_t end = std::min(begin + n, total);
    if (end - begin < n && total >= n) begin = total - n;
    PartitionCandidate c;
    for (std::size_t j = begin; j < end; ++j) c.values.push_back(ranking[j].value);
    std::sort(c.values.begin(), c.values.end());
    c.query = augment(query, key, c.values);
    c.plan = explain(layout, snap, c.query, cost);
    double ratio_sum = 0.0;
    for (const auto& v : c.values) ratio_sum += active_ratio(snap, v, key);
    c.relevance_score = ratio_sum / static_cast<double>(c.values.size());
    out.push_back(std::move(c));
  }
  score_candidates(out, config);
  return out;
}

/// Highest composite score; ties go to the lexicographically smallest value set.
inline const PartitionCandidate& select_best(std::span<const PartitionCandidate> candidates) {
  if (candidates.empty()) throw std::logic_error("select_best: no candidates");
  const PartitionCandidate* best = &candidates.front();
  for (const auto& c : candidates.subspan(1)) {
    if (c.composite_score > best->composite_score ||
        (c.composite_score == best->composite_score && c.values < best->values)) {
      best = &c;
    }
  }
  return *best;
}

/// Query identity for round-robin state: FNV-1a of the printed query with
/// partition-key comparisons removed from the outer filter.
inline std::uint64_t query_signature(const Query& q) {
  Query stripped = q;
  auto is_key = [](const Predicate& p) {
    return p.kind == Predicate::Kind::compare && (p.field == Field::account || p.field == Field::account_region);
  };
  if (is_key(stripped.filter)) {
    stripped.filter = Predicate::always_true();
  } else if (stripped.filter.kind == Predicate::Kind::all_of) {
    std::vector<Predicate> kept;
    for (auto& c : stripped.filter.children) {
      if (!is_key(c)) kept.push_back(std::move(c));
    }
    stripped.filter = Predicate::all_of(std::move(kept));
  }
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : print_query(stripped)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Rotation offsets per (tenant, query signature).
class CursorStore {
 public:
  /// Returns the current offset and advances it.
  std::uint64_t advance(const std::string& tenant, std::uint64_t signature) {
    std::lock_guard lock(mu_);
    return cursors_[{tenant, signature}]++;
  }

  std::uint64_t peek(const std::string& tenant, std::uint64_t signature) const {
    std::lock_guard lock(mu_);
    auto it = cursors_.find({tenant, signature});
    return it == cursors_.end() ? 0 : it->second;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::uint64_t>, std::uint64_t> cursors_;
};

}  // namespace hssps
