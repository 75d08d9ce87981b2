#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hssps/types.hpp"

namespace hssps {

struct RegionCounts {
  std::uint64_t active = 0;
  std::uint64_t deleted = 0;
  bool operator==(const RegionCounts&) const = default;
};

struct AccountStats {
  std::string account_id;
  std::string tenant_id;
  std::uint64_t active_count = 0;
  std::uint64_t deleted_count = 0;
  Tick last_updated_at = 0;
  /// Active records per service.
  std::map<Service, std::uint64_t> per_service_counts;
  std::map<std::string, RegionCounts> per_region;
  Tick as_of = 0;

  std::uint64_t total() const { return active_count + deleted_count; }

  std::uint64_t service_count(Service s) const {
    auto it = per_service_counts.find(s);
    return it == per_service_counts.end() ? 0 : it->second;
  }

  bool operator==(const AccountStats&) const = default;
};

/// Table-wide column statistics used for selectivity estimates.
struct ColumnStats {
  std::uint64_t distinct_accounts = 0;
  std::uint64_t distinct_regions = 0;
  std::uint64_t distinct_services = 0;
  std::uint64_t distinct_resource_types = 0;
  Tick min_updated_at = 0;
  Tick max_updated_at = 0;
  bool operator==(const ColumnStats&) const = default;
};

/// Immutable statistics captured at one refresh.
struct Snapshot {
  Tick as_of = 0;
  std::map<std::string, AccountStats> accounts;
  /// Sorted account ids per tenant.
  std::map<std::string, std::vector<std::string>> tenant_accounts;
  /// Tick at which each tenant was first seen by any refresh of this cache lineage.
  std::map<std::string, Tick> tenant_first_seen;
  ColumnStats columns;

  const AccountStats* find(const std::string& account) const {
    auto it = accounts.find(account);
    return it == accounts.end() ? nullptr : &it->second;
  }

  const std::vector<std::string>& accounts_of(const std::string& tenant) const {
    static const std::vector<std::string> kNone;
    auto it = tenant_accounts.find(tenant);
    return it == tenant_accounts.end() ? kNone : it->second;
  }

  /// Ticks of statistics history for `tenant` (0 when never seen).
  Tick history(const std::string& tenant) const {
    auto it = tenant_first_seen.find(tenant);
    return it == tenant_first_seen.end() ? 0 : as_of - it->second;
  }
};

inline constexpr Tick kDefaultRefreshInterval = 15 * 60;

struct MetadataCache {
  std::shared_ptr<const Snapshot> snapshot;
  Tick refresh_interval = kDefaultRefreshInterval;
  /// Shorter (or longer) intervals for specific tenants.
  std::map<std::string, Tick> tenant_intervals;
  Tick last_refresh = 0;

  Tick interval_for(const std::string& tenant) const {
    auto it = tenant_intervals.find(tenant);
    return it == tenant_intervals.end() ? refresh_interval : it->second;
  }

  /// Refresh cadence honoring every per-tenant override.
  Tick effective_interval() const {
    Tick interval = refresh_interval;
    for (const auto& [tenant, t] : tenant_intervals) interval = std::min(interval, t);
    return interval;
  }
};

/// Rebuilds the snapshot wholesale from the corpus at `now`.
inline MetadataCache refresh(const MetadataCache& cache, const Corpus& corpus, Tick now) {
  auto snap = std::make_shared<Snapshot>();
  snap->as_of = now;
  std::set<std::string> regions, types;
  std::set<Service> services;
  bool first = true;
  for (const auto& r : corpus) {
    auto [it, inserted] = snap->accounts.try_emplace(r.account_id);
    auto& s = it->second;
    if (inserted) {
      s.account_id = r.account_id;
      s.tenant_id = r.tenant_id;
      s.last_updated_at = r.updated_at;
      s.as_of = now;
      snap->tenant_accounts[r.tenant_id].push_back(r.account_id);
    }
    s.last_updated_at = std::max(s.last_updated_at, r.updated_at);
    auto& rc = s.per_region[r.region];
    if (r.is_deleted) {
      ++s.deleted_count;
      ++rc.deleted;
    } else {
      ++s.active_count;
      ++rc.active;
      ++s.per_service_counts[r.service];
    }
    regions.insert(r.region);
    types.insert(r.resource_type);
    services.insert(r.service);
    if (first) {
      snap->columns.min_updated_at = snap->columns.max_updated_at = r.updated_at;
      first = false;
    }
    snap->columns.min_updated_at = std::min(snap->columns.min_updated_at, r.updated_at);
    snap->columns.max_updated_at = std::max(snap->columns.max_updated_at, r.updated_at);
  }
  for (auto& [tenant, accounts] : snap->tenant_accounts) {
    std::sort(accounts.begin(), accounts.end());
    accounts.erase(std::unique(accounts.begin(), accounts.end()), accounts.end());
    Tick seen = now;
    if (cache.snapshot) {
      if (auto it = cache.snapshot->tenant_first_seen.find(tenant); it != cache.snapshot->tenant_first_seen.end()) {
        seen = it->second;
      }
    }
    snap->tenant_first_seen[tenant] = seen;
  }
  snap->columns.distinct_accounts = snap->accounts.size();
  snap->columns.distinct_regions = regions.size();
  snap->columns.distinct_services = services.size();
  snap->columns.distinct_resource_types = types.size();

  MetadataCache out = cache;
  out.snapshot = std::move(snap);
  out.last_refresh = now;
  return out;
}

/// Refreshes iff no snapshot exists yet or `now - last_refresh` reaches the
/// interval (boundary inclusive). With a tenant, that tenant's interval applies.
inline MetadataCache maybe_refresh(const MetadataCache& cache, const Corpus& corpus, Tick now,
                                   const std::string* tenant = nullptr) {
  const Tick interval = tenant ? cache.interval_for(*tenant) : cache.effective_interval();
  if (cache.snapshot && now - cache.last_refresh < interval) return cache;
  return refresh(cache, corpus, now);
}

/// Shared holder used by the engine. Readers take a snapshot pointer under
/// the lock and keep it for the whole evaluation.
class MetadataStore {
 public:
  MetadataStore(std::shared_ptr<const Corpus> corpus, Tick refresh_interval = kDefaultRefreshInterval)
      : corpus_(std::move(corpus)) {
    cache_.refresh_interval = refresh_interval;
  }

  void set_tenant_interval(const std::string& tenant, Tick interval) {
    std::lock_guard lock(mu_);
    cache_.tenant_intervals[tenant] = interval;
  }

  std::shared_ptr<const Snapshot> current(Tick now, const std::string* tenant = nullptr) {
    std::lock_guard lock(mu_);
    cache_ = maybe_refresh(cache_, *corpus_, now, tenant);
    return cache_.snapshot;
  }

  MetadataCache cache() const {
    std::lock_guard lock(mu_);
    return cache_;
  }

 private:
  std::shared_ptr<const Corpus> corpus_;
  mutable std::mutex mu_;
  MetadataCache cache_;
};

/// One line per account:
/// account tenant active deleted last_updated_at services(as svc:n,...) as_of
inline void dump_snapshot(std::ostream& out, const Snapshot& snap) {
  for (const auto& [id, s] : snap.accounts) {
    out << id << '\t' << s.tenant_id << '\t' << s.active_count << '\t' << s.deleted_count << '\t'
        << s.last_updated_at << '\t';
    bool first = true;
    for (const auto& [svc, n] : s.per_service_counts) {
      out << (first ? "" : ",") << to_string(svc) << ':' << n;
      first = false;
    }
    out << '\t' << s.as_of << '\n';
  }
}

}  // namespace hssps
