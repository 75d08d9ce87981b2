#pragma once

#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hssps/types.hpp"

namespace hssps {

using PageId = std::uint32_t;

inline constexpr std::uint32_t kRecordOverhead = 16;
inline constexpr std::uint32_t kIndexEntryBytes = 32;
inline constexpr std::uint32_t kDefaultPageSize = 8192;

class LayoutError : public SpecError {
 public:
  using SpecError::SpecError;
};

/// Requested access path does not exist (e.g. no secondary index on the field).
class UnsupportedPath : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class IndexedField : std::uint8_t { service, region, resource_type };

inline std::string_view to_string(IndexedField f) {
  switch (f) {
    case IndexedField::service: return "service";
    case IndexedField::region: return "region";
    case IndexedField::resource_type: return "resource_type";
  }
  return "?";
}

inline std::string_view index_key(const ResourceRecord& r, IndexedField f) {
  switch (f) {
    case IndexedField::service: return to_string(r.service);
    case IndexedField::region: return r.region;
    case IndexedField::resource_type: return r.resource_type;
  }
  return {};
}

/// Per-execution accounting. Invariant: pages_touched == shared_hits + disk_reads.
struct ExecutionStats {
  std::uint64_t pages_touched = 0;
  std::uint64_t shared_hits = 0;
  std::uint64_t disk_reads = 0;
  std::uint64_t evictions = 0;
  double simulated_time = 0.0;
  std::uint64_t rows_returned = 0;
  std::uint64_t rows_examined = 0;

  ExecutionStats& operator+=(const ExecutionStats& o) {
    pages_touched += o.pages_touched;
    shared_hits += o.shared_hits;
    disk_reads += o.disk_reads;
    evictions += o.evictions;
    simulated_time += o.simulated_time;
    rows_returned += o.rows_returned;
    rows_examined += o.rows_examined;
    return *this;
  }

  bool operator==(const ExecutionStats&) const = default;
};

/// Simulated time units charged per page access.
struct CostModel {
  double hit_cost = 1.0;
  double miss_cost = 25.0;

  void validate() const {
    if (!(std::isfinite(hit_cost) && hit_cost > 0.0 && std::isfinite(miss_cost) && miss_cost > 0.0)) {
      throw SpecError("cost model: hit and miss costs must be finite and > 0");
    }
    if (!(miss_cost > hit_cost)) throw SpecError("cost model: miss_cost must exceed hit_cost");
  }

  double time(std::uint64_t hits, std::uint64_t misses) const {
    return static_cast<double>(hits) * hit_cost + static_cast<double>(misses) * miss_cost;
  }
};

enum class AccessOutcome : std::uint8_t { hit, miss, miss_evicted };

struct PoolCounters {
  std::uint64_t shared_hits = 0;
  std::uint64_t disk_reads = 0;
  std::uint64_t evictions = 0;
  bool operator==(const PoolCounters&) const = default;
};

/// Bounded LRU buffer pool. All mutation goes through one mutex, so callers
/// on several threads see a serialized access order.
class BufferPool {
 public:
  explicit BufferPool(std::size_t capacity_pages) : capacity_(capacity_pages) {
    if (capacity_pages < 1) throw SpecError("buffer pool capacity must be >= 1 page");
  }

  BufferPool(const BufferPool&) = delete;
  BufferPool& operator=(const BufferPool&) = delete;

  AccessOutcome access(PageId page) {
    std::lock_guard lock(mu_);
    if (auto it = where_.find(page); it != where_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      ++counters_.shared_hits;
      return AccessOutcome::hit;
    }
    ++counters_.disk_reads;
    AccessOutcome outcome = AccessOutcome::miss;
    if (lru_.size() == capacity_) {
      where_.erase(lru_.back());
      lru_.pop_back();
      ++counters_.evictions;
      outcome = AccessOutcome::miss_evicted;
    }
    lru_.push_front(page);
    where_.emplace(page, lru_.begin());
    return outcome;
  }

  /// Empties the pool; cumulative counters are kept.
  void evict_all() {
    std::lock_guard lock(mu_);
    lru_.clear();
    where_.clear();
  }

  bool contains(PageId page) const {
    std::lock_guard lock(mu_);
    return where_.count(page) != 0;
  }

  std::size_t resident() const {
    std::lock_guard lock(mu_);
    return lru_.size();
  }

  std::size_t capacity() const { return capacity_; }

  PoolCounters counters() const {
    std::lock_guard lock(mu_);
    return counters_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<PageId> lru_;  // front = most recently used
  std::unordered_map<PageId, std::list<PageId>::iterator> where_;
  PoolCounters counters_;
};

inline void evict_all(BufferPool& pool) { pool.evict_all(); }

/// Records one page access in `stats` and returns the outcome.
inline AccessOutcome touch_page(BufferPool& pool, const CostModel& cost, PageId page, ExecutionStats& stats) {
  const auto outcome = pool.access(page);
  ++stats.pages_touched;
  if (outcome == AccessOutcome::hit) {
    ++stats.shared_hits;
    stats.simulated_time += cost.hit_cost;
  } else {
    ++stats.disk_reads;
    stats.simulated_time += cost.miss_cost;
    if (outcome == AccessOutcome::miss_evicted) ++stats.evictions;
  }
  return outcome;
}

struct Page {
  PageId page_id = 0;
  std::uint32_t first_slot = 0;
  std::uint32_t slot_count = 0;
  std::uint32_t bytes_used = 0;
};

/// Contiguous page run, with the slot range it houses.
struct PageRun {
  PageId first_page = 0;
  std::uint32_t page_count = 0;
  std::uint32_t first_slot = 0;
  std::uint32_t slot_end = 0;
};

/// One page access of an execution. Slots [slot_begin, slot_end) are evaluated
/// after the access; index pages carry an empty range. `pass` separates the
/// build and probe phases of a correlated execution.
struct PageStep {
  PageId page = 0;
  std::uint32_t slot_begin = 0;
  std::uint32_t slot_end = 0;
  std::uint8_t pass = 0;
};

/// Secondary index on (tenant, field value), entries in slot order within a key.
/// Leaf pages hold page_size / kIndexEntryBytes entries; one root page per index.
class SecondaryIndex {
 public:
  struct Entry {
    std::uint32_t tenant;
    std::string_view key;
    std::uint32_t slot;
  };

  SecondaryIndex() = default;

  SecondaryIndex(IndexedField field, std::vector<Entry> entries, std::uint32_t page_size, PageId first_page)
      : field_(field), entries_(std::move(entries)), first_leaf_(first_page) {
    entries_per_page_ = std::max<std::uint32_t>(1, page_size / kIndexEntryBytes);
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      if (a.tenant != b.tenant) return a.tenant < b.tenant;
      if (a.key != b.key) return a.key < b.key;
      return a.slot < b.slot;
    });
    leaf_count_ = static_cast<std::uint32_t>((entries_.size() + entries_per_page_ - 1) / entries_per_page_);
    root_ = first_leaf_ + leaf_count_;
  }

  IndexedField field() const { return field_; }
  PageId root_page() const { return root_; }
  std::uint32_t page_count() const { return leaf_count_ + 1; }
  std::uint32_t entries_per_page() const { return entries_per_page_; }
  const std::vector<Entry>& entries() const { return entries_; }

  PageId leaf_of(std::size_t entry_pos) const {
    return first_leaf_ + static_cast<PageId>(entry_pos / entries_per_page_);
  }

  /// Entry range [lo, hi) for one key of one tenant.
  std::pair<std::size_t, std::size_t> range(std::uint32_t tenant, std::string_view key) const {
    auto less = [](const Entry& e, const std::pair<std::uint32_t, std::string_view>& k) {
      return e.tenant != k.first ? e.tenant < k.first : e.key < k.second;
    };
    auto greater = [](const std::pair<std::uint32_t, std::string_view>& k, const Entry& e) {
      return k.first != e.tenant ? k.first < e.tenant : k.second < e.key;
    };
    const auto k = std::make_pair(tenant, key);
    const auto lo = std::lower_bound(entries_.begin(), entries_.end(), k, less);
    const auto hi = std::upper_bound(lo, entries_.end(), k, greater);
    return {static_cast<std::size_t>(lo - entries_.begin()), static_cast<std::size_t>(hi - entries_.begin())};
  }

 private:
  IndexedField field_ = IndexedField::service;
  std::vector<Entry> entries_;
  PageId first_leaf_ = 0;
  PageId root_ = 0;
  std::uint32_t entries_per_page_ = 1;
  std::uint32_t leaf_count_ = 0;
};

struct LayoutOptions {
  std::uint32_t page_size = kDefaultPageSize;
  std::vector<IndexedField> indexes = {IndexedField::service, IndexedField::region, IndexedField::resource_type};
};

/// Account-clustered heap: records sorted by (tenant, account, region), each
/// account starting on a fresh page, so one account occupies one contiguous
/// page run. Secondary index pages are numbered after the data pages.
class TableLayout {
 public:
  TableLayout(std::shared_ptr<const Corpus> corpus, const LayoutOptions& options = {})
      : corpus_(std::move(corpus)), page_size_(options.page_size) {
    const Corpus& records = *corpus_;
    slots_.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) slots_[i] = static_cast<RowId>(i);
    std::stable_sort(slots_.begin(), slots_.end(), [&](RowId a, RowId b) {
      const auto& ra = records[a];
      const auto& rb = records[b];
      if (ra.tenant_id != rb.tenant_id) return ra.tenant_id < rb.tenant_id;
      if (ra.account_id != rb.account_id) return ra.account_id < rb.account_id;
      return ra.region < rb.region;
    });

    slot_page_.resize(slots_.size());
    for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
      const auto& r = records[slots_[slot]];
      const std::uint64_t footprint = std::uint64_t{r.payload_bytes} + kRecordOverhead;
      if (footprint > page_size_) {
        throw LayoutError("record " + std::to_string(r.resource_id) + " (" + std::to_string(footprint) +
                          " B) does not fit a " + std::to_string(page_size_) + " B page");
      }
      const bool new_account = slot == 0 || records[slots_[slot - 1]].account_id != r.account_id;
      if (new_account) {
        if (auto it = account_tenant_.find(r.account_id); it != account_tenant_.end()) {
          if (it->second != r.tenant_id) {
            throw LayoutError("account " + r.account_id + " belongs to more than one tenant");
          }
        }
        account_tenant_.emplace(r.account_id, r.tenant_id);
        if (tenant_ids_.empty() || tenant_ids_.back() != r.tenant_id) {
          tenant_index_.emplace(r.tenant_id, static_cast<std::uint32_t>(tenant_ids_.size()));
          tenant_ids_.push_back(r.tenant_id);
          tenant_accounts_.emplace_back();
        }
        tenant_accounts_.back().push_back(r.account_id);
      }
      if (new_account || pages_.back().bytes_used + footprint > page_size_) {
        pages_.push_back(Page{static_cast<PageId>(pages_.size()), slot, 0, 0});
      }
      auto& page = pages_.back();
      ++page.slot_count;
      page.bytes_used += static_cast<std::uint32_t>(footprint);
      slot_page_[slot] = page.page_id;

      auto& run = account_runs_[r.account_id];
      if (new_account) run = PageRun{page.page_id, 0, slot, slot};
      run.page_count = page.page_id - run.first_page + 1;
      run.slot_end = slot + 1;

      auto& region_run = region_runs_[region_key(r.account_id, r.region)];
      if (region_run.slot_end == 0) region_run = PageRun{page.page_id, 0, slot, slot};
      region_run.page_count = page.page_id - region_run.first_page + 1;
      region_run.slot_end = slot + 1;
    }

    PageId next_page = static_cast<PageId>(pages_.size());
    for (auto field : options.indexes) {
      std::vector<SecondaryIndex::Entry> entries;
      entries.reserve(slots_.size());
      for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
        const auto& r = records[slots_[slot]];
        entries.push_back({tenant_index_.at(r.tenant_id), index_key(r, field), slot});
      }
      SecondaryIndex index(field, std::move(entries), page_size_, next_page);
      next_page += index.page_count();
      indexes_.emplace(field, std::move(index));
    }
    total_pages_ = next_page;
  }

  const Corpus& records() const { return *corpus_; }
  const std::shared_ptr<const Corpus>& corpus_ptr() const { return corpus_; }
  std::uint32_t page_size() const { return page_size_; }
  const std::vector<Page>& pages() const { return pages_; }
  std::size_t data_page_count() const { return pages_.size(); }
  std::size_t total_page_count() const { return total_pages_; }
  std::size_t slot_count() const { return slots_.size(); }

  RowId row_at(std::uint32_t slot) const { return slots_[slot]; }
  const ResourceRecord& record_at(std::uint32_t slot) const { return (*corpus_)[slots_[slot]]; }
  PageId page_of_slot(std::uint32_t slot) const { return slot_page_[slot]; }

  const std::vector<std::string>& tenants() const { return tenant_ids_; }

  std::optional<std::uint32_t> tenant_index(std::string_view tenant) const {
    auto it = tenant_index_.find(std::string(tenant));
    if (it == tenant_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Accounts of `tenant` in layout (lexicographic) order.
  const std::vector<std::string>& accounts_of(std::string_view tenant) const {
    static const std::vector<std::string> kNone;
    const auto idx = tenant_index(tenant);
    return idx ? tenant_accounts_[*idx] : kNone;
  }

  const std::string* tenant_of(std::string_view account) const {
    auto it = account_tenant_.find(std::string(account));
    return it == account_tenant_.end() ? nullptr : &it->second;
  }

  std::optional<PageRun> account_run(std::string_view account) const {
    auto it = account_runs_.find(std::string(account));
    if (it == account_runs_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<PageRun> region_run(std::string_view account, std::string_view region) const {
    auto it = region_runs_.find(region_key(account, region));
    if (it == region_runs_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t tenant_rows(std::string_view tenant) const {
    std::uint64_t rows = 0;
    for (const auto& a : accounts_of(tenant)) {
      const auto run = account_runs_.at(a);
      rows += run.slot_end - run.first_slot;
    }
    return rows;
  }

  /// One step per distinct page covered by `runs`, in page order; each step
  /// evaluates every slot on its page.
  std::vector<PageStep> scope_steps(const std::vector<PageRun>& runs, std::uint8_t pass = 0) const {
    std::vector<PageId> ids;
    for (const auto& run : runs) {
      for (std::uint32_t i = 0; i < run.page_count; ++i) ids.push_back(run.first_page + i);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<PageStep> steps;
    steps.reserve(ids.size());
    for (auto id : ids) {
      const auto& p = pages_[id];
      steps.push_back(PageStep{id, p.first_slot, p.first_slot + p.slot_count, pass});
    }
    return steps;
  }

  std::size_t scope_page_count(const std::vector<PageRun>& runs) const { return scope_steps(runs).size(); }

  /// Every data page, in order.
  std::vector<PageStep> full_steps() const {
    std::vector<PageStep> steps;
    steps.reserve(pages_.size());
    for (const auto& p : pages_) steps.push_back(PageStep{p.page_id, p.first_slot, p.first_slot + p.slot_count, 0});
    return steps;
  }

  bool has_index(IndexedField field) const { return indexes_.count(field) != 0; }

  const SecondaryIndex& index(IndexedField field) const {
    auto it = indexes_.find(field);
    if (it == indexes_.end()) throw UnsupportedPath("no secondary index on " + std::string(to_string(field)));
    return it->second;
  }

  /// Index traversal for `tenant` and each of `keys`: the root page, then each
  /// leaf page followed by one data-page access per entry on that leaf.
  std::vector<PageStep> index_steps(IndexedField field, std::string_view tenant,
                                    const std::vector<std::string>& keys) const {
    const auto& idx = index(field);
    std::vector<PageStep> steps;
    const auto t = tenant_index(tenant);
    std::set<std::string> unique_keys(keys.begin(), keys.end());
    for (const auto& key : unique_keys) {
      steps.push_back(PageStep{idx.root_page(), 0, 0, 0});
      if (idx.entries().empty() || !t) continue;
      const auto [lo, hi] = idx.range(*t, key);
      const std::size_t first_pos = std::min(lo, idx.entries().size() - 1);
      PageId leaf = idx.leaf_of(first_pos);
      steps.push_back(PageStep{leaf, 0, 0, 0});
      for (std::size_t pos = lo; pos < hi; ++pos) {
        if (idx.leaf_of(pos) != leaf) {
          leaf = idx.leaf_of(pos);
          steps.push_back(PageStep{leaf, 0, 0, 0});
        }
        const auto slot = idx.entries()[pos].slot;
        steps.push_back(PageStep{slot_page_[slot], slot, slot + 1, 0});
      }
    }
    return steps;
  }

 private:
  static std::string region_key(std::string_view account, std::string_view region) {
    std::string key(account);
    key += '\x1f';
    key += region;
    return key;
  }

  std::shared_ptr<const Corpus> corpus_;
  std::uint32_t page_size_;
  std::vector<RowId> slots_;
  std::vector<PageId> slot_page_;
  std::vector<Page> pages_;
  std::vector<std::string> tenant_ids_;
  std::map<std::string, std::uint32_t> tenant_index_;
  std::vector<std::vector<std::string>> tenant_accounts_;
  std::map<std::string, std::string> account_tenant_;
  std::map<std::string, PageRun> account_runs_;
  std::map<std::string, PageRun> region_runs_;
  std::map<IndexedField, SecondaryIndex> indexes_;
  std::size_t total_pages_ = 0;
};

/// Pool capacity as a fraction of the data pages, at least one page.
inline std::size_t pool_capacity_for(const TableLayout& layout, double fraction) {
  const auto pages = static_cast<double>(layout.data_page_count());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * pages)));
}

struct LoadedTable {
  TableLayout layout;
  std::unique_ptr<BufferPool> pool;
};

/// Packs the corpus into pages and returns the layout with a cold pool.
inline LoadedTable load_corpus(Corpus records, std::uint32_t page_size, std::size_t capacity_pages,
                               std::vector<IndexedField> indexes = LayoutOptions{}.indexes) {
  LayoutOptions options{page_size, std::move(indexes)};
  return LoadedTable{TableLayout(std::make_shared<const Corpus>(std::move(records)), options),
                     std::make_unique<BufferPool>(capacity_pages)};
}

struct ScanResult {
  std::vector<RowId> rows;
  ExecutionStats stats;
};

/// Runs `steps` against the pool; every slot in each step is tested with `pred`.
template <typename Pred>
ScanResult run_steps(const TableLayout& layout, BufferPool& pool, const CostModel& cost,
                     const std::vector<PageStep>& steps, Pred&& pred) {
  ScanResult out;
  for (const auto& step : steps) {
    touch_page(pool, cost, step.page, out.stats);
    for (auto slot = step.slot_begin; slot < step.slot_end; ++slot) {
      ++out.stats.rows_examined;
      if (pred(layout.record_at(slot))) out.rows.push_back(layout.row_at(slot));
    }
  }
  out.stats.rows_returned = out.rows.size();
  return out;
}

/// Sequential scan. With `accounts` set, only those accounts' page runs are
/// read (an empty set reads nothing); without it, every data page is read.
template <typename Pred>
ScanResult scan(const TableLayout& layout, BufferPool& pool, const CostModel& cost,
                const std::optional<std::set<std::string>>& accounts, Pred&& pred) {
  if (!accounts) return run_steps(layout, pool, cost, layout.full_steps(), pred);
  std::vector<PageRun> runs;
  for (const auto& a : *accounts) {
    if (auto run = layout.account_run(a)) runs.push_back(*run);
  }
  return run_steps(layout, pool, cost, layout.scope_steps(runs), pred);
}

struct IndexProbe {
  IndexedField field;
  std::string tenant;
  std::vector<std::string> keys;
};

/// Secondary-index scan: index pages plus one data-page access per matching
/// entry. Throws UnsupportedPath when the field has no index.
template <typename Pred>
ScanResult index_scan(const TableLayout& layout, BufferPool& pool, const CostModel& cost, const IndexProbe& probe,
                      Pred&& pred) {
  return run_steps(layout, pool, cost, layout.index_steps(probe.field, probe.tenant, probe.keys), pred);
}

}  // namespace hssps
