#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hssps/metadata.hpp"
#include "hssps/storage.hpp"
#include "hssps/types.hpp"

namespace hssps {

enum class Field : std::uint8_t { account, region, service, resource_type, updated_at, account_region };

inline std::string_view to_string(Field f) {
  switch (f) {
    case Field::account: return "account";
    case Field::region: return "region";
    case Field::service: return "service";
    case Field::resource_type: return "resource_type";
    case Field::updated_at: return "updated_at";
    case Field::account_region: return "account_region";
  }
  return "?";
}

inline std::optional<Field> parse_field(std::string_view name) {
  for (auto f : {Field::account, Field::region, Field::service, Field::resource_type, Field::updated_at,
                 Field::account_region}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

/// Partition key the engine scopes queries by.
enum class KeyField : std::uint8_t { account, account_region };

inline Field key_column(KeyField k) { return k == KeyField::account ? Field::account : Field::account_region; }

/// Composite key value: `<account>@<region>`.
inline std::string composite_value(std::string_view account, std::string_view region) {
  std::string v(account);
  v += '@';
  v += region;
  return v;
}

inline std::pair<std::string_view, std::string_view> split_composite(std::string_view value) {
  const auto at = value.rfind('@');
  if (at == std::string_view::npos) return {value, {}};
  return {value.substr(0, at), value.substr(at + 1)};
}

enum class CompareOp : std::uint8_t { eq, in, ge, lt };

/// Predicate tree over record fields. Set membership values are kept sorted
/// and unique; conjunctions are flattened.
struct Predicate {
  enum class Kind : std::uint8_t { always, compare, all_of, any_of };

  Kind kind = Kind::always;
  Field field = Field::account;
  CompareOp op = CompareOp::eq;
  std::vector<std::string> values;
  Tick bound = 0;
  std::vector<Predicate> children;

  static Predicate always_true() { return {}; }

  static Predicate eq(Field f, std::string value) {
    if (f == Field::updated_at) throw std::invalid_argument("updated_at supports only range comparisons");
    Predicate p;
    p.kind = Kind::compare;
    p.field = f;
    p.op = CompareOp::eq;
    p.values = {std::move(value)};
    return p;
  }

  static Predicate in(Field f, std::vector<std::string> vs) {
    if (f == Field::updated_at) throw std::invalid_argument("updated_at supports only range comparisons");
    if (vs.empty()) throw std::invalid_argument("set membership needs at least one value");
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    Predicate p;
    p.kind = Kind::compare;
    p.field = f;
    p.op = vs.size() == 1 ? CompareOp::eq : CompareOp::in;
    p.values = std::move(vs);
    return p;
  }

  static Predicate updated_at_least(Tick t) { return range(CompareOp::ge, t); }
  static Predicate updated_before(Tick t) { return range(CompareOp::lt, t); }

  static Predicate all_of(std::vector<Predicate> parts) {
    std::vector<Predicate> flat;
    for (auto& p : parts) {
      if (p.kind == Kind::always) continue;
      if (p.kind == Kind::all_of) {
        for (auto& c : p.children) flat.push_back(std::move(c));
      } else {
        flat.push_back(std::move(p));
      }
    }
    if (flat.empty()) return always_true();
    if (flat.size() == 1) return std::move(flat.front());
    Predicate p;
    p.kind = Kind::all_of;
    p.children = std::move(flat);
    return p;
  }

  static Predicate any_of(std::vector<Predicate> parts) {
    if (parts.empty()) throw std::invalid_argument("disjunction needs at least one branch");
    for (const auto& p : parts) {
      if (p.kind == Kind::always) return always_true();
    }
    if (parts.size() == 1) return std::move(parts.front());
    Predicate p;
    p.kind = Kind::any_of;
    p.children = std::move(parts);
    return p;
  }

  bool matches(const ResourceRecord& r) const {
    switch (kind) {
      case Kind::always: return true;
      case Kind::compare: return compare(r);
      case Kind::all_of:
        return std::all_of(children.begin(), children.end(), [&](const Predicate& c) { return c.matches(r); });
      case Kind::any_of:
        return std::any_of(children.begin(), children.end(), [&](const Predicate& c) { return c.matches(r); });
    }
    return false;
  }

  /// True if any comparison in the tree references `f`.
  bool references(Field f) const {
    if (kind == Kind::compare) return field == f;
    return std::any_of(children.begin(), children.end(), [&](const Predicate& c) { return c.references(f); });
  }

  bool operator==(const Predicate&) const = default;

 private:
  static Predicate range(CompareOp op, Tick t) {
    Predicate p;
    p.kind = Kind::compare;
    p.field = Field::updated_at;
    p.op = op;
    p.bound = t;
    return p;
  }

  bool compare(const ResourceRecord& r) const {
    if (field == Field::updated_at) return op == CompareOp::ge ? r.updated_at >= bound : r.updated_at < bound;
    auto contains = [&](std::string_view v) { return std::binary_search(values.begin(), values.end(), v); };
    switch (field) {
      case Field::account: return contains(r.account_id);
      case Field::region: return contains(r.region);
      case Field::service: return contains(to_string(r.service));
      case Field::resource_type: return contains(r.resource_type);
      case Field::account_region: {
        // values are sorted composite strings; compare without allocating
        return std::any_of(values.begin(), values.end(), [&](const std::string& v) {
          auto [a, reg] = split_composite(v);
          return a == r.account_id && reg == r.region;
        });
      }
      case Field::updated_at: break;
    }
    return false;
  }
};

inline constexpr std::uint32_t kDefaultPageSizeRows = 100;

/// A tenant-scoped query. `correlated`, when set, keeps only rows whose
/// account also holds a live record satisfying it (a self semi-join on account).
struct Query {
  std::string tenant_id;
  Predicate filter;
  std::optional<Predicate> correlated;
  std::uint32_t page_size_rows = kDefaultPageSizeRows;
  std::string query_class;

  bool operator==(const Query&) const = default;
};

/// Live record of the query's tenant satisfying `p`.
inline bool row_matches(const Query& q, const Predicate& p, const ResourceRecord& r) {
  return !r.is_deleted && r.tenant_id == q.tenant_id && p.matches(r);
}

// ---------------------------------------------------------------------------
// Text form. Grammar (whitespace-insensitive, keywords lowercase):
//
//   query   := clause ( "and" clause )*
//   clause  := "tenant" "=" word | "class" "=" word | "rows" "=" int
//            | "exists" "(" filter ")" | cond
//   filter  := cond ( "and" cond )*
//   cond    := field "=" word | field "in" "(" word ( "," word )* ")"
//            | "updated_at" ">=" int | "updated_at" "<" int
//            | "(" filter ( "or" filter )+ ")"
//   field   := account | region | service | resource_type | account_region
//   word    := [A-Za-z0-9_.:@+-]+
// ---------------------------------------------------------------------------

class QueryParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : text_(text) {}

  Query parse() {
    Query q;
    bool have_tenant = false;
    std::vector<Predicate> conds;
    do {
      const auto save = pos_;
      const auto word = peek_word();
      if (word == "tenant" || word == "class" || word == "rows") {
        next_word();
        expect("=");
        const auto value = next_word();
        if (word == "tenant") {
          q.tenant_id = value;
          have_tenant = true;
        } else if (word == "class") {
          q.query_class = value;
        } else {
          std::uint32_t rows = 0;
          auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), rows);
          if (ec != std::errc{} || p != value.data() + value.size() || rows == 0) fail("rows must be a positive integer");
          q.page_size_rows = rows;
        }
      } else if (word == "exists") {
        next_word();
        expect("(");
        if (q.correlated) fail("only one exists() clause is allowed");
        q.correlated = parse_filter();
        expect(")");
      } else {
        pos_ = save;
        conds.push_back(parse_cond());
      }
    } while (accept_word("and"));
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    if (!have_tenant) fail("tenant=<id> is required");
    q.filter = Predicate::all_of(std::move(conds));
    return q;
  }

 private:
  Predicate parse_filter() {
    std::vector<Predicate> conds{parse_cond()};
    while (accept_word("and")) conds.push_back(parse_cond());
    return Predicate::all_of(std::move(conds));
  }

  Predicate parse_cond() {
    skip_ws();
    if (accept("(")) {
      std::vector<Predicate> branches{parse_filter()};
      while (accept_word("or")) branches.push_back(parse_filter());
      expect(")");
      if (branches.size() < 2) fail("parenthesized group needs 'or'");
      return Predicate::any_of(std::move(branches));
    }
    const auto name = next_word();
    const auto field = parse_field(name);
    if (!field) fail("unknown field '" + name + "'");
    if (*field == Field::updated_at) {
      if (accept(">=")) return Predicate::updated_at_least(parse_tick());
      if (accept("<")) return Predicate::updated_before(parse_tick());
      fail("updated_at takes >= or <");
    }
    if (accept("=")) return Predicate::eq(*field, next_word());
    if (accept_word("in")) {
      expect("(");
      std::vector<std::string> values{next_word()};
      while (accept(",")) values.push_back(next_word());
      expect(")");
      return Predicate::in(*field, std::move(values));
    }
    fail("expected '=' or 'in' after field");
  }

  Tick parse_tick() {
    skip_ws();
    const auto start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    Tick t = 0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, t);
    if (ec != std::errc{} || p != text_.data() + pos_) fail("expected integer tick");
    return t;
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == ':' || c == '@' ||
           c == '+' || c == '-';
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string peek_word() {
    const auto save = pos_;
    auto w = read_word();
    pos_ = save;
    return w;
  }

  std::string read_word() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size() && word_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string next_word() {
    auto w = read_word();
    if (w.empty()) fail("expected a word");
    return w;
  }

  bool accept_word(std::string_view w) {
    const auto save = pos_;
    if (read_word() == w) return true;
    pos_ = save;
    return false;
  }

  bool accept(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw QueryParseError("query parse error at offset " + std::to_string(pos_) + ": " + msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void print_predicate(std::ostream& out, const Predicate& p) {
  using Kind = Predicate::Kind;
  switch (p.kind) {
    case Kind::always: break;
    case Kind::compare:
      out << to_string(p.field);
      if (p.field == Field::updated_at) {
        out << (p.op == CompareOp::ge ? ">=" : "<") << p.bound;
      } else if (p.op == CompareOp::eq && p.values.size() == 1) {
        out << '=' << p.values.front();
      } else {
        out << " in (";
        for (std::size_t i = 0; i < p.values.size(); ++i) out << (i ? "," : "") << p.values[i];
        out << ')';
      }
      break;
    case Kind::all_of:
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out << " and ";
        print_predicate(out, p.children[i]);
      }
      break;
    case Kind::any_of:
      out << '(';
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out << " or ";
        print_predicate(out, p.children[i]);
      }
      out << ')';
      break;
  }
}

}  // namespace detail

inline Query parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

inline std::string print_query(const Query& q) {
  std::ostringstream out;
  out << "tenant=" << q.tenant_id;
  if (q.filter.kind != Predicate::Kind::always) {
    out << " and ";
    detail::print_predicate(out, q.filter);
  }
  if (q.correlated) {
    out << " and exists(";
    detail::print_predicate(out, *q.correlated);
    out << ')';
  }
  if (!q.query_class.empty()) out << " and class=" << q.query_class;
  if (q.page_size_rows != kDefaultPageSizeRows) out << " and rows=" << q.page_size_rows;
  return out.str();
}

/// Whether the outer filter constrains the given key.
inline bool constrains_key(const Query& q, KeyField key) {
  if (q.filter.references(Field::account)) return true;
  return key == KeyField::account_region && q.filter.references(Field::account_region);
}

/// Returns `q` with `key IN (values)` conjoined to its filter.
inline Query augment(const Query& q, KeyField key, std::vector<std::string> values) {
  if (values.empty()) throw std::invalid_argument("augment: partition value set must be nonempty");
  if (constrains_key(q, key)) throw std::invalid_argument("augment: query already constrains the partition key");
  Query out = q;
  out.filter = Predicate::all_of({q.filter, Predicate::in(key_column(key), std::move(values))});
  return out;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

enum class AccessPath : std::uint8_t { full, index, partition_scoped };

inline std::string_view to_string(AccessPath p) {
  switch (p) {
    case AccessPath::full: return "full";
    case AccessPath::index: return "index";
    case AccessPath::partition_scoped: return "partition_scoped";
  }
  return "?";
}

/// Whether explain may pick a secondary-index path for the query.
enum class AccessPreference : std::uint8_t { scan, index };

struct QueryPlan {
  AccessPath path = AccessPath::full;
  std::optional<IndexedField> index_field;
  /// Key field and values for partition_scoped plans.
  Field scope_field = Field::account;
  std::vector<std::string> scope_values;
  std::uint64_t estimated_rows = 0;
  double estimated_cost = 0.0;
  std::uint64_t estimated_pages = 0;

  bool operator==(const QueryPlan&) const = default;
};

namespace detail {

inline const Predicate* first_key_compare(const Predicate& p) {
  auto is_key = [](const Predicate& c) {
    return c.kind == Predicate::Kind::compare && (c.field == Field::account || c.field == Field::account_region);
  };
  if (is_key(p)) return &p;
  if (p.kind == Predicate::Kind::all_of) {
    for (const auto& c : p.children) {
      if (is_key(c)) return &c;
    }
  }
  return nullptr;
}

inline std::optional<IndexedField> indexed_field(Field f) {
  switch (f) {
    case Field::service: return IndexedField::service;
    case Field::region: return IndexedField::region;
    case Field::resource_type: return IndexedField::resource_type;
    default: return std::nullopt;
  }
}

inline const Predicate* leading_indexed_compare(const Predicate& p, const TableLayout& layout) {
  auto usable = [&](const Predicate& c) {
    if (c.kind != Predicate::Kind::compare) return false;
    const auto f = indexed_field(c.field);
    return f && layout.has_index(*f);
  };
  if (usable(p)) return &p;
  if (p.kind == Predicate::Kind::all_of) {
    for (const auto& c : p.children) {
      if (usable(c)) return &c;
    }
  }
  return nullptr;
}

/// Independence-assumption selectivity; `skip` is excluded (treated as 1).
inline double selectivity(const Predicate& p, const ColumnStats& cols, const Predicate* skip) {
  using Kind = Predicate::Kind;
  if (&p == skip) return 1.0;
  switch (p.kind) {
    case Kind::always: return 1.0;
    case Kind::compare: {
      if (p.field == Field::updated_at) {
        const double lo = static_cast<double>(cols.min_updated_at);
        const double hi = static_cast<double>(cols.max_updated_at);
        const double b = static_cast<double>(p.bound);
        double covered;
        if (hi <= lo) {
          covered = (p.op == CompareOp::ge) == (b <= lo) ? 1.0 : 0.0;
        } else {
          covered = p.op == CompareOp::ge ? (hi - b) / (hi - lo) : (b - lo) / (hi - lo);
        }
        return std::clamp(covered, 0.0, 1.0);
      }
      std::uint64_t distinct = 1;
      switch (p.field) {
        case Field::account: distinct = cols.distinct_accounts; break;
        case Field::region: distinct = cols.distinct_regions; break;
        case Field::service: distinct = cols.distinct_services; break;
        case Field::resource_type: distinct = cols.distinct_resource_types; break;
        case Field::account_region: distinct = cols.distinct_accounts * std::max<std::uint64_t>(1, cols.distinct_regions); break;
        case Field::updated_at: break;
      }
      return std::min(1.0, static_cast<double>(p.values.size()) / static_cast<double>(std::max<std::uint64_t>(1, distinct)));
    }
    case Kind::all_of: {
      double s = 1.0;
      for (const auto& c : p.children) s *= selectivity(c, cols, skip);
      return s;
    }
    case Kind::any_of: {
      double miss = 1.0;
      for (const auto& c : p.children) miss *= 1.0 - selectivity(c, cols, skip);
      return 1.0 - miss;
    }
  }
  return 1.0;
}

/// Page runs a plan reads for its scan passes.
inline std::vector<PageRun> scope_runs(const TableLayout& layout, const Query& q, const QueryPlan& plan,
                                       bool whole_accounts) {
  std::vector<PageRun> runs;
  if (plan.path == AccessPath::partition_scoped) {
    for (const auto& v : plan.scope_values) {
      if (plan.scope_field == Field::account_region) {
        const auto [account, region] = split_composite(v);
        const auto* owner = layout.tenant_of(account);
        if (!owner || *owner != q.tenant_id) continue;
        auto run = whole_accounts ? layout.account_run(account) : layout.region_run(account, region);
        if (run) runs.push_back(*run);
      } else {
        const auto* owner = layout.tenant_of(v);
        if (!owner || *owner != q.tenant_id) continue;
        if (auto run = layout.account_run(v)) runs.push_back(*run);
      }
    }
  } else {
    for (const auto& a : layout.accounts_of(q.tenant_id)) runs.push_back(*layout.account_run(a));
  }
  return runs;
}

/// Total rows (active + deleted) per the snapshot for the plan's scope.
inline std::uint64_t scope_rows(const Snapshot& snap, const Query& q, const QueryPlan& plan) {
  std::uint64_t rows = 0;
  if (plan.path != AccessPath::partition_scoped) {
    for (const auto& a : snap.accounts_of(q.tenant_id)) rows += snap.accounts.at(a).total();
    return rows;
  }
  for (const auto& v : plan.scope_values) {
    if (plan.scope_field == Field::account_region) {
      const auto [account, region] = split_composite(v);
      const auto* s = snap.find(std::string(account));
      if (!s || s->tenant_id != q.tenant_id) continue;
      if (auto it = s->per_region.find(std::string(region)); it != s->per_region.end()) {
        rows += it->second.active + it->second.deleted;
      }
    } else {
      const auto* s = snap.find(v);
      if (s && s->tenant_id == q.tenant_id) rows += s->total();
    }
  }
  return rows;
}

}  // namespace detail

/// EXPLAIN-style estimate from snapshot statistics. Costs assume a cold pool.
inline QueryPlan explain(const TableLayout& layout, const Snapshot& snap, const Query& q,
                         const CostModel& cost = {}, AccessPreference pref = AccessPreference::scan) {
  QueryPlan plan;
  const Predicate* key = detail::first_key_compare(q.filter);
  const Predicate* lead = nullptr;
  if (key) {
    plan.path = AccessPath::partition_scoped;
    plan.scope_field = key->field;
    plan.scope_values = key->values;
  } else if (pref == AccessPreference::index && !q.correlated) {
    lead = detail::leading_indexed_compare(q.filter, layout);
    if (lead) {
      plan.path = AccessPath::index;
      plan.index_field = detail::indexed_field(lead->field);
    }
  }

  const double rows = static_cast<double>(detail::scope_rows(snap, q, plan));
  if (plan.path == AccessPath::index) {
    const double entries = rows * detail::selectivity(*lead, snap.columns, nullptr);
    const double per_leaf = static_cast<double>(layout.index(*plan.index_field).entries_per_page());
    const auto keys = static_cast<double>(lead->values.size());
    plan.estimated_rows = static_cast<std::uint64_t>(std::llround(rows * detail::selectivity(q.filter, snap.columns, nullptr)));
    plan.estimated_pages =
        static_cast<std::uint64_t>(std::llround(keys * 2.0 + std::ceil(entries / per_leaf) + entries));
  } else {
    double est = rows * detail::selectivity(q.filter, snap.columns, key);
    std::size_t pages = layout.scope_page_count(detail::scope_runs(layout, q, plan, false));
    if (q.correlated) {
      est += rows * detail::selectivity(*q.correlated, snap.columns, nullptr);
      pages += layout.scope_page_count(detail::scope_runs(layout, q, plan, true));
    }
    plan.estimated_rows = static_cast<std::uint64_t>(std::llround(est));
    plan.estimated_pages = pages;
  }
  plan.estimated_cost = static_cast<double>(plan.estimated_pages) * cost.miss_cost;
  return plan;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct ExecutionResult {
  std::vector<RowId> rows;
  ExecutionStats stats;
};

/// A plan compiled to page steps, runnable one page access at a time so a
/// scheduler can interleave concurrent executions.
class Execution {
 public:
  Execution(const TableLayout& layout, Query query, const QueryPlan& plan)
      : layout_(&layout), query_(std::move(query)) {
    if (plan.path == AccessPath::index) {
      const Predicate* lead = detail::leading_indexed_compare(query_.filter, layout);
      if (!lead || !plan.index_field) throw UnsupportedPath("plan requests an index the query cannot use");
      steps_ = layout.index_steps(*plan.index_field, query_.tenant_id, lead->values);
    } else {
      if (query_.correlated) {
        steps_ = layout.scope_steps(detail::scope_runs(layout, query_, plan, true), kBuildPass);
      }
      auto probe = layout.scope_steps(detail::scope_runs(layout, query_, plan, false), kProbePass);
      steps_.insert(steps_.end(), probe.begin(), probe.end());
    }
  }

  bool done() const { return next_ == steps_.size(); }
  std::size_t remaining() const { return steps_.size() - next_; }
  const ExecutionStats& stats() const { return result_.stats; }

  /// Performs one page access; returns its outcome.
  AccessOutcome step(BufferPool& pool, const CostModel& cost) {
    const auto& s = steps_[next_++];
    const auto outcome = touch_page(pool, cost, s.page, result_.stats);
    for (auto slot = s.slot_begin; slot < s.slot_end; ++slot) {
      const auto& r = layout_->record_at(slot);
      ++result_.stats.rows_examined;
      if (s.pass == kBuildPass) {
        if (row_matches(query_, *query_.correlated, r)) qualifying_.insert(r.account_id);
      } else if (row_matches(query_, query_.filter, r) &&
                 (!query_.correlated || qualifying_.count(r.account_id) != 0)) {
        result_.rows.push_back(layout_->row_at(slot));
      }
    }
    result_.stats.rows_returned = result_.rows.size();
    return outcome;
  }

  ExecutionResult run(BufferPool& pool, const CostModel& cost) && {
    while (!done()) step(pool, cost);
    return std::move(result_);
  }

  ExecutionResult take_result() && { return std::move(result_); }

 private:
  static constexpr std::uint8_t kProbePass = 0;
  static constexpr std::uint8_t kBuildPass = 1;

  const TableLayout* layout_;
  Query query_;
  std::vector<PageStep> steps_;
  std::size_t next_ = 0;
  std::unordered_set<std::string> qualifying_;
  ExecutionResult result_;
};

/// Executes `query` along `plan`. Deleted records never appear in results but
/// their pages are still read.
inline ExecutionResult execute(const TableLayout& layout, BufferPool& pool, const CostModel& cost, const Query& query,
                               const QueryPlan& plan) {
  return Execution(layout, query, plan).run(pool, cost);
}

}  // namespace hssps
