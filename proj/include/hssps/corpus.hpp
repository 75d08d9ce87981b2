#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hssps/config.hpp"
#include "hssps/types.hpp"

namespace hssps {

/// Count distribution used for accounts per tenant and resources per account.
///
/// `fixed` yields `value` for every draw. `zipf` assigns a shuffled rank r
/// (1-based) to each item and yields floor(value / r^theta), at least 1 while
/// value > 0, so the rank-1 item is the largest.
struct SizeDistribution {
  enum class Kind : std::uint8_t { fixed, zipf };

  Kind kind = Kind::fixed;
  std::uint64_t value = 0;
  double theta = 1.0;

  static SizeDistribution fixed_size(std::uint64_t v) { return {Kind::fixed, v, 1.0}; }
  static SizeDistribution zipf(std::uint64_t max_value, double theta) {
    return {Kind::zipf, max_value, theta};
  }

  std::uint64_t size_at_rank(std::uint64_t rank) const {
    if (kind == Kind::fixed || value == 0) return value;
    const double v = std::floor(static_cast<double>(value) / std::pow(static_cast<double>(rank), theta));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(v));
  }

  void validate(std::string_view what) const {
    if (kind == Kind::zipf && !(std::isfinite(theta) && theta > 0.0)) {
      throw SpecError(std::string(what) + ": zipf parameter must be finite and > 0");
    }
  }

  /// `fixed:<n>` or `zipf:<max>:<theta>`.
  static SizeDistribution parse(std::string_view text) {
    const auto parts = detail::split(text, ':');
    if (parts.size() == 2 && parts[0] == "fixed") {
      return fixed_size(detail::parse_number<std::uint64_t>(parts[1], "fixed size"));
    }
    if (parts.size() == 3 && parts[0] == "zipf") {
      return zipf(detail::parse_number<std::uint64_t>(parts[1], "zipf max"),
                  detail::parse_number<double>(parts[2], "zipf theta"));
    }
    throw SpecError("size distribution must be fixed:<n> or zipf:<max>:<theta>, got '" +
                    std::string(text) + "'");
  }

  std::string to_string() const {
    if (kind == Kind::fixed) return "fixed:" + std::to_string(value);
    std::ostringstream out;
    out << "zipf:" << value << ':' << theta;
    return out.str();
  }

  bool operator==(const SizeDistribution&) const = default;
};

struct ServiceWeight {
  Service service;
  double weight;
  bool operator==(const ServiceWeight&) const = default;
};

struct CorpusSpec {
  std::uint64_t seed = 1;
  std::uint32_t tenants = 1;
  SizeDistribution accounts_per_tenant = SizeDistribution::fixed_size(10);
  SizeDistribution resources_per_account = SizeDistribution::fixed_size(100);
  /// Each account draws its deleted fraction uniformly from this interval.
  std::pair<double, double> deleted_ratio_range{0.0, 0.0};
  /// Fraction of accounts whose updates fall in the most recent tenth of the horizon.
  double recency_skew = 0.2;
  Tick horizon = 7 * 24 * 3600;
  std::vector<ServiceWeight> service_mix = {
      {Service::ec2, 0.40}, {Service::s3, 0.10},  {Service::rds, 0.06}, {Service::lambda, 0.08},
      {Service::iam, 0.12}, {Service::ebs, 0.14}, {Service::vpc, 0.06}, {Service::eks, 0.04}};
  /// Services only a fraction of accounts use at all.
  std::vector<Service> sparse_services = {Service::eks};
  double sparse_presence = 0.25;
  std::vector<std::string> regions = {"us-east-1", "us-west-2", "eu-west-1", "ap-south-1"};
  std::vector<std::uint32_t> payload_sizes = {64, 256, 1024};

  void validate() const {
    accounts_per_tenant.validate("accounts_per_tenant");
    resources_per_account.validate("resources_per_account");
    const auto [lo, hi] = deleted_ratio_range;
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
      throw SpecError("deleted_ratio_range endpoints must satisfy 0 <= lo <= hi <= 1");
    }
    if (!(recency_skew >= 0.0 && recency_skew <= 1.0)) throw SpecError("recency_skew must be in [0,1]");
    if (!(sparse_presence >= 0.0 && sparse_presence <= 1.0)) {
      throw SpecError("sparse_presence must be in [0,1]");
    }
    if (horizon < 1) throw SpecError("horizon must be >= 1 tick");
    if (regions.empty()) throw SpecError("at least one region is required");
    if (payload_sizes.empty()) throw SpecError("at least one payload size is required");
    for (auto p : payload_sizes) {
      if (p == 0) throw SpecError("payload sizes must be >= 1");
    }
    double dense_weight = 0.0;
    for (const auto& sw : service_mix) {
      if (!(std::isfinite(sw.weight) && sw.weight >= 0.0)) {
        throw SpecError("service weights must be finite and >= 0");
      }
      if (std::find(sparse_services.begin(), sparse_services.end(), sw.service) == sparse_services.end()) {
        dense_weight += sw.weight;
      }
    }
    if (!(dense_weight > 0.0)) throw SpecError("service_mix needs positive weight on a non-sparse service");
  }

  static CorpusSpec from_config(const KeyValueConfig& cfg) { return from_config(cfg, CorpusSpec()); }

  static CorpusSpec from_config(const KeyValueConfig& cfg, CorpusSpec spec) {
    for (const auto& [key, value] : cfg.entries()) {
      if (key == "seed") {
        spec.seed = detail::parse_number<std::uint64_t>(value, key);
      } else if (key == "tenants") {
        spec.tenants = detail::parse_number<std::uint32_t>(value, key);
      } else if (key == "accounts_per_tenant") {
        spec.accounts_per_tenant = SizeDistribution::parse(value);
      } else if (key == "resources_per_account") {
        spec.resources_per_account = SizeDistribution::parse(value);
      } else if (key == "deleted_ratio_range") {
        const auto parts = detail::split(value, ',');
        if (parts.size() != 2) throw SpecError("deleted_ratio_range must be lo,hi");
        spec.deleted_ratio_range = {detail::parse_number<double>(parts[0], key),
                                    detail::parse_number<double>(parts[1], key)};
      } else if (key == "recency_skew") {
        spec.recency_skew = detail::parse_number<double>(value, key);
      } else if (key == "horizon") {
        spec.horizon = detail::parse_number<Tick>(value, key);
      } else if (key == "service_mix") {
        spec.service_mix.clear();
        for (const auto& item : detail::split(value, ',')) {
          const auto kv = detail::split(item, ':');
          const auto svc = kv.size() == 2 ? parse_service(kv[0]) : std::nullopt;
          if (!svc) throw SpecError("service_mix entries must be <service>:<weight>, got '" + item + "'");
          spec.service_mix.push_back({*svc, detail::parse_number<double>(kv[1], key)});
        }
      } else if (key == "sparse_services") {
        spec.sparse_services.clear();
        for (const auto& item : detail::split(value, ',')) {
          if (item.empty()) continue;
          const auto svc = parse_service(item);
          if (!svc) throw SpecError("unknown service '" + item + "'");
          spec.sparse_services.push_back(*svc);
        }
      } else if (key == "sparse_presence") {
        spec.sparse_presence = detail::parse_number<double>(value, key);
      } else if (key == "regions") {
        spec.regions = detail::split(value, ',');
      } else if (key == "payload_sizes") {
        spec.payload_sizes.clear();
        for (const auto& item : detail::split(value, ',')) {
          spec.payload_sizes.push_back(detail::parse_number<std::uint32_t>(item, key));
        }
      }
    }
    spec.validate();
    return spec;
  }

  KeyValueConfig to_config() const {
    KeyValueConfig cfg;
    auto join = [](const auto& items, auto&& fmt) {
      std::string out;
      for (const auto& item : items) {
        if (!out.empty()) out += ',';
        out += fmt(item);
      }
      return out;
    };
    auto num = [](double d) {
      std::ostringstream o;
      o << d;
      return o.str();
    };
    cfg.set("seed", std::to_string(seed));
    cfg.set("tenants", std::to_string(tenants));
    cfg.set("accounts_per_tenant", accounts_per_tenant.to_string());
    cfg.set("resources_per_account", resources_per_account.to_string());
    cfg.set("deleted_ratio_range", num(deleted_ratio_range.first) + "," + num(deleted_ratio_range.second));
    cfg.set("recency_skew", num(recency_skew));
    cfg.set("horizon", std::to_string(horizon));
    cfg.set("service_mix", join(service_mix, [&](const ServiceWeight& sw) {
              return std::string(to_string(sw.service)) + ":" + num(sw.weight);
            }));
    cfg.set("sparse_services",
            join(sparse_services, [](Service s) { return std::string(to_string(s)); }));
    cfg.set("sparse_presence", num(sparse_presence));
    cfg.set("regions", join(regions, [](const std::string& r) { return r; }));
    cfg.set("payload_sizes", join(payload_sizes, [](std::uint32_t p) { return std::to_string(p); }));
    return cfg;
  }
};

namespace detail {

struct TypeWeight {
  std::string_view type;
  double weight;
};

inline const std::vector<TypeWeight>& resource_types(Service s) {
  static const std::array<std::vector<TypeWeight>, kServiceCount> table{{
      {{"instance", 3}, {"security_group", 1}},
      {{"bucket", 1}},
      {{"db_instance", 3}, {"db_snapshot", 1}},
      {{"function", 1}},
      {{"role", 2}, {"user", 1}, {"policy", 1}},
      {{"volume", 4}, {"snapshot", 1}},
      {{"vpc", 1}, {"subnet", 3}},
      {{"cluster", 1}, {"nodegroup", 2}},
  }};
  return table[static_cast<std::size_t>(s)];
}

inline std::string numbered(std::string_view prefix, std::uint64_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(n));
  return std::string(prefix) + buf;
}

inline std::vector<std::uint64_t> shuffled_ranks(std::uint64_t count, std::mt19937_64& rng) {
  std::vector<std::uint64_t> ranks(count);
  std::iota(ranks.begin(), ranks.end(), 1);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  return ranks;
}

}  // namespace detail

inline std::string tenant_name(std::uint64_t index) { return detail::numbered("t", index, 3); }

inline std::string account_name(std::string_view tenant, std::uint64_t index) {
  return detail::numbered(std::string(tenant) + "-a", index, 4);
}

/// Deterministic synthetic corpus: records grouped by tenant, then account,
/// in generation order. A pure function of the spec (including its seed).
inline Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Corpus out;
  std::uint64_t next_id = 1;

  const Tick hot_start = spec.horizon - spec.horizon / 10;
  const Tick cold_end = spec.horizon * 6 / 10;

  const auto tenant_ranks = detail::shuffled_ranks(spec.tenants, rng);
  for (std::uint32_t t = 0; t < spec.tenants; ++t) {
    const std::string tenant = tenant_name(t);
    const auto n_accounts = spec.accounts_per_tenant.size_at_rank(tenant_ranks[t]);
    const auto account_ranks = detail::shuffled_ranks(n_accounts, rng);

    for (std::uint64_t a = 0; a < n_accounts; ++a) {
      const std::string account = account_name(tenant, a);
      const auto count = spec.resources_per_account.size_at_rank(account_ranks[a]);

      const auto [lo, hi] = spec.deleted_ratio_range;
      const double deleted_target = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
      const bool hot = std::bernoulli_distribution(spec.recency_skew)(rng);
      const auto& home_region =
          spec.regions[std::uniform_int_distribution<std::size_t>(0, spec.regions.size() - 1)(rng)];

      std::vector<double> weights;
      for (const auto& sw : spec.service_mix) {
        const bool sparse = std::find(spec.sparse_services.begin(), spec.sparse_services.end(),
                                      sw.service) != spec.sparse_services.end();
        const bool present = !sparse || std::bernoulli_distribution(spec.sparse_presence)(rng);
        weights.push_back(present ? sw.weight : 0.0);
      }
      std::discrete_distribution<std::size_t> pick_service(weights.begin(), weights.end());

      const auto n_deleted = static_cast<std::uint64_t>(std::llround(deleted_target * static_cast<double>(count)));
      std::vector<bool> deleted(count, false);
      std::fill_n(deleted.begin(), std::min(n_deleted, count), true);
      std::shuffle(deleted.begin(), deleted.end(), rng);

      for (std::uint64_t i = 0; i < count; ++i) {
        ResourceRecord r;
        r.resource_id = next_id++;
        r.tenant_id = tenant;
        r.account_id = account;
        r.service = spec.service_mix[pick_service(rng)].service;
        const auto& types = detail::resource_types(r.service);
        std::vector<double> tw;
        for (const auto& t_w : types) tw.push_back(t_w.weight);
        r.resource_type = std::string(types[std::discrete_distribution<std::size_t>(tw.begin(), tw.end())(rng)].type);
        r.region = std::bernoulli_distribution(0.5)(rng)
                       ? home_region
                       : spec.regions[std::uniform_int_distribution<std::size_t>(0, spec.regions.size() - 1)(rng)];
        r.is_deleted = deleted[i];
        r.updated_at = hot ? std::uniform_int_distribution<Tick>(hot_start, spec.horizon)(rng)
                           : std::uniform_int_distribution<Tick>(0, cold_end)(rng);
        r.payload_bytes =
            spec.payload_sizes[std::uniform_int_distribution<std::size_t>(0, spec.payload_sizes.size() - 1)(rng)];
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

struct AccountSummary {
  std::string tenant_id;
  std::uint64_t active = 0;
  std::uint64_t deleted = 0;
  Tick max_updated_at = 0;
  /// Active records per service.
  std::map<Service, std::uint64_t> per_service;

  bool operator==(const AccountSummary&) const = default;
};

using CorpusStats = std::map<std::string, AccountSummary>;

/// Straight tally of the corpus; the ground truth the metadata cache is checked against.
inline CorpusStats corpus_stats(const Corpus& records) {
  CorpusStats stats;
  for (const auto& r : records) {
    auto [it, inserted] = stats.try_emplace(r.account_id);
    auto& s = it->second;
    if (inserted) {
      s.tenant_id = r.tenant_id;
      s.max_updated_at = r.updated_at;
    }
    s.max_updated_at = std::max(s.max_updated_at, r.updated_at);
    if (r.is_deleted) {
      ++s.deleted;
    } else {
      ++s.active;
      ++s.per_service[r.service];
    }
  }
  return stats;
}

/// Test helper: the only post-generation mutation. Every record of `account`
/// gets `updated_at = now`.
inline Corpus touch_account(Corpus records, std::string_view account, Tick now) {
  for (auto& r : records) {
    if (r.account_id == account) r.updated_at = now;
  }
  return records;
}

// Line-delimited corpus file: one record per line, tab separated, field order
// resource_id tenant account region service resource_type deleted updated_at payload_bytes.

inline void write_corpus(std::ostream& out, const Corpus& records) {
  for (const auto& r : records) {
    out << r.resource_id << '\t' << r.tenant_id << '\t' << r.account_id << '\t' << r.region << '\t'
        << to_string(r.service) << '\t' << r.resource_type << '\t' << (r.is_deleted ? 1 : 0) << '\t'
        << r.updated_at << '\t' << r.payload_bytes << '\n';
  }
}

inline Corpus read_corpus(std::istream& in) {
  Corpus records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split(line, '\t');
    const auto where = "corpus line " + std::to_string(line_no);
    if (f.size() != 9) throw SpecError(where + ": expected 9 fields");
    ResourceRecord r;
    r.resource_id = detail::parse_number<std::uint64_t>(f[0], where);
    r.tenant_id = f[1];
    r.account_id = f[2];
    r.region = f[3];
    const auto svc = parse_service(f[4]);
    if (!svc) throw SpecError(where + ": unknown service '" + f[4] + "'");
    r.service = *svc;
    r.resource_type = f[5];
    if (f[6] != "0" && f[6] != "1") throw SpecError(where + ": deleted flag must be 0 or 1");
    r.is_deleted = f[6] == "1";
    r.updated_at = detail::parse_number<Tick>(f[7], where);
    r.payload_bytes = detail::parse_number<std::uint32_t>(f[8], where);
    if (r.payload_bytes == 0) throw SpecError(where + ": payload_bytes must be >= 1");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace hssps
