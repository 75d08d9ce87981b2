#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hssps {

/// Simulation clock for metadata refresh and token expiry (1 tick = 1 simulated second).
using Tick = std::int64_t;

/// Index of a record in its corpus vector.
using RowId = std::uint32_t;

enum class Service : std::uint8_t { ec2, s3, rds, lambda, iam, ebs, vpc, eks };

inline constexpr std::array<std::string_view, 8> kServiceNames{
    "ec2", "s3", "rds", "lambda", "iam", "ebs", "vpc", "eks"};

inline constexpr std::size_t kServiceCount = kServiceNames.size();

inline std::string_view to_string(Service s) {
  return kServiceNames[static_cast<std::size_t>(s)];
}

inline std::optional<Service> parse_service(std::string_view name) {
  for (std::size_t i = 0; i < kServiceNames.size(); ++i) {
    if (kServiceNames[i] == name) return static_cast<Service>(i);
  }
  return std::nullopt;
}

struct ResourceRecord {
  std::uint64_t resource_id = 0;
  std::string tenant_id;
  std::string account_id;
  std::string region;
  Service service = Service::ec2;
  std::string resource_type;
  bool is_deleted = false;
  Tick updated_at = 0;
  std::uint32_t payload_bytes = 1;

  bool operator==(const ResourceRecord&) const = default;
};

using Corpus = std::vector<ResourceRecord>;

/// Raised for invalid corpus, layout, or workload specifications.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A run-time invariant was found broken. The CLI maps this to a nonzero exit.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hssps
