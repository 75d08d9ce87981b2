#pragma once

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hssps/types.hpp"

namespace hssps {

inline constexpr std::uint8_t kTokenVersion = 1;
inline constexpr Tick kDefaultTokenTtl = 3600;
inline constexpr std::size_t kTagBytes = 32;

using TokenKey = std::array<std::uint8_t, 32>;
using Bytes = std::vector<std::uint8_t>;

/// Traversal state carried by the client between page requests.
struct TokenPayload {
  std::string tenant_id;
  /// Every partition value searched by previous executions.
  std::set<std::string> searched_values;
  std::uint32_t consecutive_empty = 0;
  std::uint64_t cursor = 0;
  Tick issued_at = 0;
  Tick expires_at = 0;
  std::uint8_t version = kTokenVersion;

  bool operator==(const TokenPayload&) const = default;
};

enum class TokenErrc : std::uint8_t { format, forgery, tenant, expired, drift };

inline std::string_view to_string(TokenErrc e) {
  switch (e) {
    case TokenErrc::format: return "format";
    case TokenErrc::forgery: return "forgery";
    case TokenErrc::tenant: return "tenant";
    case TokenErrc::expired: return "expired";
    case TokenErrc::drift: return "drift";
  }
  return "?";
}

class TokenError : public std::runtime_error {
 public:
  TokenError(TokenErrc code, const std::string& what)
      : std::runtime_error("token " + std::string(to_string(code)) + " error: " + what), code_(code) {}
  TokenErrc code() const noexcept { return code_; }

 private:
  TokenErrc code_;
};

struct TerminationConfig {
  std::uint32_t empty_threshold = 3;
  std::map<std::string, std::uint32_t> per_class;

  std::uint32_t threshold_for(const std::string& query_class) const {
    auto it = per_class.find(query_class);
    return it == per_class.end() ? empty_threshold : it->second;
  }

  void validate() const {
    if (empty_threshold < 1) throw SpecError("empty_threshold must be >= 1");
    for (const auto& [cls, t] : per_class) {
      if (t < 1) throw SpecError("empty_threshold for class " + cls + " must be >= 1");
    }
  }
};

namespace base64url {

inline constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

inline std::string encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() * 4 + 2) / 3);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const auto rest = data.size() - i;
  if (rest == 1) {
    const std::uint32_t v = data[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
  } else if (rest == 2) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
  }
  return out;
}

/// Strict unpadded decoding: rejects foreign characters, impossible lengths,
/// and nonzero trailing bits, so each byte string has exactly one encoding.
inline std::optional<Bytes> decode(std::string_view text) {
  auto value = [](char c) -> int {
    const auto pos = kAlphabet.find(c);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
  };
  if (text.size() % 4 == 1) return std::nullopt;
  Bytes out;
  out.reserve(text.size() * 3 / 4);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    const int v = value(c);
    if (v < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  if (bits > 0 && (acc & ((1u << bits) - 1)) != 0) return std::nullopt;
  return out;
}

}  // namespace base64url

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  Bytes take() { return std::move(out_); }

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(be(8)); }

  /// Minimal-length LEB128 only.
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const auto b = u8();
      v |= std::uint64_t{b & 0x7Fu} << shift;
      if ((b & 0x80) == 0) {
        if (b == 0 && shift > 0) bad("non-minimal varint");
        return v;
      }
    }
    bad("varint too long");
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == data_.size(); }

  [[noreturn]] static void bad(const std::string& why) { throw TokenError(TokenErrc::format, why); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) bad("truncated payload");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::array<std::uint8_t, kTagBytes> hmac_sha256(const TokenKey& key, std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, kTagBytes> tag{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), tag.data(), &len) ||
      len != kTagBytes) {
    throw std::runtime_error("HMAC-SHA256 failed");
  }
  return tag;
}

/// First 8 bytes of SHA-256 over the newline-joined sorted universe.
inline std::uint64_t universe_hash(std::span<const std::string> universe) {
  std::string joined;
  for (const auto& v : universe) {
    joined += v;
    joined += '\n';
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!EVP_Digest(joined.data(), joined.size(), md.data(), &len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | md[static_cast<std::size_t>(i)];
  return h;
}

inline std::vector<std::string> sorted_unique(std::span<const std::string> universe) {
  std::vector<std::string> u(universe.begin(), universe.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

}  // namespace detail

/// Canonical payload bytes (all integers big-endian):
///   u8 version | u16 tenant length | tenant | u64 universe hash | u32 universe size
///   | varint run count | varint runs... | u32 consecutive_empty | u64 cursor
///   | i64 issued_at | i64 expires_at
/// Runs alternate unsearched/searched over the sorted universe, starting with
/// unsearched; only the first run may be 0.
inline Bytes encode_payload(const TokenPayload& p, std::span<const std::string> universe) {
  const auto u = detail::sorted_unique(universe);
  for (const auto& v : p.searched_values) {
    if (!std::binary_search(u.begin(), u.end(), v)) {
      throw std::invalid_argument("token payload: searched value '" + v + "' outside the tenant universe");
    }
  }
  if (p.tenant_id.size() > 0xFFFF) throw std::invalid_argument("token payload: tenant id too long");

  std::vector<std::uint64_t> runs;
  bool state = false;
  std::uint64_t run = 0;
  for (const auto& v : u) {
    const bool searched = p.searched_values.count(v) != 0;
    if (searched != state) {
      runs.push_back(run);
      run = 0;
      state = searched;
    }
    ++run;
  }
  if (run > 0) runs.push_back(run);

  detail::ByteWriter w;
  w.u8(p.version);
  w.u16(static_cast<std::uint16_t>(p.tenant_id.size()));
  w.bytes(p.tenant_id);
  w.u64(detail::universe_hash(u));
  w.u32(static_cast<std::uint32_t>(u.size()));
  w.varint(runs.size());
  for (auto r : runs) w.varint(r);
  w.u32(p.consecutive_empty);
  w.u64(p.cursor);
  w.i64(p.issued_at);
  w.i64(p.expires_at);
  return w.take();
}

/// Parses payload bytes; returns the payload and the universe hash it was minted against.
inline std::pair<TokenPayload, std::uint64_t> decode_payload(std::span<const std::uint8_t> bytes,
                                                             std::span<const std::string> universe) {
  detail::ByteReader r(bytes);
  TokenPayload p;
  p.version = r.u8();
  if (p.version != kTokenVersion) detail::ByteReader::bad("unsupported version");
  p.tenant_id = r.str(r.u16());
  const auto hash = r.u64();
  const auto size = r.u32();
  const auto run_count = r.varint();
  std::vector<std::uint64_t> runs;
  std::uint64_t covered = 0;
  for (std::uint64_t i = 0; i < run_count; ++i) {
    const auto len = r.varint();
    if (len == 0 && i > 0) detail::ByteReader::bad("empty run");
    if (len > size - covered) detail::ByteReader::bad("runs exceed universe");
    covered += len;
    runs.push_back(len);
  }
  if (covered != size) detail::ByteReader::bad("runs do not cover universe");
  p.consecutive_empty = r.u32();
  p.cursor = r.u64();
  p.issued_at = r.i64();
  p.expires_at = r.i64();
  if (!r.at_end()) detail::ByteReader::bad("trailing bytes");

  const auto u = detail::sorted_unique(universe);
  if (hash == detail::universe_hash(u) && u.size() == size) {
    std::size_t pos = 0;
    bool searched = false;
    for (auto len : runs) {
      for (std::uint64_t k = 0; k < len; ++k, ++pos) {
        if (searched) p.searched_values.insert(u[pos]);
      }
      searched = !searched;
    }
  }
  return {std::move(p), hash};
}

/// Wire form `v1.<base64url(payload)>.<base64url(HMAC-SHA256(key, payload))>`.
inline std::string mint(const TokenPayload& payload, const TokenKey& key, std::span<const std::string> universe) {
  if (payload.expires_at <= payload.issued_at) throw std::invalid_argument("token payload: expires_at <= issued_at");
  if (payload.version != kTokenVersion) throw std::invalid_argument("token payload: unsupported version");
  const auto bytes = encode_payload(payload, universe);
  const auto tag = detail::hmac_sha256(key, bytes);
  return "v" + std::to_string(payload.version) + "." + base64url::encode(bytes) + "." + base64url::encode(tag);
}

/// Checks, in order: wire format, signature, payload format, tenant, account
/// universe, expiry (`now >= expires_at` is expired).
inline TokenPayload verify(std::string_view token, const TokenKey& key, std::string_view expected_tenant, Tick now,
                           std::span<const std::string> universe) {
  const std::string prefix = "v" + std::to_string(kTokenVersion) + ".";
  if (token.substr(0, prefix.size()) != prefix) throw TokenError(TokenErrc::format, "bad version prefix");
  const auto body = token.substr(prefix.size());
  const auto dot = body.find('.');
  if (dot == std::string_view::npos || body.find('.', dot + 1) != std::string_view::npos) {
    throw TokenError(TokenErrc::format, "expected three dot-separated parts");
  }
  const auto payload = base64url::decode(body.substr(0, dot));
  const auto tag = base64url::decode(body.substr(dot + 1));
  if (!payload || !tag) throw TokenError(TokenErrc::format, "invalid base64url");
  if (tag->size() != kTagBytes) throw TokenError(TokenErrc::format, "bad tag length");

  const auto expected = detail::hmac_sha256(key, *payload);
  if (CRYPTO_memcmp(expected.data(), tag->data(), kTagBytes) != 0) {
    throw TokenError(TokenErrc::forgery, "signature mismatch");
  }

  auto [p, hash] = decode_payload(*payload, universe);
  if (p.tenant_id != expected_tenant) throw TokenError(TokenErrc::tenant, "token belongs to another tenant");
  const auto u = detail::sorted_unique(universe);
  if (hash != detail::universe_hash(u)) throw TokenError(TokenErrc::drift, "tenant partition values changed");
  if (now >= p.expires_at) throw TokenError(TokenErrc::expired, "token expired");
  return std::move(p);
}

struct Exhausted {
  bool operator==(const Exhausted&) const = default;
};

using AdvanceResult = std::variant<TokenPayload, Exhausted>;

/// Folds one execution into the traversal state. Exhausted once every
/// universe value is searched or `empty_threshold` consecutive executions
/// returned no rows.
inline AdvanceResult advance(const TokenPayload& payload, const std::set<std::string>& executed_values,
                             std::uint64_t rows_returned, std::uint64_t next_cursor,
                             std::span<const std::string> universe, std::uint32_t empty_threshold) {
  TokenPayload next = payload;
  for (const auto& v : executed_values) {
    if (!next.searched_values.insert(v).second) {
      throw std::logic_error("advance: value '" + v + "' was already searched");
    }
  }
  next.consecutive_empty = rows_returned > 0 ? 0 : payload.consecutive_empty + 1;
  next.cursor = next_cursor;
  const bool covered = std::all_of(universe.begin(), universe.end(),
                                   [&](const std::string& v) { return next.searched_values.count(v) != 0; });
  if (covered || next.consecutive_empty >= empty_threshold) return Exhausted{};
  return next;
}

}  // namespace hssps
