#pragma once

#include <charconv>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hssps/types.hpp"

namespace hssps {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw SpecError("invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Plain `key = value` configuration, one pair per line; `#` starts a comment.
/// Later occurrences of a key override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view view = line;
      if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
      view = detail::trim(view);
      if (view.empty()) continue;
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) {
        throw SpecError("config line " + std::to_string(line_no) + ": expected key = value");
      }
      auto key = detail::trim(view.substr(0, eq));
      if (key.empty()) throw SpecError("config line " + std::to_string(line_no) + ": empty key");
      cfg.values_[std::string(key)] = std::string(detail::trim(view.substr(eq + 1)));
    }
    return cfg;
  }

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  const std::string* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace hssps
