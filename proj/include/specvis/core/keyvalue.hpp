#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "specvis/core/error.hpp"

namespace specvis {

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
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Shortest decimal text that parses back to exactly the same value.
template <typename T>
std::string format_number(T value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw DataError("invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return value;
}

/// Ordered `key = value` text document. Keys may repeat (e.g. `object`
/// rows in a manifest); `get` returns the first occurrence.
class KeyValueFile {
 public:
  using Entry = std::pair<std::string, std::string>;

  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void add(std::string key, std::string value) {
    entries_.emplace_back(std::move(key), std::move(value));
  }

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  std::optional<std::string> get(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    return std::nullopt;
  }

  const std::string& require(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw DataError("missing key '" + std::string(key) + "'");
  }

  template <typename T>
  T require_number(std::string_view key) const {
    return parse_number<T>(require(key), key);
  }

  std::vector<std::string> all(std::string_view key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
      if (k == key) out.push_back(v);
    return out;
  }

  const std::vector<Entry>& entries() const { return entries_; }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  static KeyValueFile parse(std::string_view text) {
    KeyValueFile kv;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = trim(line);
      if (body.empty() || body.front() == '#') continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw DataError("line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      kv.add(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
    }
    return kv;
  }

  static KeyValueFile read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return parse(ss.str());
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_string();
  }

 private:
  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return &v;
    return nullptr;
  }

  std::vector<Entry> entries_;
};

}  // namespace specvis
