#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "specvis/core/error.hpp"

namespace specvis {

/// Incremental 64-bit FNV-1a. Stable across platforms, used for content
/// hashes stamped into manifests and reports.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= kPrime;
    }
    return *this;
  }
  Fnv1a& update(std::string_view text) {
    return update(std::as_bytes(std::span(text.data(), text.size())));
  }
  template <typename T>
  Fnv1a& update_values(std::span<const T> values) {
    return update(std::as_bytes(values));
  }
  Fnv1a& update_u64(std::uint64_t v) {
    std::byte bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::byte>((v >> (8 * i)) & 0xffu);
    return update(bytes);
  }

  std::uint64_t value() const { return state_; }
  std::string hex() const { return to_hex(state_); }

  static std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t kPrime = 0x100000001b3ull;
  std::uint64_t state_ = kOffset;
};

inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::as_bytes(std::span(buf, got)));
  }
  return h.hex();
}

}  // namespace specvis
