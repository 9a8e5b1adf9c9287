#pragma once

#include <openssl/sha.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace keyreuse {

// Base for every recoverable failure surfaced by the library (parse errors,
// invalid configuration, corrupt files).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Logical simulation time in milliseconds.
using Tick = std::int64_t;

constexpr Tick kSecond = 1000;
constexpr Tick kMinute = 60 * kSecond;
constexpr Tick kHour = 60 * kMinute;

template <std::size_t N>
using Bytes = std::array<std::uint8_t, N>;

using Digest = Bytes<32>;

inline std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace detail {

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace detail

inline std::vector<std::uint8_t> from_hex(std::string_view text) {
  if (text.size() % 2 != 0) throw Error("odd-length hex string");
  std::vector<std::uint8_t> out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = detail::hex_value(text[2 * i]);
    int lo = detail::hex_value(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error("invalid hex digit in '" + std::string(text) + "'");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

template <std::size_t N>
Bytes<N> fixed_from_hex(std::string_view text) {
  if (text.size() != 2 * N) {
    throw Error("expected " + std::to_string(2 * N) + " hex chars, got " +
                std::to_string(text.size()));
  }
  auto v = from_hex(text);
  Bytes<N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

inline Digest sha256(std::string_view text) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Little-endian append, used to build hash preimages.
inline void append_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace keyreuse
