#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "keyreuse/bytes.hpp"

namespace keyreuse {

enum class Protocol { v4, v5 };

inline const char* to_string(Protocol p) { return p == Protocol::v4 ? "v4" : "v5"; }

inline Protocol parse_protocol(std::string_view text) {
  if (text == "v4") return Protocol::v4;
  if (text == "v5") return Protocol::v5;
  throw Error("unknown protocol '" + std::string(text) + "' (expected v4 or v5)");
}

// 64-byte uncompressed curve point (without the 0x04 prefix). Equality is
// byte-wise; this is the sole identity of a node in the discovery layer.
struct PublicKey {
  Bytes<64> bytes{};

  auto operator<=>(const PublicKey&) const = default;

  std::string hex() const { return to_hex(bytes); }
  static PublicKey from_hex(std::string_view text) { return {fixed_from_hex<64>(text)}; }
};

struct KeyPair {
  Bytes<32> private_key{};
  PublicKey public_key;

  bool operator==(const KeyPair&) const = default;
};

// 256-bit digest of a public key; the coordinate used by the XOR metric.
struct NodeId {
  Digest bytes{};

  auto operator<=>(const NodeId&) const = default;

  std::string hex() const { return to_hex(bytes); }
  static NodeId from_hex(std::string_view text) { return {fixed_from_hex<32>(text)}; }
};

struct PublicKeyHash {
  std::size_t operator()(const PublicKey& pk) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) h = (h << 8) | pk.bytes[i];
    return h;
  }
};

// Memoized per thread; the table is dropped wholesale when it grows large.
inline NodeId node_id(const PublicKey& pk) {
  thread_local std::unordered_map<PublicKey, NodeId, PublicKeyHash> cache;
  auto it = cache.find(pk);
  if (it != cache.end()) return it->second;
  if (cache.size() >= (1u << 20)) cache.clear();
  NodeId id{sha256(pk.bytes)};
  cache.emplace(pk, id);
  return id;
}

struct Ipv4 {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4&) const = default;

  static Ipv4 from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return {(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }

  static Ipv4 parse(std::string_view text) {
    std::uint32_t value = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
      if (octet > 0) {
        if (p == end || *p != '.') throw Error("invalid IPv4 address '" + std::string(text) + "'");
        ++p;
      }
      unsigned part = 0;
      auto [next, ec] = std::from_chars(p, end, part);
      if (ec != std::errc{} || next == p || next - p > 3 || part > 255) {
        throw Error("invalid IPv4 address '" + std::string(text) + "'");
      }
      p = next;
      value = (value << 8) | part;
    }
    if (p != end) throw Error("invalid IPv4 address '" + std::string(text) + "'");
    return {value};
  }

  std::string str() const {
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
           std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
  }
};

// A node's self-description in the discovery layer.
struct NodeRecord {
  PublicKey public_key;
  Ipv4 ip;
  std::uint16_t udp_port = 0;
  std::uint16_t tcp_port = 0;
  std::uint64_t seq = 1;

  bool operator==(const NodeRecord&) const = default;

  bool valid() const { return udp_port != 0 && tcp_port != 0 && seq >= 1; }

  // Identity comparison ignores every endpoint field.
  bool same_identity(const NodeRecord& other) const { return public_key == other.public_key; }
};

// Position of the highest differing bit plus one; 0 for equal ids.
inline int logdist(const NodeId& a, const NodeId& b) {
  for (std::size_t i = 0; i < a.bytes.size(); ++i) {
    std::uint8_t x = a.bytes[i] ^ b.bytes[i];
    if (x != 0) {
      int bit = 7;
      while (!(x & (1u << bit))) --bit;
      return static_cast<int>((a.bytes.size() - 1 - i) * 8) + bit + 1;
    }
  }
  return 0;
}

inline NodeId xor_distance(const NodeId& a, const NodeId& b) {
  NodeId out;
  for (std::size_t i = 0; i < out.bytes.size(); ++i) out.bytes[i] = a.bytes[i] ^ b.bytes[i];
  return out;
}

// Deterministic key derivation. No curve arithmetic is performed: only key
// equality and uniqueness matter to the discovery layer.
inline KeyPair generate_keypair(std::uint64_t rng_seed, std::uint64_t index) {
  std::vector<std::uint8_t> pre{'k', 'e', 'y', 'g', 'e', 'n'};
  append_u64(pre, rng_seed);
  append_u64(pre, index);
  KeyPair kp;
  kp.private_key = sha256(pre);
  for (std::uint8_t half = 0; half < 2; ++half) {
    std::vector<std::uint8_t> pub(kp.private_key.begin(), kp.private_key.end());
    pub.push_back(half);
    Digest d = sha256(pub);
    std::copy(d.begin(), d.end(), kp.public_key.bytes.begin() + 32 * half);
  }
  return kp;
}

// enode://<pubkey hex>@<ip>:<tcp>?discport=<udp>
inline std::string encode_enr_url_v4(const NodeRecord& r) {
  return "enode://" + r.public_key.hex() + "@" + r.ip.str() + ":" + std::to_string(r.tcp_port) +
         "?discport=" + std::to_string(r.udp_port);
}

namespace detail {

inline std::uint16_t parse_port(std::string_view text, std::string_view what) {
  unsigned v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || v == 0 || v > 65535) {
    throw Error("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return static_cast<std::uint16_t>(v);
}

}  // namespace detail

// The textual form carries no sequence number; decoded records have seq 1.
inline NodeRecord decode_enr_url_v4(std::string_view url) {
  constexpr std::string_view kScheme = "enode://";
  constexpr std::string_view kDisc = "?discport=";
  if (!url.starts_with(kScheme)) throw Error("enode url must start with enode://");
  url.remove_prefix(kScheme.size());
  auto at = url.find('@');
  if (at == std::string_view::npos) throw Error("enode url missing '@'");
  auto q = url.find(kDisc, at);
  if (q == std::string_view::npos) throw Error("enode url missing ?discport=");
  auto host = url.substr(at + 1, q - at - 1);
  auto colon = host.rfind(':');
  if (colon == std::string_view::npos) throw Error("enode url missing tcp port");
  NodeRecord r;
  r.public_key = PublicKey::from_hex(url.substr(0, at));
  r.ip = Ipv4::parse(host.substr(0, colon));
  r.tcp_port = detail::parse_port(host.substr(colon + 1), "tcp port");
  r.udp_port = detail::parse_port(url.substr(q + kDisc.size()), "discovery port");
  return r;
}

// /ip4/<ip>/tcp/<tcp>/p2p/<node id hex>
inline std::string encode_multiaddr(const NodeRecord& r) {
  return "/ip4/" + r.ip.str() + "/tcp/" + std::to_string(r.tcp_port) + "/p2p/" +
         node_id(r.public_key).hex();
}

struct MultiaddrParts {
  Ipv4 ip;
  std::uint16_t tcp_port = 0;
  NodeId id;

  bool operator==(const MultiaddrParts&) const = default;
};

inline MultiaddrParts decode_multiaddr(std::string_view addr) {
  std::vector<std::string_view> parts;
  while (!addr.empty()) {
    if (addr.front() != '/') throw Error("multiaddr components must start with '/'");
    addr.remove_prefix(1);
    auto next = addr.find('/');
    parts.push_back(addr.substr(0, next));
    addr = next == std::string_view::npos ? std::string_view{} : addr.substr(next);
  }
  if (parts.size() != 6 || parts[0] != "ip4" || parts[2] != "tcp" || parts[4] != "p2p") {
    throw Error("multiaddr must have the form /ip4/<ip>/tcp/<port>/p2p/<id>");
  }
  return {Ipv4::parse(parts[1]), detail::parse_port(parts[3], "tcp port"),
          NodeId::from_hex(parts[5])};
}

}  // namespace keyreuse

template <>
struct std::hash<keyreuse::PublicKey> : keyreuse::PublicKeyHash {};
