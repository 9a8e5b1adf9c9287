#pragma once

// Generators and brute-force oracles shared by the unit and acceptance
// suites. Oracles here deliberately avoid the library's own algorithms.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "keyreuse/identity.hpp"

namespace keyreuse::testing {

inline PublicKey random_key(std::mt19937_64& rng) {
  PublicKey pk;
  for (auto& b : pk.bytes) b = static_cast<std::uint8_t>(rng() & 0xff);
  return pk;
}

inline NodeId random_id(std::mt19937_64& rng) {
  NodeId id;
  for (auto& b : id.bytes) b = static_cast<std::uint8_t>(rng() & 0xff);
  return id;
}

inline std::uint16_t random_port(std::mt19937_64& rng) { return static_cast<std::uint16_t>(1 + rng() % 65535); }

inline NodeRecord random_record(std::mt19937_64& rng) {
  NodeRecord r;
  r.public_key = random_key(rng);
  r.ip = Ipv4{static_cast<std::uint32_t>(rng())};
  r.udp_port = random_port(rng);
  r.tcp_port = random_port(rng);
  return r;
}

// Bit i of an id, counting from the most significant bit.
inline int bit_at(const NodeId& id, int i) { return (id.bytes[static_cast<std::size_t>(i / 8)] >> (7 - i % 8)) & 1; }

// 256 minus the index of the first differing bit; 0 when equal.
inline int brute_logdist(const NodeId& a, const NodeId& b) {
  for (int i = 0; i < 256; ++i)
    if (bit_at(a, i) != bit_at(b, i)) return 256 - i;
  return 0;
}

// Lexicographic comparison of XOR distances, one bit at a time.
inline bool brute_closer(const NodeId& target, const NodeId& a, const NodeId& b) {
  for (int i = 0; i < 256; ++i) {
    int da = bit_at(target, i) ^ bit_at(a, i);
    int db = bit_at(target, i) ^ bit_at(b, i);
    if (da != db) return da < db;
  }
  return false;
}

// Minimal disjoint-set forest over string labels.
class LabelUnion {
public:
  void add(const std::string& v) { parent_.emplace(v, v); }

  std::string find(const std::string& v) {
    std::string r = v;
    while (parent_.at(r) != r) r = parent_.at(r);
    std::string c = v;
    while (parent_.at(c) != r) {
      std::string next = parent_.at(c);
      parent_[c] = r;
      c = next;
    }
    return r;
  }

  void join(const std::string& a, const std::string& b) {
    add(a);
    add(b);
    std::string ra = find(a), rb = find(b);
    if (ra != rb) parent_[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::set<std::set<std::string>> partition() {
    std::map<std::string, std::set<std::string>> groups;
    std::vector<std::string> keys;
    for (const auto& [k, _] : parent_) keys.push_back(k);
    for (const auto& k : keys) groups[find(k)].insert(k);
    std::set<std::set<std::string>> out;
    for (auto& [_, g] : groups) out.insert(std::move(g));
    return out;
  }

private:
  std::map<std::string, std::string> parent_;
};

// Scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("keyreuse-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf) const { return (path_ / leaf).string(); }

private:
  std::filesystem::path path_;
};

}  // namespace keyreuse::testing
