#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "keyreuse/discovery.hpp"
#include "keyreuse/observation.hpp"

namespace keyreuse::crawler {

using discovery::PeerKey;

// Expected distinct records after n random-target queries to one node, if
// each reply were 16 draws without replacement from 272 slots.
inline double expected_distinct(long long n_queries) {
  if (n_queries < 0) throw Error("expected_distinct: query count must be non-negative");
  const double slots = static_cast<double>(dht::kTableCapacity);
  const double miss = (slots - static_cast<double>(dht::kBucketSize)) / slots;
  return slots * (1.0 - std::pow(miss, static_cast<double>(n_queries)));
}

inline double expected_fraction(long long n_queries) {
  return expected_distinct(n_queries) / static_cast<double>(dht::kTableCapacity);
}

// Something that answers FindNode. nullopt means the node did not answer.
class DiscoveryView {
public:
  virtual ~DiscoveryView() = default;
  virtual std::optional<std::vector<NodeRecord>> find_node_v4(const NodeRecord& to, const NodeId& target) const = 0;
  virtual std::optional<std::vector<NodeRecord>> find_node_v5(const NodeRecord& to, int distance) const = 0;
};

struct CrawlOptions {
  std::uint64_t snapshot_id = 1;
  Tick started_at = 0;
  std::size_t in_flight_cap = 64;  // nodes interrogated per wave
  Tick wave_duration = 1 * kSecond;
};

struct CrawlResult {
  Snapshot snapshot;
  // Distinct public keys each interrogated node returned.
  std::map<PeerKey, std::set<PublicKey>> recovered;
  std::map<PeerKey, int> queries_sent;
  std::size_t unresponsive = 0;
};

namespace detail {

inline std::uint64_t node_seed(std::uint64_t seed, const PeerKey& k) {
  std::vector<std::uint8_t> pre(k.public_key.bytes.begin(), k.public_key.bytes.end());
  append_u64(pre, seed);
  append_u64(pre, k.ip.value);
  append_u64(pre, k.udp_port);
  Digest d = sha256(pre);
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | d[static_cast<std::size_t>(i)];
  return s;
}

using Query = std::function<std::optional<std::vector<NodeRecord>>(const NodeRecord&, std::mt19937_64&, int)>;

// Breadth-first over discovered records in waves of at most in_flight_cap
// nodes. Each node's targets come from its own generator derived from the
// seed, so the snapshot does not depend on wave composition.
inline CrawlResult crawl(const std::vector<NodeRecord>& bootstrap, Protocol protocol, int queries_per_node,
                         std::uint64_t seed, const CrawlOptions& opt, const Query& query) {
  if (bootstrap.empty()) throw Error("crawl: at least one bootstrap record is required");
  if (queries_per_node < 0) throw Error("crawl: query count must be non-negative");
  if (opt.in_flight_cap == 0) throw Error("crawl: in-flight cap must be positive");

  CrawlResult out;
  out.snapshot.snapshot_id = opt.snapshot_id;
  out.snapshot.started_at = opt.started_at;
  std::set<std::pair<PeerKey, std::uint16_t>> observed;
  std::set<PeerKey> queued;
  std::deque<NodeRecord> frontier;

  Tick now = opt.started_at;
  auto observe = [&](const NodeRecord& r) {
    if (!r.valid()) return;
    PeerKey k = PeerKey::of(r);
    if (observed.insert({k, r.tcp_port}).second) {
      out.snapshot.observations.push_back(
          {opt.snapshot_id, r.public_key, r.ip, r.udp_port, r.tcp_port, protocol, now});
    }
    if (queued.insert(k).second) frontier.push_back(r);
  };
  for (const auto& b : bootstrap) observe(b);

  while (!frontier.empty() && queries_per_node > 0) {
    std::vector<NodeRecord> wave;
    while (!frontier.empty() && wave.size() < opt.in_flight_cap) {
      wave.push_back(frontier.front());
      frontier.pop_front();
    }
    now += opt.wave_duration;
    std::vector<std::vector<NodeRecord>> replies(wave.size());
    for (std::size_t w = 0; w < wave.size(); ++w) {
      PeerKey k = PeerKey::of(wave[w]);
      std::mt19937_64 rng(node_seed(seed, k));
      auto& got = out.recovered[k];
      int sent = 0;
      bool answered = false;
      for (int q = 0; q < queries_per_node; ++q) {
        ++sent;
        auto reply = query(wave[w], rng, q);
        if (!reply) break;
        answered = true;
        for (const auto& r : *reply) {
          got.insert(r.public_key);
          replies[w].push_back(r);
        }
      }
      out.queries_sent[k] = sent;
      if (!answered) ++out.unresponsive;
    }
    // Merge in wave order.
    for (const auto& rs : replies)
      for (const auto& r : rs) observe(r);
  }
  out.snapshot.ended_at = now;
  return out;
}

}  // namespace detail

// Each live node receives queries_per_node FindNode with uniform targets.
inline CrawlResult crawl_v4(const DiscoveryView& view, const std::vector<NodeRecord>& bootstrap,
                            int queries_per_node, std::uint64_t seed, const CrawlOptions& opt = {}) {
  return detail::crawl(bootstrap, Protocol::v4, queries_per_node, seed, opt,
                       [&](const NodeRecord& to, std::mt19937_64& rng, int) {
                         NodeId target;
                         for (auto& b : target.bytes) b = static_cast<std::uint8_t>(rng() & 0xff);
                         return view.find_node_v4(to, target);
                       });
}

// One FindNode per distance 0..16.
inline CrawlResult crawl_v5(const DiscoveryView& view, const std::vector<NodeRecord>& bootstrap,
                            std::uint64_t seed, const CrawlOptions& opt = {}) {
  return detail::crawl(bootstrap, Protocol::v5, dht::kBucketCount, seed, opt,
                       [&](const NodeRecord& to, std::mt19937_64&, int q) { return view.find_node_v5(to, q); });
}

struct Summary {
  std::size_t distinct_by_key = 0;
  std::size_t distinct_by_ip = 0;
  std::size_t total_with_duplicates = 0;

  bool operator==(const Summary&) const = default;
};

inline Summary summarize(const std::vector<Snapshot>& snapshots) {
  std::set<PublicKey> keys;
  std::set<Ipv4> ips;
  Summary s;
  for (const auto& snap : snapshots) {
    for (const auto& o : snap.observations) {
      keys.insert(o.public_key);
      ips.insert(o.ip);
      ++s.total_with_duplicates;
    }
  }
  s.distinct_by_key = keys.size();
  s.distinct_by_ip = ips.size();
  return s;
}

}  // namespace keyreuse::crawler
