#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyreuse/identity.hpp"

namespace keyreuse::dht {

constexpr int kBucketCount = 17;
constexpr std::size_t kBucketSize = 16;
constexpr std::size_t kReplacementSize = 16;
constexpr std::size_t kTableCapacity = kBucketCount * kBucketSize;  // 272
constexpr std::size_t kFailedRequestsCap = 10'000;

// Logarithmic distances 1..240 share bucket 0; 241..256 map to 1..16.
constexpr int kBucketZeroMaxLogdist = 256 - kBucketCount + 1;  // 240

inline int bucket_index(const NodeId& owner, const NodeId& other) {
  int d = logdist(owner, other);
  if (d == 0) throw Error("bucket_index: ids are equal (self)");
  return std::max(0, d - kBucketZeroMaxLogdist);
}

// Strict ordering by XOR distance to `target`, ties by id bytes.
inline bool closer_to(const NodeId& target, const NodeId& a, const NodeId& b) {
  NodeId da = xor_distance(target, a);
  NodeId db = xor_distance(target, b);
  if (da != db) return da < db;
  return a < b;
}

enum class InsertOutcome { added, refreshed, queued_replacement, ignored_duplicate_key, rejected_self };

inline const char* to_string(InsertOutcome o) {
  switch (o) {
    case InsertOutcome::added: return "added";
    case InsertOutcome::refreshed: return "refreshed";
    case InsertOutcome::queued_replacement: return "queued_replacement";
    case InsertOutcome::ignored_duplicate_key: return "ignored_duplicate_key";
    case InsertOutcome::rejected_self: return "rejected_self";
  }
  return "?";
}

struct Entry {
  NodeRecord record;
  NodeId id;
  Tick last_seen = 0;

  bool operator==(const Entry&) const = default;
};

struct Bucket {
  std::vector<Entry> entries;  // most recently validated first
  std::deque<Entry> replacements;  // FIFO, head is oldest

  bool operator==(const Bucket&) const = default;
};

struct FailedRequest {
  NodeId id;
  std::string reason;
  Tick at = 0;

  bool operator==(const FailedRequest&) const = default;
};

struct PersistenceTables {
  std::vector<NodeRecord> live_nodes;
  std::vector<FailedRequest> failed_requests;
  std::vector<NodeRecord> seed_nodes;

  bool operator==(const PersistenceTables&) const = default;
};

using IdFunction = NodeId (*)(const PublicKey&);

inline bool same_endpoint(const NodeRecord& a, const NodeRecord& b) {
  return a.ip == b.ip && a.udp_port == b.udp_port && a.tcp_port == b.tcp_port;
}

class RoutingTable {
public:
  explicit RoutingTable(PublicKey owner, IdFunction id_fn = &keyreuse::node_id)
      : owner_key_(owner), owner_id_(id_fn(owner)), id_fn_(id_fn) {}

  const PublicKey& owner_key() const { return owner_key_; }
  const NodeId& owner_id() const { return owner_id_; }
  NodeId id_of(const PublicKey& pk) const { return id_fn_(pk); }

  InsertOutcome insert(const NodeRecord& record, Tick now) {
    if (record.public_key == owner_key_) return InsertOutcome::rejected_self;
    NodeId id = id_fn_(record.public_key);
    // A distinct key whose digest equals ours can never be placed.
    if (id == owner_id_) return InsertOutcome::rejected_self;
    Bucket& b = buckets_[bucket_index(owner_id_, id)];

    auto live = std::find_if(b.entries.begin(), b.entries.end(),
                             [&](const Entry& e) { return e.record.public_key == record.public_key; });
    if (live != b.entries.end()) {
      if (!same_endpoint(live->record, record)) return InsertOutcome::ignored_duplicate_key;
      Entry e = *live;
      e.last_seen = now;
      if (record.seq > e.record.seq) e.record.seq = record.seq;
      b.entries.erase(live);
      b.entries.insert(b.entries.begin(), e);
      return InsertOutcome::refreshed;
    }

    auto queued = std::find_if(b.replacements.begin(), b.replacements.end(),
                               [&](const Entry& e) { return e.record.public_key == record.public_key; });
    if (queued != b.replacements.end()) {
      if (!same_endpoint(queued->record, record)) return InsertOutcome::ignored_duplicate_key;
      queued->last_seen = now;
      return InsertOutcome::queued_replacement;
    }

    if (b.entries.size() < kBucketSize) {
      b.entries.insert(b.entries.begin(), Entry{record, id, now});
      return InsertOutcome::added;
    }
    b.replacements.push_back(Entry{record, id, now});
    if (b.replacements.size() > kReplacementSize) b.replacements.pop_front();
    return InsertOutcome::queued_replacement;
  }

  // Removes a bucket entry and promotes the oldest queued replacement into
  // its place. Returns the promoted record, if any.
  std::optional<NodeRecord> evict_and_promote(const NodeId& dead, Tick now = 0,
                                              std::string reason = "liveness check failed") {
    if (dead == owner_id_) return std::nullopt;
    Bucket& b = buckets_[bucket_index(owner_id_, dead)];
    auto it = std::find_if(b.entries.begin(), b.entries.end(),
                           [&](const Entry& e) { return e.id == dead; });
    if (it == b.entries.end()) return std::nullopt;
    b.entries.erase(it);
    record_failure(dead, std::move(reason), now);
    if (b.replacements.empty()) return std::nullopt;
    Entry promoted = b.replacements.front();
    b.replacements.pop_front();
    b.entries.push_back(promoted);
    return promoted.record;
  }

  // Marks an entry as freshly validated, moving it to its bucket's front.
  bool touch(const PublicKey& pk, Tick now) {
    NodeId id = id_fn_(pk);
    if (id == owner_id_) return false;
    Bucket& b = buckets_[bucket_index(owner_id_, id)];
    auto it = std::find_if(b.entries.begin(), b.entries.end(),
                           [&](const Entry& e) { return e.record.public_key == pk; });
    if (it == b.entries.end()) return false;
    Entry e = *it;
    e.last_seen = now;
    b.entries.erase(it);
    b.entries.insert(b.entries.begin(), e);
    return true;
  }

  std::vector<NodeRecord> closest(const NodeId& target, std::size_t k) const {
    // Ids are distinct within a table, so XOR distance alone is a total order.
    std::vector<std::pair<NodeId, const Entry*>> all;
    all.reserve(kTableCapacity);
    for (const auto& b : buckets_)
      for (const auto& e : b.entries) all.emplace_back(xor_distance(target, e.id), &e);
    std::size_t n = std::min(k, all.size());
    auto by_distance = [](const auto& a, const auto& b) { return a.first < b.first; };
    auto mid = all.begin() + static_cast<std::ptrdiff_t>(n);
    std::nth_element(all.begin(), mid, all.end(), by_distance);
    std::sort(all.begin(), mid, by_distance);
    std::vector<NodeRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(all[i].second->record);
    return out;
  }

  const Entry* find(const PublicKey& pk) const {
    NodeId id = id_fn_(pk);
    if (id == owner_id_) return nullptr;
    const Bucket& b = buckets_[bucket_index(owner_id_, id)];
    for (const auto& e : b.entries)
      if (e.record.public_key == pk) return &e;
    return nullptr;
  }

  bool contains_anywhere(const PublicKey& pk) const {
    NodeId id = id_fn_(pk);
    if (id == owner_id_) return false;
    const Bucket& b = buckets_[bucket_index(owner_id_, id)];
    auto match = [&](const Entry& e) { return e.record.public_key == pk; };
    return std::any_of(b.entries.begin(), b.entries.end(), match) ||
           std::any_of(b.replacements.begin(), b.replacements.end(), match);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : buckets_) n += b.entries.size();
    return n;
  }

  bool empty() const { return size() == 0; }

  const std::array<Bucket, kBucketCount>& buckets() const { return buckets_; }
  const Bucket& bucket(int index) const { return buckets_.at(static_cast<std::size_t>(index)); }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    for (const auto& b : buckets_) out.insert(out.end(), b.entries.begin(), b.entries.end());
    return out;
  }

  const std::deque<FailedRequest>& failed_requests() const { return failed_; }

  void record_failure(const NodeId& id, std::string reason, Tick at) {
    failed_.push_back({id, std::move(reason), at});
    if (failed_.size() > kFailedRequestsCap) failed_.pop_front();
  }

  // Places an entry directly, bypassing LRU ordering. Used when restoring a
  // table captured elsewhere; ordering follows the call sequence.
  void restore_entry(const Entry& e) {
    if (e.record.public_key == owner_key_ || contains_anywhere(e.record.public_key)) {
      throw Error("restore_entry: duplicate or self entry " + e.record.public_key.hex());
    }
    Bucket& b = buckets_[bucket_index(owner_id_, e.id)];
    if (b.entries.size() >= kBucketSize) throw Error("restore_entry: bucket overflow");
    b.entries.push_back(e);
  }

  bool operator==(const RoutingTable& o) const {
    return owner_key_ == o.owner_key_ && buckets_ == o.buckets_ && failed_ == o.failed_;
  }

private:
  PublicKey owner_key_;
  NodeId owner_id_;
  IdFunction id_fn_;
  std::array<Bucket, kBucketCount> buckets_{};
  std::deque<FailedRequest> failed_;
};

// Seeds are written oldest-validated first per bucket so that re-inserting
// them in stored order reproduces the in-bucket LRU order.
inline PersistenceTables persist(const RoutingTable& table) {
  PersistenceTables out;
  for (const auto& b : table.buckets()) {
    for (auto it = b.entries.rbegin(); it != b.entries.rend(); ++it) {
      out.live_nodes.push_back(it->record);
      out.seed_nodes.push_back(it->record);
    }
  }
  out.failed_requests.assign(table.failed_requests().begin(), table.failed_requests().end());
  return out;
}

inline RoutingTable load(const PublicKey& owner, const PersistenceTables& stored, Tick now = 0,
                         IdFunction id_fn = &keyreuse::node_id) {
  RoutingTable table(owner, id_fn);
  for (std::size_t i = 0; i < stored.seed_nodes.size(); ++i) {
    if (!stored.seed_nodes[i].valid()) {
      throw Error("seed record " + std::to_string(i + 1) + " is invalid");
    }
  }
  for (const auto& f : stored.failed_requests) table.record_failure(f.id, f.reason, f.at);
  for (const auto& r : stored.seed_nodes) table.insert(r, now);
  return table;
}

// Line format, one record per line:
//   live <enode-url> <seq>
//   seed <enode-url> <seq>
//   failed <node-id-hex> <timestamp> <reason...>
inline std::string serialize(const PersistenceTables& t) {
  std::ostringstream os;
  for (const auto& r : t.live_nodes) os << "live " << encode_enr_url_v4(r) << ' ' << r.seq << '\n';
  for (const auto& r : t.seed_nodes) os << "seed " << encode_enr_url_v4(r) << ' ' << r.seq << '\n';
  for (const auto& f : t.failed_requests) os << "failed " << f.id.hex() << ' ' << f.at << ' ' << f.reason << '\n';
  return os.str();
}

inline PersistenceTables parse_persistence(const std::string& text) {
  PersistenceTables out;
  std::istringstream is(text);
  std::string line;
  std::size_t ordinal = 0;
  while (std::getline(is, line)) {
    ++ordinal;
    if (line.empty()) continue;
    try {
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "live" || tag == "seed") {
        std::string url;
        std::uint64_t seq = 0;
        if (!(ls >> url >> seq)) throw Error("missing fields");
        NodeRecord r = decode_enr_url_v4(url);
        r.seq = seq;
        if (!r.valid()) throw Error("invalid record");
        (tag == "live" ? out.live_nodes : out.seed_nodes).push_back(r);
      } else if (tag == "failed") {
        std::string id;
        FailedRequest f;
        if (!(ls >> id >> f.at)) throw Error("missing fields");
        f.id = NodeId::from_hex(id);
        std::getline(ls >> std::ws, f.reason);
        out.failed_requests.push_back(std::move(f));
      } else {
        throw Error("unknown tag '" + tag + "'");
      }
    } catch (const Error& e) {
      throw Error("persistence record " + std::to_string(ordinal) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace keyreuse::dht
