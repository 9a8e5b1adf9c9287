#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "keyreuse/dht.hpp"
#include "keyreuse/identity.hpp"

namespace keyreuse::discovery {

constexpr std::size_t kMaxReplyRecords = 16;
constexpr int kMaxDistance = dht::kBucketCount - 1;

enum class MessageKind {
  Ping,
  Pong,
  FindNodeV4,
  NeighborsV4,
  ENRRequest,
  ENRResponse,
  PingV5,
  PongV5,
  FindNodeV5,
  NodesV5,
  WhoAreYou,
  Handshake,
  ErrorV5,
};

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Ping: return "Ping";
    case MessageKind::Pong: return "Pong";
    case MessageKind::FindNodeV4: return "FindNodeV4";
    case MessageKind::NeighborsV4: return "NeighborsV4";
    case MessageKind::ENRRequest: return "ENRRequest";
    case MessageKind::ENRResponse: return "ENRResponse";
    case MessageKind::PingV5: return "PingV5";
    case MessageKind::PongV5: return "PongV5";
    case MessageKind::FindNodeV5: return "FindNodeV5";
    case MessageKind::NodesV5: return "NodesV5";
    case MessageKind::WhoAreYou: return "WhoAreYou";
    case MessageKind::Handshake: return "Handshake";
    case MessageKind::ErrorV5: return "ErrorV5";
  }
  return "?";
}

// One datagram. `from` is the sender's full record: replies go back to its
// udp endpoint. Payload fields are meaningful only for the matching kind.
struct Message {
  MessageKind kind = MessageKind::Ping;
  NodeRecord from;
  PublicKey to;
  Tick sim_time = 0;
  std::uint64_t request_id = 0;

  NodeId target;                    // FindNodeV4
  int distance = 0;                 // FindNodeV5
  std::vector<NodeRecord> records;  // NeighborsV4, NodesV5
  std::optional<NodeRecord> record; // ENRResponse, Handshake
  std::uint64_t nonce = 0;          // WhoAreYou, Handshake
  std::string error;                // ErrorV5
};

struct Envelope {
  Ipv4 ip;
  std::uint16_t udp_port = 0;
  Message message;
};

// Peers are tracked per (key, endpoint): two hosts sharing a key are two
// distinct transport peers even though the routing table conflates them.
struct PeerKey {
  PublicKey public_key;
  Ipv4 ip;
  std::uint16_t udp_port = 0;

  auto operator<=>(const PeerKey&) const = default;

  static PeerKey of(const NodeRecord& r) { return {r.public_key, r.ip, r.udp_port}; }
};

enum class TimerKind { PingTimeout, QueryTimeout };

struct Timer {
  Tick at = 0;
  TimerKind kind = TimerKind::PingTimeout;
  PeerKey peer;
  std::uint64_t id = 0;  // ping request id or lookup id
};

struct Timings {
  Tick refresh_interval = 1 * kMinute;
  Tick revalidate_after = 5 * kMinute;
  Tick ping_timeout = 1 * kSecond;
  Tick query_timeout = 2 * kSecond;
  Tick verification_ttl = 12 * kHour;
  int lookup_concurrency = 3;
  int eviction_threshold = 2;
};

struct Outputs {
  std::vector<Envelope> sends;
  std::vector<Timer> timers;
  // Outcome of inserting the message sender into the table, when attempted.
  std::optional<dht::InsertOutcome> insert_outcome;
  bool dropped = false;
  std::vector<NodeRecord> evicted;
};

struct DroppedRequest {
  PeerKey from;
  MessageKind kind;
  Tick at = 0;
  std::string reason;
};

struct LivenessState {
  Tick last_pong = std::numeric_limits<Tick>::min();
  Tick last_ping_received = std::numeric_limits<Tick>::min();
  Tick last_ping_sent = std::numeric_limits<Tick>::min();
  std::uint64_t outstanding_ping = 0;
  int missed_pings = 0;
  bool session = false;          // v5: WhoAreYou/Handshake completed
  std::uint64_t challenge = 0;   // v5: nonce we issued, awaiting Handshake
  std::optional<Message> stashed; // v5: request to resend after handshake
  std::vector<Message> awaiting_bond;  // v4: FindNode held until the peer pings us
};

struct LookupState {
  std::uint64_t id = 0;
  NodeId target;
  std::vector<NodeRecord> candidates;  // sorted by distance to target
  std::set<PublicKey> asked;
  std::set<PublicKey> responded;
  std::map<PublicKey, PeerKey> inflight;
  std::map<PublicKey, std::vector<int>> followups;  // v5 distances still to ask
  std::map<PublicKey, Tick> deadline;
  bool done = false;
  Tick started = 0;
  Tick finished = 0;

  std::vector<NodeRecord> result() const {
    std::vector<NodeRecord> out;
    for (const auto& c : candidates) {
      if (out.size() == kMaxReplyRecords) break;
      if (responded.count(c.public_key)) out.push_back(c);
    }
    return out;
  }
};

// Reply body for a v4 FindNode: the 16 entries closest to the target.
inline std::vector<NodeRecord> neighbors_v4(const dht::RoutingTable& table, const NodeId& target) {
  return table.closest(target, kMaxReplyRecords);
}

// Reply body for a v5 FindNode: the contents of one bucket.
inline std::vector<NodeRecord> nodes_v5(const dht::RoutingTable& table, int distance) {
  if (distance < 0 || distance > kMaxDistance) {
    throw Error("FindNodeV5 distance " + std::to_string(distance) + " outside [0,16]");
  }
  std::vector<NodeRecord> out;
  for (const auto& e : table.bucket(distance).entries) {
    if (out.size() == kMaxReplyRecords) break;
    out.push_back(e.record);
  }
  return out;
}

// Stable ordering by XOR distance of the record ids to `target`.
inline void sort_by_distance(std::vector<NodeRecord>& records, const NodeId& target) {
  std::vector<std::pair<NodeId, std::size_t>> keyed;
  keyed.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    keyed.emplace_back(xor_distance(target, node_id(records[i].public_key)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<NodeRecord> out;
  out.reserve(records.size());
  for (const auto& [_, i] : keyed) out.push_back(std::move(records[i]));
  records = std::move(out);
}

// Distance to request from `peer` when searching for `target` over v5.
inline int v5_distance_toward(const NodeId& peer, const NodeId& target) {
  return peer == target ? 0 : dht::bucket_index(peer, target);
}

// A v5 lookup step asks the peer's ring toward the target first, then every
// other ring. Nodes tied with the peer at its distance to the target can sit
// in any of the peer's nearer rings, and a capped bucket on a closer peer can
// hide them, so no narrower window is exact.
inline std::vector<int> v5_lookup_distances(const NodeId& peer, const NodeId& target) {
  int d = v5_distance_toward(peer, target);
  std::vector<int> out{d};
  for (int r = dht::kBucketCount - 1; r >= 0; --r)
    if (r != d) out.push_back(r);
  return out;
}

class Node {
public:
  Node(NodeRecord self, Protocol protocol, Timings timings = {}, std::uint64_t seed = 0)
      : self_(self), id_(node_id(self.public_key)), protocol_(protocol), timings_(timings),
        table_(self.public_key), rng_(seed) {}

  const NodeRecord& self() const { return self_; }
  const NodeId& id() const { return id_; }
  Protocol protocol() const { return protocol_; }
  const Timings& timings() const { return timings_; }
  const dht::RoutingTable& table() const { return table_; }
  dht::RoutingTable& mutable_table() { return table_; }
  const std::vector<DroppedRequest>& dropped_requests() const { return dropped_; }
  const std::vector<NodeRecord>& last_lookup_results() const { return last_results_; }

  // Seeds the table with the bootnodes and pings them.
  Outputs start(Tick now, const std::vector<NodeRecord>& bootnodes) {
    Outputs out;
    for (const auto& b : bootnodes) {
      if (!b.valid()) continue;
      table_.insert(b, now);
      if (b.public_key == self_.public_key) continue;
      send_ping(b, now, out);
    }
    return out;
  }

  bool endpoint_verified(const NodeRecord& peer, Tick now) const {
    auto it = peers_.find(PeerKey::of(peer));
    if (it == peers_.end()) return false;
    if (protocol_ == Protocol::v5 && it->second.session) return true;
    return fresh(it->second.last_pong, now);
  }

  bool has_session(const NodeRecord& peer) const {
    auto it = peers_.find(PeerKey::of(peer));
    return it != peers_.end() && it->second.session;
  }

  Outputs handle(const Message& m, Tick now) {
    Outputs out;
    switch (m.kind) {
      case MessageKind::Ping: on_ping(m, now, out); break;
      case MessageKind::Pong:
      case MessageKind::PongV5: on_pong(m, now, out); break;
      case MessageKind::FindNodeV4: on_findnode_v4(m, now, out); break;
      case MessageKind::NeighborsV4:
      case MessageKind::NodesV5: on_records(m, now, out); break;
      case MessageKind::ENRRequest: on_enr_request(m, now, out); break;
      case MessageKind::ENRResponse: break;  // record fetch only; seq is never bumped on read
      case MessageKind::PingV5: on_ping_v5(m, now, out); break;
      case MessageKind::FindNodeV5: on_findnode_v5(m, now, out); break;
      case MessageKind::WhoAreYou: on_whoareyou(m, now, out); break;
      case MessageKind::Handshake: on_handshake(m, now, out); break;
      case MessageKind::ErrorV5: on_error(m, now, out); break;
    }
    return out;
  }

  // Periodic maintenance: revalidate stale entries, then run a self lookup
  // and a random-target lookup.
  Outputs refresh(Tick now) {
    Outputs out;
    for (const auto& e : table_.entries()) {
      if (e.last_seen + timings_.revalidate_after <= now) {
        auto& st = peers_[PeerKey::of(e.record)];
        if (st.outstanding_ping == 0) send_ping(e.record, now, out);
      }
    }
    if (!table_.empty()) {
      begin_lookup(id_, now, out);
      NodeId random_target;
      for (auto& byte : random_target.bytes) byte = static_cast<std::uint8_t>(rng_() & 0xff);
      begin_lookup(random_target, now, out);
    }
    return out;
  }

  Outputs on_timer(const Timer& t, Tick now) {
    Outputs out;
    if (t.kind == TimerKind::PingTimeout) {
      auto it = peers_.find(t.peer);
      if (it == peers_.end() || it->second.outstanding_ping != t.id) return out;
      auto& st = it->second;
      st.outstanding_ping = 0;
      ++st.missed_pings;
      if (st.missed_pings >= timings_.eviction_threshold) {
        st.missed_pings = 0;
        st.last_pong = std::numeric_limits<Tick>::min();
        st.session = false;
        const auto* entry = table_.find(t.peer.public_key);
        if (entry && entry->record.ip == t.peer.ip && entry->record.udp_port == t.peer.udp_port) {
          NodeRecord dead = entry->record;
          table_.evict_and_promote(entry->id, now, "no pong after " +
                                   std::to_string(timings_.eviction_threshold) + " pings");
          out.evicted.push_back(dead);
        }
      }
    } else {
      auto it = lookups_.find(t.id);
      if (it == lookups_.end() || it->second.done) return out;
      auto& lk = it->second;
      auto f = lk.inflight.find(t.peer.public_key);
      if (f == lk.inflight.end() || f->second != t.peer) return out;
      if (now < lk.deadline[t.peer.public_key]) return out;
      lk.inflight.erase(f);
      lk.followups.erase(t.peer.public_key);
      table_.record_failure(node_id(t.peer.public_key), "findnode timeout", now);
      advance(lk, now, out);
    }
    return out;
  }

  // Starts an iterative lookup. Progress is driven by replies and timers;
  // poll `lookup(id)` for completion.
  std::uint64_t begin_lookup(const NodeId& target, Tick now, Outputs& out) {
    std::uint64_t id = ++next_request_;
    LookupState& lk = lookups_[id];
    lk.id = id;
    lk.target = target;
    lk.started = now;
    lk.candidates = table_.closest(target, kMaxReplyRecords);
    advance(lk, now, out);
    return id;
  }

  const LookupState* lookup(std::uint64_t id) const {
    auto it = lookups_.find(id);
    return it == lookups_.end() ? nullptr : &it->second;
  }

  std::size_t active_lookups() const {
    return static_cast<std::size_t>(std::count_if(lookups_.begin(), lookups_.end(),
                                                  [](const auto& kv) { return !kv.second.done; }));
  }

  // Finished lookups are kept for inspection; callers prune old ones.
  void forget_finished_lookups(Tick finished_before) {
    std::erase_if(lookups_, [&](const auto& kv) {
      return kv.second.done && kv.second.finished < finished_before;
    });
  }

private:
  bool fresh(Tick stamp, Tick now) const {
    return stamp != std::numeric_limits<Tick>::min() && now - stamp < timings_.verification_ttl;
  }

  Message make(MessageKind kind, const NodeRecord& to, Tick now) const {
    Message m;
    m.kind = kind;
    m.from = self_;
    m.to = to.public_key;
    m.sim_time = now;
    return m;
  }

  void send(const NodeRecord& to, Message m, Outputs& out) {
    out.sends.push_back({to.ip, to.udp_port, std::move(m)});
  }

  // v5 requests go out unconditionally; without a session the remote answers
  // with WhoAreYou and the stashed copy is resent after the handshake.
  void send_request(const NodeRecord& to, Message m, Outputs& out) {
    if (protocol_ == Protocol::v5) {
      auto& st = peers_[PeerKey::of(to)];
      if (!st.session) st.stashed = m;
    }
    send(to, std::move(m), out);
  }

  void send_ping(const NodeRecord& to, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(to)];
    Message m = make(protocol_ == Protocol::v4 ? MessageKind::Ping : MessageKind::PingV5, to, now);
    m.request_id = ++next_request_;
    st.outstanding_ping = m.request_id;
    st.last_ping_sent = now;
    out.timers.push_back({now + timings_.ping_timeout, TimerKind::PingTimeout, PeerKey::of(to), m.request_id});
    send_request(to, std::move(m), out);
  }

  dht::InsertOutcome insert_sender(const NodeRecord& r, Tick now, Outputs& out) {
    auto outcome = table_.insert(r, now);
    out.insert_outcome = outcome;
    return outcome;
  }

  void drop(const Message& m, Tick now, std::string reason, Outputs& out) {
    dropped_.push_back({PeerKey::of(m.from), m.kind, now, std::move(reason)});
    out.dropped = true;
  }

  void on_ping(const Message& m, Tick now, Outputs& out) {
    Message pong = make(MessageKind::Pong, m.from, now);
    pong.request_id = m.request_id;
    send(m.from, std::move(pong), out);
    insert_sender(m.from, now, out);
    if (m.from.public_key == self_.public_key) return;
    auto& st = peers_[PeerKey::of(m.from)];
    st.last_ping_received = now;
    for (auto& held : st.awaiting_bond) send(m.from, std::move(held), out);
    st.awaiting_bond.clear();
    if (!fresh(st.last_pong, now) && st.outstanding_ping == 0) send_ping(m.from, now, out);
  }

  void on_pong(const Message& m, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(m.from)];
    if (m.request_id != 0 && m.request_id == st.outstanding_ping) st.outstanding_ping = 0;
    st.last_pong = now;
    st.missed_pings = 0;
    insert_sender(m.from, now, out);
  }

  void on_findnode_v4(const Message& m, Tick now, Outputs& out) {
    if (!endpoint_verified(m.from, now)) {
      drop(m, now, "sender endpoint not verified", out);
      return;
    }
    Message reply = make(MessageKind::NeighborsV4, m.from, now);
    reply.request_id = m.request_id;
    reply.records = neighbors_v4(table_, m.target);
    send(m.from, std::move(reply), out);
  }

  bool require_session(const Message& m, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(m.from)];
    if (st.session) return true;
    Message challenge = make(MessageKind::WhoAreYou, m.from, now);
    st.challenge = rng_() | 1;
    challenge.nonce = st.challenge;
    challenge.request_id = m.request_id;
    send(m.from, std::move(challenge), out);
    drop(m, now, "no session", out);
    return false;
  }

  void on_ping_v5(const Message& m, Tick now, Outputs& out) {
    if (!require_session(m, now, out)) return;
    Message pong = make(MessageKind::PongV5, m.from, now);
    pong.request_id = m.request_id;
    send(m.from, std::move(pong), out);
    insert_sender(m.from, now, out);
  }

  void on_findnode_v5(const Message& m, Tick now, Outputs& out) {
    if (!require_session(m, now, out)) return;
    if (m.distance < 0 || m.distance > kMaxDistance) {
      Message err = make(MessageKind::ErrorV5, m.from, now);
      err.request_id = m.request_id;
      err.error = "distance " + std::to_string(m.distance) + " outside [0,16]";
      send(m.from, std::move(err), out);
      return;
    }
    Message reply = make(MessageKind::NodesV5, m.from, now);
    reply.request_id = m.request_id;
    reply.records = nodes_v5(table_, m.distance);
    send(m.from, std::move(reply), out);
  }

  void on_whoareyou(const Message& m, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(m.from)];
    Message hs = make(MessageKind::Handshake, m.from, now);
    hs.nonce = m.nonce;
    hs.record = self_;
    send(m.from, std::move(hs), out);
    st.session = true;
    if (st.stashed) {
      Message again = std::move(*st.stashed);
      st.stashed.reset();
      send(m.from, std::move(again), out);
    }
  }

  void on_handshake(const Message& m, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(m.from)];
    if (st.challenge == 0 || m.nonce != st.challenge || !m.record) {
      drop(m, now, "handshake nonce mismatch", out);
      return;
    }
    st.challenge = 0;
    st.session = true;
    insert_sender(*m.record, now, out);
  }

  void on_enr_request(const Message& m, Tick now, Outputs& out) {
    if (protocol_ == Protocol::v5 && !require_session(m, now, out)) return;
    Message reply = make(MessageKind::ENRResponse, m.from, now);
    reply.request_id = m.request_id;
    reply.record = self_;
    send(m.from, std::move(reply), out);
  }

  void on_error(const Message& m, Tick now, Outputs& out) {
    on_records(m, now, out);
  }

  // Neighbors/Nodes replies: unknown records are pinged (and enter the table
  // once they answer); the owning lookup, if any, advances.
  void on_records(const Message& m, Tick now, Outputs& out) {
    auto& st = peers_[PeerKey::of(m.from)];
    if (st.session || fresh(st.last_pong, now)) table_.insert(m.from, now);
    std::size_t n = std::min(m.records.size(), kMaxReplyRecords);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = m.records[i];
      if (!r.valid() || r.public_key == self_.public_key) continue;
      if (table_.contains_anywhere(r.public_key)) continue;
      auto& rs = peers_[PeerKey::of(r)];
      if (rs.outstanding_ping != 0) continue;
      if (rs.last_ping_sent != std::numeric_limits<Tick>::min() &&
          now - rs.last_ping_sent < timings_.revalidate_after) {
        continue;
      }
      send_ping(r, now, out);
    }

    auto it = lookups_.find(m.request_id);
    if (it == lookups_.end() || it->second.done) return;
    auto& lk = it->second;
    auto f = lk.inflight.find(m.from.public_key);
    if (f == lk.inflight.end()) return;
    if (m.kind != MessageKind::ErrorV5) lk.responded.insert(m.from.public_key);
    auto& more = lk.followups[m.from.public_key];
    if (!more.empty()) {
      Message q = make(MessageKind::FindNodeV5, m.from, now);
      q.request_id = lk.id;
      q.distance = more.front();
      more.erase(more.begin());
      send_request(m.from, std::move(q), out);
      arm_query_timer(lk, m.from, now, out);
    } else {
      lk.inflight.erase(f);
      lk.followups.erase(m.from.public_key);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = m.records[i];
      if (!r.valid() || r.public_key == self_.public_key) continue;
      bool known = std::any_of(lk.candidates.begin(), lk.candidates.end(),
                               [&](const NodeRecord& c) { return c.public_key == r.public_key; });
      if (!known) lk.candidates.push_back(r);
    }
    sort_by_distance(lk.candidates, lk.target);
    advance(lk, now, out);
  }

  void send_query(LookupState& lk, const NodeRecord& to, Tick now, Outputs& out) {
    if (protocol_ == Protocol::v4) {
      Message q = make(MessageKind::FindNodeV4, to, now);
      q.request_id = lk.id;
      q.target = lk.target;
      auto& st = peers_[PeerKey::of(to)];
      if (fresh(st.last_ping_received, now)) {
        send(to, std::move(q), out);
      } else {
        // The remote only answers once it has seen our pong; it pings us
        // back because it has not verified us yet.
        st.awaiting_bond.push_back(std::move(q));
        if (st.outstanding_ping == 0) send_ping(to, now, out);
      }
    } else {
      auto distances = v5_lookup_distances(node_id(to.public_key), lk.target);
      Message q = make(MessageKind::FindNodeV5, to, now);
      q.request_id = lk.id;
      q.distance = distances.front();
      lk.followups[to.public_key].assign(distances.begin() + 1, distances.end());
      send_request(to, std::move(q), out);
    }
    arm_query_timer(lk, to, now, out);
  }

  void arm_query_timer(LookupState& lk, const NodeRecord& to, Tick now, Outputs& out) {
    lk.deadline[to.public_key] = now + timings_.query_timeout;
    out.timers.push_back({now + timings_.query_timeout, TimerKind::QueryTimeout, PeerKey::of(to), lk.id});
  }

  void advance(LookupState& lk, Tick now, Outputs& out) {
    std::size_t considered = 0;
    for (const auto& c : lk.candidates) {
      if (considered++ == kMaxReplyRecords) break;
      if (static_cast<int>(lk.inflight.size()) >= timings_.lookup_concurrency) break;
      if (lk.asked.count(c.public_key)) continue;
      lk.asked.insert(c.public_key);
      lk.inflight.emplace(c.public_key, PeerKey::of(c));
      send_query(lk, c, now, out);
    }
    if (!lk.inflight.empty()) return;
    bool unasked = false;
    considered = 0;
    for (const auto& c : lk.candidates) {
      if (considered++ == kMaxReplyRecords) break;
      if (!lk.asked.count(c.public_key)) unasked = true;
    }
    if (!unasked) {
      lk.done = true;
      lk.finished = now;
      last_results_ = lk.result();
    }
  }

  NodeRecord self_;
  NodeId id_;
  Protocol protocol_;
  Timings timings_;
  dht::RoutingTable table_;
  std::mt19937_64 rng_;
  std::map<PeerKey, LivenessState> peers_;
  std::map<std::uint64_t, LookupState> lookups_;
  std::vector<NodeRecord> last_results_;
  std::vector<DroppedRequest> dropped_;
  std::uint64_t next_request_ = 0;
};

}  // namespace keyreuse::discovery
