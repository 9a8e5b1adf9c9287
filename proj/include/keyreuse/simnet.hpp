#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyreuse/discovery.hpp"
#include "keyreuse/handshaker.hpp"
#include "keyreuse/union_find.hpp"

namespace keyreuse::simnet {

using discovery::Message;
using handshaker::ServiceIdentity;
using handshaker::ServiceTuple;

struct NodeSpec {
  std::optional<KeyPair> key;  // nullopt: use SimConfig::shared_key
  std::optional<ServiceIdentity> service;
  bool tcp_reachable = true;
  Ipv4 ip;
  std::uint16_t udp_port = 30303;
  std::uint16_t tcp_port = 30303;
  Tick start_time = 0;
  std::vector<std::size_t> bootnodes;  // indices into SimConfig::nodes
  bool dials = true;   // opens outbound service connections
  bool churns = false; // periodically replaces one outbound connection
};

struct LatencyModel {
  Tick min = 50;
  Tick max = 50;
};

struct SimConfig {
  std::uint64_t seed = 1;
  Protocol protocol = Protocol::v4;
  std::vector<NodeSpec> nodes;
  KeyPair shared_key = generate_keypair(0x5ea4edULL, 0);
  LatencyModel latency;
  int max_peers = 50;
  int max_outbound = 16;
  int max_inbound = 34;
  Tick duration = 30 * kMinute;
  discovery::Timings timings;
  Tick first_refresh_delay = 1 * kSecond;
  Tick dial_interval = 5 * kSecond;
  Tick churn_interval = 10 * kMinute;
  bool record_log = false;

  void validate() const {
    if (max_inbound < 0 || max_outbound < 0 || max_inbound + max_outbound != max_peers) {
      throw Error("config: max_inbound + max_outbound must equal max_peers");
    }
    if (latency.min < 0 || latency.max < latency.min) throw Error("config: invalid latency range");
    if (duration < 0) throw Error("config: negative duration");
    if (dial_interval <= 0 || churn_interval <= 0 || timings.refresh_interval <= 0) {
      throw Error("config: intervals must be positive");
    }
    std::set<std::pair<Ipv4, std::uint16_t>> udp, tcp;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      std::string where = "config: node " + std::to_string(i);
      if (n.udp_port == 0 || n.tcp_port == 0) throw Error(where + " has a zero port");
      if (n.start_time < 0) throw Error(where + " has a negative start time");
      if (!udp.insert({n.ip, n.udp_port}).second) throw Error(where + " reuses a udp endpoint");
      if (!tcp.insert({n.ip, n.tcp_port}).second) throw Error(where + " reuses a tcp endpoint");
      for (auto b : n.bootnodes) {
        if (b >= nodes.size()) throw Error(where + " names a missing bootnode");
      }
    }
  }

  NodeRecord record_of(std::size_t i) const {
    const auto& n = nodes.at(i);
    return {n.key ? n.key->public_key : shared_key.public_key, n.ip, n.udp_port, n.tcp_port, 1};
  }
};

enum class ConnectOutcome { connected, refused_limit, refused_tuple, unreachable, refused_duplicate };

inline const char* to_string(ConnectOutcome o) {
  switch (o) {
    case ConnectOutcome::connected: return "connected";
    case ConnectOutcome::refused_limit: return "refused_limit";
    case ConnectOutcome::refused_tuple: return "refused_tuple";
    case ConnectOutcome::unreachable: return "unreachable";
    case ConnectOutcome::refused_duplicate: return "refused_duplicate";
  }
  return "?";
}

// A service link: outbound at the initiator, inbound at the acceptor.
struct PeerConnection {
  std::size_t initiator = 0;
  std::size_t acceptor = 0;
  PublicKey initiator_key;
  PublicKey acceptor_key;
  Tick established_at = 0;

  bool operator==(const PeerConnection&) const = default;
};

// Directed a -> b iff b's record sits in a bucket of a's routing table.
struct DhtGraph {
  std::size_t vertex_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  bool operator==(const DhtGraph&) const = default;

  std::vector<std::vector<std::size_t>> weakly_connected_components() const {
    UnionFind uf(vertex_count);
    for (auto [a, b] : edges) uf.unite(a, b);
    return uf.groups();
  }
};

struct NodeSnapshot {
  std::size_t index = 0;
  NodeRecord record;
  std::optional<ServiceIdentity> service;
  bool tcp_reachable = true;
  bool active = false;
  int inbound = 0;
  int outbound = 0;
  std::vector<dht::Entry> table;  // bucket entries, bucket order then LRU order

  bool operator==(const NodeSnapshot&) const = default;
};

struct SimResult {
  Protocol protocol = Protocol::v4;
  Tick ended_at = 0;
  int max_inbound = 34;
  std::vector<NodeSnapshot> nodes;
  std::vector<PeerConnection> connections;
  DhtGraph graph;
  std::vector<std::string> event_log;
  std::uint64_t log_digest = 0;
  std::uint64_t events_processed = 0;
};

// Deterministic discrete-event harness. One global queue ordered by
// (time, insertion counter); handlers never run concurrently.
class Simulation {
public:
  explicit Simulation(SimConfig config) : cfg_(std::move(config)), rng_(cfg_.seed) {
    cfg_.validate();
    const std::size_t n = cfg_.nodes.size();
    nodes_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      nodes_.emplace_back(cfg_.record_of(i), cfg_.protocol, cfg_.timings, mix(cfg_.seed, i));
      const auto& spec = cfg_.nodes[i];
      udp_index_[endpoint_key(spec.ip, spec.udp_port)] = i;
      tcp_index_[endpoint_key(spec.ip, spec.tcp_port)] = i;
      node_rngs_.emplace_back(mix(cfg_.seed ^ 0xd1a1ULL, i));
    }
    active_.assign(n, false);
    out_peers_.assign(n, {});
    in_peers_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      Event e;
      e.kind = EventKind::Start;
      e.node = i;
      schedule(cfg_.nodes[i].start_time, std::move(e));
    }
  }

  const SimConfig& config() const { return cfg_; }
  Tick now() const { return now_; }
  std::size_t size() const { return nodes_.size(); }
  bool active(std::size_t i) const { return active_.at(i); }
  const discovery::Node& node(std::size_t i) const { return nodes_.at(i); }
  int inbound(std::size_t i) const { return static_cast<int>(in_peers_.at(i).size()); }
  int outbound(std::size_t i) const { return static_cast<int>(out_peers_.at(i).size()); }
  const std::vector<PeerConnection>& connections() const { return connections_; }
  const std::vector<std::string>& event_log() const { return log_; }
  std::uint64_t events_processed() const { return processed_; }

  // Processes every event scheduled at or before `t`.
  void run_until(Tick t) {
    while (!queue_.empty() && queue_.top().at <= t) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.at;
      dispatch(e);
    }
    now_ = std::max(now_, t);
  }

  SimResult run() {
    run_until(cfg_.duration);
    return result();
  }

  // Starts a lookup on node `i` at the current time.
  std::uint64_t start_lookup(std::size_t i, const NodeId& target) {
    discovery::Outputs out;
    std::uint64_t id = nodes_.at(i).begin_lookup(target, now_, out);
    apply(i, out);
    return id;
  }

  // Advances time until the lookup finishes or `limit` is reached.
  std::optional<std::vector<NodeRecord>> finish_lookup(std::size_t i, std::uint64_t id, Tick limit) {
    while (true) {
      const auto* lk = nodes_.at(i).lookup(id);
      if (!lk) return std::nullopt;
      if (lk->done) return lk->result();
      if (queue_.empty() || queue_.top().at > limit) return std::nullopt;
      Event e = queue_.top();
      queue_.pop();
      now_ = e.at;
      dispatch(e);
    }
  }

  std::optional<std::size_t> resolve_udp(Ipv4 ip, std::uint16_t port) const {
    auto it = udp_index_.find(endpoint_key(ip, port));
    if (it == udp_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> resolve_tcp(Ipv4 ip, std::uint16_t port) const {
    auto it = tcp_index_.find(endpoint_key(ip, port));
    if (it == tcp_index_.end()) return std::nullopt;
    return it->second;
  }

  bool connected(std::size_t a, std::size_t b) const {
    const auto& o = out_peers_[a];
    const auto& in = in_peers_[a];
    return std::find(o.begin(), o.end(), b) != o.end() || std::find(in.begin(), in.end(), b) != in.end();
  }

  // Service connection attempt from node `from` to the host behind `to`.
  // Connection limits are checked before the tuple handshake.
  ConnectOutcome try_connect(std::size_t from, const NodeRecord& to) {
    auto target = resolve_tcp(to.ip, to.tcp_port);
    ConnectOutcome result;
    if (!target || !active_[*target] || !active_[from] || !cfg_.nodes[*target].tcp_reachable) {
      result = ConnectOutcome::unreachable;
    } else if (*target == from || connected(from, *target)) {
      result = ConnectOutcome::refused_duplicate;
    } else if (outbound(from) >= cfg_.max_outbound) {
      result = ConnectOutcome::refused_limit;
    } else {
      const auto& local = cfg_.nodes[from].service;
      const auto& remote_svc = cfg_.nodes[*target].service;
      handshaker::RemoteService remote;
      remote.inbound = inbound(*target);
      remote.max_inbound = cfg_.max_inbound;
      if (remote_svc) {
        remote.tuple = remote_svc->tuple;
        remote.agent = remote_svc->agent;
      }
      handshaker::HandshakeOutcome hs;
      if (local && local->tuple) {
        hs = handshaker::handshake_v4(*local->tuple, remote).outcome;
      } else if (remote.inbound >= remote.max_inbound) {
        hs = handshaker::HandshakeOutcome::refused_limit;
      } else {
        bool same_agent = local && local->agent && remote.agent && *local->agent == *remote.agent;
        hs = same_agent ? handshaker::HandshakeOutcome::identified : handshaker::HandshakeOutcome::refused_tuple;
      }
      switch (hs) {
        case handshaker::HandshakeOutcome::identified: result = ConnectOutcome::connected; break;
        case handshaker::HandshakeOutcome::refused_limit: result = ConnectOutcome::refused_limit; break;
        case handshaker::HandshakeOutcome::unreachable: result = ConnectOutcome::unreachable; break;
        default: result = ConnectOutcome::refused_tuple; break;
      }
      if (result == ConnectOutcome::connected) {
        out_peers_[from].push_back(*target);
        in_peers_[*target].push_back(from);
        connections_.push_back({from, *target, cfg_.record_of(from).public_key,
                                cfg_.record_of(*target).public_key, now_});
      }
    }
    note(EventKind::Dial, from, target.value_or(SIZE_MAX), static_cast<int>(result),
         [&] { return std::string("connect ") + to_string(result); });
    return result;
  }

  void disconnect(std::size_t initiator, std::size_t acceptor) {
    std::erase(out_peers_[initiator], acceptor);
    std::erase(in_peers_[acceptor], initiator);
    std::erase_if(connections_, [&](const PeerConnection& c) {
      return c.initiator == initiator && c.acceptor == acceptor;
    });
    note(EventKind::Churn, initiator, acceptor, 0, [] { return std::string("disconnect"); });
  }

  DhtGraph dht_graph() const {
    DhtGraph g;
    g.vertex_count = nodes_.size();
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      for (const auto& e : nodes_[a].table().entries()) {
        if (auto b = resolve_udp(e.record.ip, e.record.udp_port)) g.edges.emplace_back(a, *b);
      }
    }
    return g;
  }

  SimResult result() const {
    SimResult r;
    r.protocol = cfg_.protocol;
    r.ended_at = now_;
    r.max_inbound = cfg_.max_inbound;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      NodeSnapshot s;
      s.index = i;
      s.record = cfg_.record_of(i);
      s.service = cfg_.nodes[i].service;
      s.tcp_reachable = cfg_.nodes[i].tcp_reachable;
      s.active = active_[i];
      s.inbound = inbound(i);
      s.outbound = outbound(i);
      s.table = nodes_[i].table().entries();
      r.nodes.push_back(std::move(s));
    }
    r.connections = connections_;
    r.graph = dht_graph();
    r.event_log = log_;
    r.log_digest = digest_;
    r.events_processed = processed_;
    return r;
  }

private:
  enum class EventKind { Start, Deliver, Timer, Refresh, Dial, Churn };

  struct Event {
    Tick at = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Start;
    std::size_t node = 0;
    std::size_t source = 0;
    Message message;
    discovery::Timer timer;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  static std::uint64_t endpoint_key(Ipv4 ip, std::uint16_t port) {
    return (std::uint64_t{ip.value} << 16) | port;
  }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
  }

  void schedule(Tick at, Event e) {
    e.at = at;
    e.seq = next_seq_++;
    queue_.push(std::move(e));
  }

  template <typename Detail>
  void note(EventKind kind, std::size_t node, std::size_t other, int code, Detail detail) {
    for (std::uint64_t v : {static_cast<std::uint64_t>(now_), static_cast<std::uint64_t>(kind),
                            static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(other),
                            static_cast<std::uint64_t>(code)}) {
      digest_ ^= v;
      digest_ *= 0x100000001b3ULL;
    }
    if (cfg_.record_log) {
      log_.push_back(std::to_string(now_) + " " + kind_name(kind) + " node=" + std::to_string(node) +
                     (other == SIZE_MAX ? std::string() : " peer=" + std::to_string(other)) + " " + detail());
    }
  }

  static const char* kind_name(EventKind k) {
    switch (k) {
      case EventKind::Start: return "start";
      case EventKind::Deliver: return "deliver";
      case EventKind::Timer: return "timer";
      case EventKind::Refresh: return "refresh";
      case EventKind::Dial: return "dial";
      case EventKind::Churn: return "churn";
    }
    return "?";
  }

  void dispatch(const Event& e) {
    ++processed_;
    switch (e.kind) {
      case EventKind::Start: on_start(e.node); break;
      case EventKind::Deliver: on_deliver(e); break;
      case EventKind::Timer: {
        note(EventKind::Timer, e.node, SIZE_MAX, static_cast<int>(e.timer.kind), [] { return std::string("timer"); });
        apply(e.node, nodes_[e.node].on_timer(e.timer, now_));
        break;
      }
      case EventKind::Refresh: on_refresh(e.node); break;
      case EventKind::Dial: on_dial(e.node); break;
      case EventKind::Churn: on_churn(e.node); break;
    }
  }

  void on_start(std::size_t i) {
    active_[i] = true;
    std::vector<NodeRecord> boots;
    for (auto b : cfg_.nodes[i].bootnodes) boots.push_back(cfg_.record_of(b));
    note(EventKind::Start, i, SIZE_MAX, 0, [] { return std::string("up"); });
    apply(i, nodes_[i].start(now_, boots));

    Event refresh;
    refresh.kind = EventKind::Refresh;
    refresh.node = i;
    schedule(now_ + cfg_.first_refresh_delay, refresh);
    if (cfg_.nodes[i].dials) {
      Event dial;
      dial.kind = EventKind::Dial;
      dial.node = i;
      schedule(now_ + cfg_.dial_interval, dial);
    }
    if (cfg_.nodes[i].churns) {
      Event churn;
      churn.kind = EventKind::Churn;
      churn.node = i;
      Tick phase = static_cast<Tick>(uniform_below(node_rngs_[i], static_cast<std::uint64_t>(cfg_.churn_interval)));
      schedule(now_ + cfg_.churn_interval + phase, churn);
    }
  }

  void on_deliver(const Event& e) {
    auto& node = nodes_[e.node];
    note(EventKind::Deliver, e.node, e.source, static_cast<int>(e.message.kind),
         [&] { return std::string(discovery::to_string(e.message.kind)) + " from=" + e.message.from.ip.str(); });
    apply(e.node, node.handle(e.message, now_));
  }

  void on_refresh(std::size_t i) {
    note(EventKind::Refresh, i, SIZE_MAX, 0, [] { return std::string("refresh"); });
    auto& node = nodes_[i];
    node.forget_finished_lookups(now_ - cfg_.timings.refresh_interval);
    apply(i, node.refresh(now_));
    Event next;
    next.kind = EventKind::Refresh;
    next.node = i;
    schedule(now_ + cfg_.timings.refresh_interval, next);
  }

  // Bootnodes first, then the routing table and latest lookup results in a
  // seeded random order.
  void dial_round(std::size_t i) {
    if (outbound(i) >= cfg_.max_outbound) return;
    std::vector<NodeRecord> pool;
    for (const auto& e : nodes_[i].table().entries()) pool.push_back(e.record);
    for (const auto& r : nodes_[i].last_lookup_results()) pool.push_back(r);
    auto& rng = node_rngs_[i];
    for (std::size_t k = pool.size(); k > 1; --k) std::swap(pool[k - 1], pool[uniform_below(rng, k)]);

    std::vector<NodeRecord> order;
    for (auto b : cfg_.nodes[i].bootnodes) order.push_back(cfg_.record_of(b));
    order.insert(order.end(), pool.begin(), pool.end());

    std::set<std::size_t> tried;
    for (const auto& r : order) {
      if (outbound(i) >= cfg_.max_outbound) break;
      if (r.public_key == cfg_.record_of(i).public_key) continue;
      auto target = resolve_tcp(r.ip, r.tcp_port);
      if (target && (*target == i || connected(i, *target) || !tried.insert(*target).second)) continue;
      try_connect(i, r);
    }
  }

  void on_dial(std::size_t i) {
    dial_round(i);
    Event next;
    next.kind = EventKind::Dial;
    next.node = i;
    schedule(now_ + cfg_.dial_interval, next);
  }

  void on_churn(std::size_t i) {
    auto& outs = out_peers_[i];
    if (!outs.empty()) {
      std::size_t victim = outs[uniform_below(node_rngs_[i], outs.size())];
      disconnect(i, victim);
      dial_round(i);
    }
    Event next;
    next.kind = EventKind::Churn;
    next.node = i;
    schedule(now_ + cfg_.churn_interval, next);
  }

  Tick latency() {
    if (cfg_.latency.max == cfg_.latency.min) return cfg_.latency.min;
    auto span = static_cast<std::uint64_t>(cfg_.latency.max - cfg_.latency.min + 1);
    return cfg_.latency.min + static_cast<Tick>(uniform_below(rng_, span));
  }

  void apply(std::size_t i, discovery::Outputs out) {
    for (auto& env : out.sends) {
      auto dest = resolve_udp(env.ip, env.udp_port);
      if (!dest || !active_[*dest]) {
        note(EventKind::Deliver, i, dest.value_or(SIZE_MAX), -1,
             [&] { return std::string("lost ") + discovery::to_string(env.message.kind); });
        continue;
      }
      // Per-link FIFO even under variable latency.
      Tick at = now_ + latency();
      Tick& last = link_clock_[(static_cast<std::uint64_t>(i) << 32) | *dest];
      at = std::max(at, last);
      last = at;
      Event e;
      e.kind = EventKind::Deliver;
      e.node = *dest;
      e.source = i;
      e.message = std::move(env.message);
      schedule(at, std::move(e));
    }
    for (const auto& t : out.timers) {
      Event e;
      e.kind = EventKind::Timer;
      e.node = i;
      e.timer = t;
      schedule(t.at, std::move(e));
    }
  }

  SimConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<discovery::Node> nodes_;
  std::vector<std::mt19937_64> node_rngs_;
  std::vector<bool> active_;
  std::vector<std::vector<std::size_t>> out_peers_;
  std::vector<std::vector<std::size_t>> in_peers_;
  std::vector<PeerConnection> connections_;
  std::unordered_map<std::uint64_t, std::size_t> udp_index_;
  std::unordered_map<std::uint64_t, std::size_t> tcp_index_;
  std::unordered_map<std::uint64_t, Tick> link_clock_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  Tick now_ = 0;
  std::vector<std::string> log_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
};

inline SimResult run(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

inline ServiceIdentity scenario_service(const std::string& label, std::uint64_t network_id) {
  ServiceTuple t;
  t.protocol_version = 68;
  t.network_id = network_id;
  t.genesis_hash = sha256("genesis:" + label);
  auto f = sha256("fork:" + label);
  std::copy(f.begin(), f.begin() + 4, t.fork_id.begin());
  return {label, t, std::nullopt};
}

struct Exp1Result {
  Protocol protocol = Protocol::v4;
  std::size_t nodes = 0;
  std::size_t services = 0;
  std::size_t public_keys = 0;
  std::size_t wcc_count = 0;
  std::size_t max_wcc = 0;
};

// n nodes, each running its own service; node 0 is everyone's bootnode.
// With shared_key every node carries the same key pair.
inline SimConfig exp1_config(Protocol protocol, std::size_t n, std::uint64_t seed, bool shared_key = true) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.protocol = protocol;
  cfg.shared_key = generate_keypair(seed, 0xffffffffULL);
  cfg.duration = 15 * kMinute;
  for (std::size_t i = 0; i < n; ++i) {
    NodeSpec s;
    if (!shared_key) s.key = generate_keypair(seed, i);
    s.service = scenario_service("exp1-service-" + std::to_string(i), 5000 + i);
    s.ip = Ipv4::from_octets(10, 2, static_cast<std::uint8_t>(i / 2 / 256), static_cast<std::uint8_t>(i / 2 % 256));
    s.udp_port = static_cast<std::uint16_t>(30303 + i % 2);
    s.tcp_port = s.udp_port;
    s.start_time = static_cast<Tick>(i) * 100;
    if (i != 0) s.bootnodes = {0};
    cfg.nodes.push_back(std::move(s));
  }
  return cfg;
}

inline Exp1Result summarize_exp1(const SimResult& r, std::size_t services, std::size_t keys) {
  Exp1Result out;
  out.protocol = r.protocol;
  out.nodes = r.nodes.size();
  out.services = services;
  out.public_keys = keys;
  auto comps = r.graph.weakly_connected_components();
  out.wcc_count = comps.size();
  for (const auto& c : comps) out.max_wcc = std::max(out.max_wcc, c.size());
  return out;
}

inline Exp1Result scenario_exp1(Protocol protocol, std::size_t n, std::uint64_t seed, bool shared_key = true) {
  auto cfg = exp1_config(protocol, n, seed, shared_key);
  std::set<PublicKey> keys;
  for (std::size_t i = 0; i < n; ++i) keys.insert(cfg.record_of(i).public_key);
  return summarize_exp1(run(cfg), n, keys.size());
}

struct ConnectionCounts {
  int inbound = 0;
  int outbound = 0;

  bool operator==(const ConnectionCounts&) const = default;
};

struct Exp2Result {
  Protocol protocol = Protocol::v4;
  ConnectionCounts node1;
  ConnectionCounts node2;
};

struct Exp2Layout {
  static constexpr std::size_t kBackground = 200;
  static constexpr std::size_t kNode1 = 0;
  static constexpr std::size_t kNode2 = kBackground + 1;
  static constexpr std::size_t kFirstServiceB = 2;  // background node 1 runs service B
};

// Node 1 (service A) comes up at t0 and is the bootnode every background
// node starts from. 200 background nodes (100 per service, unique keys,
// alternating A/B) join one per second. Node 2 (service B, Node 1's key
// unless shared_key is false) joins at t0+60min, bootstrapping from Node 1
// and the first service-B node. Counts are read at t0+90min.
inline SimConfig exp2_config(std::uint64_t seed, Protocol protocol = Protocol::v4, bool shared_key = true) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.protocol = protocol;
  cfg.duration = 90 * kMinute;
  const auto svc_a = scenario_service("Service A", 7001);
  const auto svc_b = scenario_service("Service B", 7002);
  const KeyPair user_key = generate_keypair(seed, 0xabcdef);

  NodeSpec node1;
  node1.key = user_key;
  node1.service = svc_a;
  node1.ip = Ipv4::from_octets(10, 0, 0, 1);
  cfg.nodes.push_back(node1);

  for (std::size_t j = 0; j < Exp2Layout::kBackground; ++j) {
    NodeSpec s;
    s.key = generate_keypair(seed, j);
    s.service = j % 2 == 0 ? svc_a : svc_b;
    // Two hosts per /24.
    s.ip = Ipv4::from_octets(10, 1, static_cast<std::uint8_t>(j / 2), static_cast<std::uint8_t>(1 + j % 2));
    s.start_time = static_cast<Tick>(j + 1) * kSecond;
    s.bootnodes = {Exp2Layout::kNode1};
    s.churns = true;
    cfg.nodes.push_back(std::move(s));
  }

  NodeSpec node2;
  node2.key = shared_key ? user_key : generate_keypair(seed, 0xabcdf0);
  node2.service = svc_b;
  node2.ip = Ipv4::from_octets(10, 0, 1, 1);
  node2.start_time = 60 * kMinute;
  node2.bootnodes = {Exp2Layout::kNode1, Exp2Layout::kFirstServiceB};
  cfg.nodes.push_back(node2);
  return cfg;
}

inline Exp2Result scenario_exp2(std::uint64_t seed, Protocol protocol = Protocol::v4, bool shared_key = true) {
  Simulation sim(exp2_config(seed, protocol, shared_key));
  sim.run_until(sim.config().duration);
  Exp2Result r;
  r.protocol = protocol;
  r.node1 = {sim.inbound(Exp2Layout::kNode1), sim.outbound(Exp2Layout::kNode1)};
  r.node2 = {sim.inbound(Exp2Layout::kNode2), sim.outbound(Exp2Layout::kNode2)};
  return r;
}

}  // namespace keyreuse::simnet
