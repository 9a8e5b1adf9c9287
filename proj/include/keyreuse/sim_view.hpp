#pragma once

#include <map>
#include <optional>
#include <vector>

#include "keyreuse/crawler.hpp"
#include "keyreuse/handshaker.hpp"
#include "keyreuse/simnet.hpp"

namespace keyreuse::simnet {

// Read-only network handle over a finished simulation: answers FindNode
// from the captured routing tables and handshakes from the node services.
class SimNetworkView : public crawler::DiscoveryView, public handshaker::ServiceView {
public:
  explicit SimNetworkView(const SimResult& result) : protocol_(result.protocol), max_inbound_(result.max_inbound) {
    for (const auto& n : result.nodes) {
      Host h{n, dht::RoutingTable(n.record.public_key)};
      for (const auto& e : n.table) h.table.restore_entry(e);
      std::size_t i = hosts_.size();
      hosts_.push_back(std::move(h));
      by_udp_[{n.record.ip, n.record.udp_port}] = i;
      by_tcp_[{n.record.ip, n.record.tcp_port}] = i;
    }
  }

  Protocol protocol() const { return protocol_; }

  // Every active node, in index order.
  std::vector<NodeRecord> active_records() const {
    std::vector<NodeRecord> out;
    for (const auto& h : hosts_)
      if (h.snapshot.active) out.push_back(h.snapshot.record);
    return out;
  }

  // Ground truth: the keys held in the buckets of the node at `record`'s
  // discovery endpoint. Empty when nothing lives there.
  std::vector<NodeRecord> table_of(const NodeRecord& record) const {
    const Host* h = at_udp(record);
    if (!h) return {};
    std::vector<NodeRecord> out;
    for (const auto& e : h->snapshot.table) out.push_back(e.record);
    return out;
  }

  std::optional<std::vector<NodeRecord>> find_node_v4(const NodeRecord& to, const NodeId& target) const override {
    const Host* h = at_udp(to);
    if (!h || protocol_ != Protocol::v4) return std::nullopt;
    return discovery::neighbors_v4(h->table, target);
  }

  std::optional<std::vector<NodeRecord>> find_node_v5(const NodeRecord& to, int distance) const override {
    const Host* h = at_udp(to);
    if (!h || protocol_ != Protocol::v5) return std::nullopt;
    return discovery::nodes_v5(h->table, distance);
  }

  std::optional<handshaker::RemoteService> service_at(Ipv4 ip, std::uint16_t tcp_port) const override {
    auto it = by_tcp_.find({ip, tcp_port});
    if (it == by_tcp_.end()) return std::nullopt;
    const auto& s = hosts_[it->second].snapshot;
    if (!s.active || !s.tcp_reachable) return std::nullopt;
    handshaker::RemoteService r;
    r.inbound = s.inbound;
    r.max_inbound = max_inbound_;
    if (s.service) {
      r.tuple = s.service->tuple;
      r.agent = s.service->agent;
    }
    return r;
  }

private:
  struct Host {
    NodeSnapshot snapshot;
    dht::RoutingTable table;
  };

  // The responder must be live and hold the key it is addressed by.
  const Host* at_udp(const NodeRecord& r) const {
    auto it = by_udp_.find({r.ip, r.udp_port});
    if (it == by_udp_.end()) return nullptr;
    const Host& h = hosts_[it->second];
    if (!h.snapshot.active || h.snapshot.record.public_key != r.public_key) return nullptr;
    return &h;
  }

  Protocol protocol_;
  int max_inbound_;
  std::vector<Host> hosts_;
  std::map<std::pair<Ipv4, std::uint16_t>, std::size_t> by_udp_;
  std::map<std::pair<Ipv4, std::uint16_t>, std::size_t> by_tcp_;
};

// Unique-key network bootstrapped from node 0, left to settle. Every node
// runs one service; a third of them also carry a v5 agent string.
inline SimConfig converged_config(Protocol protocol, std::size_t n, std::uint64_t seed,
                                  Tick duration = 30 * kMinute) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.protocol = protocol;
  cfg.duration = duration;
  const auto service = scenario_service("Service A", 7001);
  for (std::size_t i = 0; i < n; ++i) {
    NodeSpec s;
    s.key = generate_keypair(seed, i);
    s.service = service;
    if (i % 3 == 0) s.service->agent = "agent-" + std::to_string(i % 4);
    s.ip = Ipv4::from_octets(10, 3, static_cast<std::uint8_t>(i / 250), static_cast<std::uint8_t>(1 + i % 250));
    s.start_time = static_cast<Tick>(i) * 200;
    if (i != 0) s.bootnodes = {0};
    s.dials = false;
    cfg.nodes.push_back(std::move(s));
  }
  return cfg;
}

}  // namespace keyreuse::simnet
