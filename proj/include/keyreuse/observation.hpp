#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "keyreuse/identity.hpp"

namespace keyreuse {

// One sighting of a node record during a crawl.
struct Observation {
  std::uint64_t snapshot_id = 0;
  PublicKey public_key;
  Ipv4 ip;
  std::uint16_t udp_port = 0;
  std::uint16_t tcp_port = 0;
  Protocol protocol = Protocol::v4;
  Tick seen_at = 0;

  bool operator==(const Observation&) const = default;

  NodeRecord record() const { return {public_key, ip, udp_port, tcp_port, 1}; }
};

struct Snapshot {
  std::uint64_t snapshot_id = 0;
  Tick started_at = 0;
  Tick ended_at = 0;
  std::vector<Observation> observations;

  bool operator==(const Snapshot&) const = default;
};

// (public key, ip, tcp port): the identity of one reachable service endpoint.
struct ServiceKey {
  PublicKey public_key;
  Ipv4 ip;
  std::uint16_t tcp_port = 0;

  auto operator<=>(const ServiceKey&) const = default;

  static ServiceKey of(const Observation& o) { return {o.public_key, o.ip, o.tcp_port}; }
};

}  // namespace keyreuse
