#pragma once

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "keyreuse/handshaker.hpp"
#include "keyreuse/integrator.hpp"
#include "keyreuse/observation.hpp"

// Synthetic corpora with known ground truth for the integration pipeline.
namespace keyreuse::fixtures {

struct Corpus {
  std::vector<Snapshot> snapshots;
  std::vector<handshaker::HandshakeRecord> handshakes;
  integrator::EnrichmentFixture enrichment;
};

// One user's layout: services spread round-robin across ips.
struct UserLayout {
  std::size_t services = 0;
  std::size_t ips = 0;
};

// 83 reusing users over 485 service nodes. Services per user:
//   3 x25, 4 x20, 5 x16, 2 x6,
//   6 6 7 7 8 8 9 10 11 12 14 16 18 26, 39, 41.
// 62 users sit on a single ip; the rest use 2..12.
inline std::vector<UserLayout> headline_layout() {
  std::vector<UserLayout> out;
  auto add = [&](std::size_t services, std::size_t ips) { out.push_back({services, ips}); };
  // 3..5 service class: 61 users, 6 of them on two ips.
  for (int i = 0; i < 25; ++i) add(3, i < 2 ? 2 : 1);
  for (int i = 0; i < 20; ++i) add(4, i < 2 ? 2 : 1);
  for (int i = 0; i < 16; ++i) add(5, i < 2 ? 2 : 1);
  for (int i = 0; i < 6; ++i) add(2, 1);
  const std::size_t mid_services[] = {6, 6, 7, 7, 8, 8, 9, 10, 11, 12, 14, 16, 18, 26};
  const std::size_t mid_ips[] = {1, 2, 3, 2, 4, 3, 2, 5, 3, 4, 5, 4, 3, 10};
  for (std::size_t i = 0; i < 14; ++i) add(mid_services[i], mid_ips[i]);
  add(39, 12);
  add(41, 12);
  return out;
}

namespace detail {

inline handshaker::ServiceIdentity catalog_identity(const handshaker::ServiceCatalog& cat, std::size_t i) {
  const auto& e = cat.entries()[i % cat.entries().size()];
  return {e.label, e.tuple, std::nullopt};
}

inline handshaker::ServiceIdentity agent_identity(std::size_t i) {
  static const char* agents[] = {"Lighthouse", "Teku", "Prysm", "Nimbus"};
  std::string a = agents[i % 4];
  return {a, std::nullopt, a};
}

struct Builder {
  std::uint64_t seed;
  std::size_t snapshots;
  std::mt19937_64 rng;
  Corpus corpus;

  Builder(std::uint64_t s, std::size_t n) : seed(s), snapshots(n), rng(s) {
    for (std::size_t i = 0; i < n; ++i) {
      Snapshot snap;
      snap.snapshot_id = i + 1;
      snap.started_at = static_cast<Tick>(i) * 30 * kMinute;
      snap.ended_at = snap.started_at + 20 * kMinute;
      corpus.snapshots.push_back(std::move(snap));
    }
  }

  // Sightings in 1..3 snapshots, so the corpus carries duplicates.
  void sight(const PublicKey& pk, Ipv4 ip, std::uint16_t port, Protocol protocol) {
    std::size_t times = 1 + rng() % 3;
    std::size_t first = rng() % snapshots;
    for (std::size_t t = 0; t < times; ++t) {
      auto& snap = corpus.snapshots[(first + t * 7) % snapshots];
      Tick at = snap.started_at + static_cast<Tick>(rng() % (20 * kMinute));
      Observation o{snap.snapshot_id, pk, ip, port, port, protocol, at};
      bool dup = std::any_of(snap.observations.begin(), snap.observations.end(),
                             [&](const Observation& x) { return x == o; });
      if (!dup) snap.observations.push_back(o);
    }
  }

  void handshake(const PublicKey& pk, Ipv4 ip, std::uint16_t port, Protocol protocol,
                 handshaker::HandshakeOutcome outcome, std::optional<handshaker::ServiceIdentity> id, Tick at) {
    corpus.handshakes.push_back({pk, ip, port, protocol, outcome, std::move(id), at});
  }
};

}  // namespace detail

// Reusing users sit in 100.64.<u>.0/24 (one /24 per user); background nodes
// with one key and one service each sit in 198.18.0.0/16; three NAT'd keys
// share 203.0.113.7.
inline Corpus headline_corpus(std::uint64_t seed = 1) {
  const auto catalog = handshaker::ServiceCatalog::builtin();
  const auto layout = headline_layout();
  detail::Builder b(seed, 10);

  for (std::size_t u = 0; u < layout.size(); ++u) {
    const PublicKey pk = generate_keypair(seed, 100000 + u).public_key;
    const auto& L = layout[u];
    for (std::size_t s = 0; s < L.services; ++s) {
      std::size_t host = s % L.ips;
      Ipv4 ip = Ipv4::from_octets(100, static_cast<std::uint8_t>(64 + u / 200), static_cast<std::uint8_t>(u % 200),
                                  static_cast<std::uint8_t>(1 + host));
      auto port = static_cast<std::uint16_t>(30303 + s / L.ips);
      bool v5 = (u + s) % 5 == 4;
      b.sight(pk, ip, port, v5 ? Protocol::v5 : Protocol::v4);
      auto id = v5 ? detail::agent_identity(u + s) : detail::catalog_identity(catalog, u + s);
      b.handshake(pk, ip, port, v5 ? Protocol::v5 : Protocol::v4, handshaker::HandshakeOutcome::identified, id,
                  static_cast<Tick>(u * 100 + s));
    }
    b.corpus.enrichment.geo.push_back({Ipv4::from_octets(100, static_cast<std::uint8_t>(64 + u / 200),
                                                         static_cast<std::uint8_t>(u % 200), 0),
                                       24, "Country " + std::to_string(u % 7), "Region " + std::to_string(u % 11),
                                       "City " + std::to_string(u % 13), "Provider " + std::to_string(u % 5),
                                       "Org " + std::to_string(u % 9)});
  }

  // Background: single-service keys, some unreachable, some with no agent.
  for (std::size_t j = 0; j < 300; ++j) {
    const PublicKey pk = generate_keypair(seed, 200000 + j).public_key;
    Ipv4 ip = Ipv4::from_octets(198, 18, static_cast<std::uint8_t>(j / 250), static_cast<std::uint8_t>(1 + j % 250));
    bool v5 = j % 4 == 3;
    b.sight(pk, ip, 30303, v5 ? Protocol::v5 : Protocol::v4);
    using O = handshaker::HandshakeOutcome;
    if (j % 10 == 0) {
      b.handshake(pk, ip, 30303, v5 ? Protocol::v5 : Protocol::v4, O::unreachable, std::nullopt, 0);
    } else if (v5 && j % 8 == 7) {
      b.handshake(pk, ip, 30303, Protocol::v5, O::no_agent, std::nullopt, 0);
    } else {
      auto id = v5 ? detail::agent_identity(j) : detail::catalog_identity(catalog, j);
      b.handshake(pk, ip, 30303, v5 ? Protocol::v5 : Protocol::v4, O::identified, id, 0);
    }
  }
  b.corpus.enrichment.geo.push_back({Ipv4::from_octets(198, 18, 0, 0), 15, "Country Z", "Region Z", "City Z",
                                     "Cloud Z", "Cloud Z"});

  for (std::size_t k = 0; k < 3; ++k) {
    const PublicKey pk = generate_keypair(seed, 300000 + k).public_key;
    Ipv4 ip = Ipv4::from_octets(203, 0, 113, 7);
    auto port = static_cast<std::uint16_t>(30303 + k);
    b.sight(pk, ip, port, Protocol::v4);
    b.handshake(pk, ip, port, Protocol::v4, handshaker::HandshakeOutcome::identified,
                detail::catalog_identity(catalog, k), 0);
  }
  return b.corpus;
}

// A single user running four services on two hosts in one city, plus
// unrelated background nodes elsewhere.
inline Corpus profile_corpus(std::uint64_t seed = 27) {
  const auto catalog = handshaker::ServiceCatalog::builtin();
  detail::Builder b(seed, 3);
  const PublicKey user = generate_keypair(seed, 27).public_key;
  const Ipv4 ip_a = Ipv4::parse("192.0.2.10");
  const Ipv4 ip_b = Ipv4::parse("192.0.2.11");
  struct Svc {
    Ipv4 ip;
    std::uint16_t port;
    std::size_t catalog_index;
  };
  const Svc svcs[] = {{ip_a, 30303, 0}, {ip_a, 30304, 1}, {ip_b, 30303, 2}, {ip_b, 30305, 3}};
  for (const auto& s : svcs) {
    b.sight(user, s.ip, s.port, Protocol::v4);
    b.handshake(user, s.ip, s.port, Protocol::v4, handshaker::HandshakeOutcome::identified,
                detail::catalog_identity(catalog, s.catalog_index), 0);
  }
  for (std::size_t j = 0; j < 12; ++j) {
    const PublicKey pk = generate_keypair(seed, 1000 + j).public_key;
    Ipv4 ip = Ipv4::from_octets(198, 51, 100, static_cast<std::uint8_t>(1 + j));
    b.sight(pk, ip, 30303, Protocol::v4);
    b.handshake(pk, ip, 30303, Protocol::v4, handshaker::HandshakeOutcome::identified,
                detail::catalog_identity(catalog, j), 0);
  }
  auto& fx = b.corpus.enrichment;
  fx.geo.push_back({Ipv4::parse("192.0.2.0"), 24, "Country A", "Region B", "City C", "Company D", "Company D"});
  fx.geo.push_back({Ipv4::parse("198.51.100.0"), 24, "Country E", "Region F", "City G", "Company H", "Company H"});
  fx.rdns.push_back({ip_a, "node-a.example.net"});
  fx.rdns.push_back({ip_b, "node-b.example.net"});
  return b.corpus;
}

}  // namespace keyreuse::fixtures
