#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "keyreuse/observation.hpp"

namespace keyreuse::handshaker {

// (protocol version, network id, genesis hash, fork id). Services match only
// when all four are equal.
struct ServiceTuple {
  std::uint32_t protocol_version = 0;
  std::uint64_t network_id = 0;
  Bytes<32> genesis_hash{};
  Bytes<4> fork_id{};

  auto operator<=>(const ServiceTuple&) const = default;
};

inline bool tuples_match(const ServiceTuple& a, const ServiceTuple& b) { return a == b; }

// Either a tuple-identified service (v4 ecosystem) or an agent string (v5).
struct ServiceIdentity {
  std::string label;
  std::optional<ServiceTuple> tuple;
  std::optional<std::string> agent;

  auto operator<=>(const ServiceIdentity&) const = default;

  // "label#forkid" for tuple services, the agent string otherwise.
  std::string census_key() const {
    if (tuple) return label + "#" + to_hex(tuple->fork_id);
    return agent.value_or(label);
  }
};

enum class HandshakeOutcome { identified, refused_limit, refused_tuple, no_agent, unreachable };

inline const char* to_string(HandshakeOutcome o) {
  switch (o) {
    case HandshakeOutcome::identified: return "identified";
    case HandshakeOutcome::refused_limit: return "refused_limit";
    case HandshakeOutcome::refused_tuple: return "refused_tuple";
    case HandshakeOutcome::no_agent: return "no_agent";
    case HandshakeOutcome::unreachable: return "unreachable";
  }
  return "?";
}

inline HandshakeOutcome parse_outcome(std::string_view s) {
  for (auto o : {HandshakeOutcome::identified, HandshakeOutcome::refused_limit,
                 HandshakeOutcome::refused_tuple, HandshakeOutcome::no_agent,
                 HandshakeOutcome::unreachable}) {
    if (s == to_string(o)) return o;
  }
  throw Error("unknown handshake outcome '" + std::string(s) + "'");
}

struct HandshakeRecord {
  PublicKey public_key;
  Ipv4 ip;
  std::uint16_t tcp_port = 0;
  Protocol protocol = Protocol::v4;
  HandshakeOutcome outcome = HandshakeOutcome::unreachable;
  std::optional<ServiceIdentity> identity;  // set iff outcome == identified
  Tick at = 0;

  bool operator==(const HandshakeRecord&) const = default;

  ServiceKey key() const { return {public_key, ip, tcp_port}; }
};

// What a remote exposes at its tcp endpoint.
struct RemoteService {
  std::optional<ServiceTuple> tuple;
  std::optional<std::string> agent;
  int inbound = 0;
  int max_inbound = 34;
};

// Resolves a tcp endpoint to the service behind it; nullopt = unreachable.
class ServiceView {
public:
  virtual ~ServiceView() = default;
  virtual std::optional<RemoteService> service_at(Ipv4 ip, std::uint16_t tcp_port) const = 0;
};

enum class HandshakeStep { tcp_connect, limit_check, rlpx_framing, tuple_exchange, agent_probe };

struct CatalogEntry {
  std::string label;
  ServiceTuple tuple;
};

// Known service tuples the handshaker can speak, with presentation labels.
class ServiceCatalog {
public:
  ServiceCatalog() = default;
  explicit ServiceCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {}

  const std::vector<CatalogEntry>& entries() const { return entries_; }

  std::string label_for(const ServiceTuple& t) const {
    for (const auto& e : entries_)
      if (e.tuple == t) return e.label;
    for (const auto& e : entries_)
      if (e.tuple.network_id == t.network_id) return e.label;
    return "network-" + std::to_string(t.network_id);
  }

  // Tab-separated: label, protocol_version, network_id, genesis hex, fork id hex.
  // Blank lines and '#' comments are skipped.
  static ServiceCatalog parse(std::istream& in) {
    std::vector<CatalogEntry> entries;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, '\t')) f.push_back(field);
      if (f.size() != 5) throw Error("service catalog line " + std::to_string(n) + ": expected 5 fields");
      try {
        CatalogEntry e;
        e.label = f[0];
        e.tuple.protocol_version = static_cast<std::uint32_t>(std::stoul(f[1]));
        e.tuple.network_id = std::stoull(f[2]);
        e.tuple.genesis_hash = fixed_from_hex<32>(f[3]);
        e.tuple.fork_id = fixed_from_hex<4>(f[4]);
        entries.push_back(std::move(e));
      } catch (const std::exception& ex) {
        throw Error("service catalog line " + std::to_string(n) + ": " + ex.what());
      }
    }
    return ServiceCatalog(std::move(entries));
  }

  static ServiceCatalog load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open service catalog " + path);
    return parse(in);
  }

  static ServiceCatalog builtin() {
    auto t = [](std::uint32_t pv, std::uint64_t net, const char* genesis, const char* fork) {
      return ServiceTuple{pv, net, fixed_from_hex<32>(genesis), fixed_from_hex<4>(fork)};
    };
    return ServiceCatalog({
        {"ETH Mainnet", t(68, 1, "d4e56740f876aef8c010b86a40d5f56745a118d0906a34e69aec8c0db1cb8fa3", "9f3d2254")},
        {"BSC", t(68, 56, "0d21840abff46b96c84b2ac9e10e4f5cdaeb5693cb665db62a2f3b02d2d57b5b", "a6e5f4ad")},
        {"Polygon", t(68, 137, "a9c28ce2141b56c474f1dc504bee9b01eb1bd7d1a507580d5519d4437a97de1b", "0aa3d5e1")},
        {"ETH Sepolia", t(68, 11155111, "25a5cc106eea7138acab33231d7160d69cb777ee0c2c553fcddf5138993e6dd9", "88cf81d9")},
    });
  }

private:
  std::vector<CatalogEntry> entries_;
};

struct Attempt {
  HandshakeOutcome outcome = HandshakeOutcome::unreachable;
  std::optional<ServiceIdentity> identity;
};

// Tuple handshake against one remote. The connection-limit check precedes
// the tuple exchange; the encrypted framing step always succeeds.
inline Attempt handshake_v4(const ServiceTuple& local, const std::optional<RemoteService>& remote,
                            const std::string& label = {},
                            std::vector<HandshakeStep>* trace = nullptr) {
  auto step = [&](HandshakeStep s) {
    if (trace) trace->push_back(s);
  };
  step(HandshakeStep::tcp_connect);
  if (!remote) return {HandshakeOutcome::unreachable, std::nullopt};
  step(HandshakeStep::limit_check);
  if (remote->inbound >= remote->max_inbound) return {HandshakeOutcome::refused_limit, std::nullopt};
  step(HandshakeStep::rlpx_framing);
  step(HandshakeStep::tuple_exchange);
  if (!remote->tuple || !tuples_match(local, *remote->tuple)) {
    return {HandshakeOutcome::refused_tuple, std::nullopt};
  }
  return {HandshakeOutcome::identified, ServiceIdentity{label, local, std::nullopt}};
}

inline Attempt probe_v5(const std::optional<RemoteService>& remote,
                        std::vector<HandshakeStep>* trace = nullptr) {
  if (trace) trace->push_back(HandshakeStep::tcp_connect);
  if (!remote) return {HandshakeOutcome::unreachable, std::nullopt};
  if (trace) trace->push_back(HandshakeStep::agent_probe);
  if (!remote->agent || remote->agent->empty()) return {HandshakeOutcome::no_agent, std::nullopt};
  return {HandshakeOutcome::identified, ServiceIdentity{*remote->agent, std::nullopt, *remote->agent}};
}

// Tries every catalog tuple in order until one matches.
inline Attempt identify_v4(const ServiceCatalog& catalog, const std::optional<RemoteService>& remote) {
  Attempt last{remote ? HandshakeOutcome::refused_tuple : HandshakeOutcome::unreachable, std::nullopt};
  for (const auto& e : catalog.entries()) {
    last = handshake_v4(e.tuple, remote, e.label);
    if (last.outcome != HandshakeOutcome::refused_tuple) break;
  }
  return last;
}

// One record per distinct (public key, ip, tcp port) in the snapshot, sorted
// by that key. The seed only permutes the probe schedule (`at` stamps).
inline std::vector<HandshakeRecord> sweep(const Snapshot& snapshot, const ServiceView& view,
                                          const ServiceCatalog& catalog, std::uint64_t seed = 0) {
  std::map<ServiceKey, Protocol> targets;
  for (const auto& o : snapshot.observations) targets.emplace(ServiceKey::of(o), o.protocol);

  std::vector<std::pair<ServiceKey, Protocol>> order(targets.begin(), targets.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  std::vector<HandshakeRecord> out;
  out.reserve(order.size());
  Tick at = snapshot.ended_at;
  for (const auto& [key, protocol] : order) {
    auto remote = view.service_at(key.ip, key.tcp_port);
    Attempt a = protocol == Protocol::v4 ? identify_v4(catalog, remote) : probe_v5(remote);
    out.push_back({key.public_key, key.ip, key.tcp_port, protocol, a.outcome, a.identity, ++at});
  }
  std::sort(out.begin(), out.end(),
            [](const HandshakeRecord& a, const HandshakeRecord& b) { return a.key() < b.key(); });
  return out;
}

struct CensusRow {
  std::string service;  // label#forkid or agent
  std::size_t count = 0;
  double fraction = 0.0;
};

// Distinct public keys per identified service, largest first.
inline std::vector<CensusRow> service_census(const std::vector<HandshakeRecord>& records) {
  std::map<std::string, std::set<PublicKey>> keys;
  for (const auto& r : records) {
    if (r.outcome != HandshakeOutcome::identified || !r.identity) continue;
    keys[r.identity->census_key()].insert(r.public_key);
  }
  std::size_t total = 0;
  for (const auto& [_, s] : keys) total += s.size();
  std::vector<CensusRow> rows;
  for (const auto& [svc, s] : keys) {
    rows.push_back({svc, s.size(), static_cast<double>(s.size()) / static_cast<double>(total)});
  }
  std::sort(rows.begin(), rows.end(), [](const CensusRow& a, const CensusRow& b) {
    return a.count != b.count ? a.count > b.count : a.service < b.service;
  });
  return rows;
}

}  // namespace keyreuse::handshaker
