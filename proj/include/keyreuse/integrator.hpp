#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "keyreuse/handshaker.hpp"
#include "keyreuse/observation.hpp"

namespace keyreuse::integrator {

using handshaker::ServiceIdentity;

enum class VertexKind { pubkey, endpoint, ip, service, country, region, city, isp, org, hostname, network_id };

inline const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::pubkey: return "pubkey";
    case VertexKind::endpoint: return "endpoint";
    case VertexKind::ip: return "ip";
    case VertexKind::service: return "service";
    case VertexKind::country: return "country";
    case VertexKind::region: return "region";
    case VertexKind::city: return "city";
    case VertexKind::isp: return "isp";
    case VertexKind::org: return "org";
    case VertexKind::hostname: return "hostname";
    case VertexKind::network_id: return "network_id";
  }
  return "?";
}

inline VertexKind parse_vertex_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(VertexKind::network_id); ++i) {
    auto k = static_cast<VertexKind>(i);
    if (s == to_string(k)) return k;
  }
  throw Error("unknown vertex kind '" + std::string(s) + "'");
}

// Kinds that tie a key to its hosts. Descriptive attributes (geo, provider,
// hostname) are shared by unrelated users and never merge components.
inline bool is_linkage(VertexKind k) {
  return k == VertexKind::pubkey || k == VertexKind::endpoint || k == VertexKind::ip || k == VertexKind::service;
}

inline std::string canonical(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out(raw.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Vertex {
  VertexKind kind = VertexKind::pubkey;
  std::string value;

  auto operator<=>(const Vertex&) const = default;

  std::string str() const { return std::string(to_string(kind)) + ":" + value; }
};

inline Vertex vertex(VertexKind kind, std::string_view value) { return {kind, canonical(value)}; }

inline std::string endpoint_value(Ipv4 ip, std::uint16_t tcp_port) { return ip.str() + ":" + std::to_string(tcp_port); }

// One service node: a handshake-identified service at (ip, tcp port).
struct ServiceNode {
  Ipv4 ip;
  std::uint16_t tcp_port = 0;
  ServiceIdentity identity;

  auto operator<=>(const ServiceNode&) const = default;

  std::string vertex_value() const { return canonical(endpoint_value(ip, tcp_port) + "/" + identity.census_key()); }
};

using Edge = std::pair<Vertex, Vertex>;

// Undirected simple graph over attribute vertices.
class IdentityGraph {
public:
  std::size_t add_vertex(const Vertex& v) {
    auto [it, fresh] = index_.emplace(v, vertices_.size());
    if (fresh) {
      vertices_.push_back(v);
      adj_.emplace_back();
    }
    return it->second;
  }

  // Ignores self-edges and parallel edges; returns whether an edge was added.
  bool add_edge(const Vertex& a, const Vertex& b) {
    if (a == b) return false;
    std::size_t x = add_vertex(a);
    std::size_t y = add_vertex(b);
    if (!adj_[x].insert(y).second) return false;
    adj_[y].insert(x);
    ++edge_count_;
    return true;
  }

  bool contains(const Vertex& v) const { return index_.count(v) != 0; }
  bool has_edge(const Vertex& a, const Vertex& b) const {
    auto x = index_.find(a), y = index_.find(b);
    return x != index_.end() && y != index_.end() && adj_[x->second].count(y->second);
  }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }

  std::vector<Vertex> neighbors(const Vertex& v) const {
    std::vector<Vertex> out;
    auto it = index_.find(v);
    if (it == index_.end()) return out;
    for (auto j : adj_[it->second]) out.push_back(vertices_[j]);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Vertex> neighbors(const Vertex& v, VertexKind kind) const {
    auto all = neighbors(v);
    std::erase_if(all, [&](const Vertex& n) { return n.kind != kind; });
    return all;
  }

  // Sorted, each pair ordered (smaller, larger).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      for (auto j : adj_[i]) {
        if (vertices_[i] < vertices_[j]) out.emplace_back(vertices_[i], vertices_[j]);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Vertex> sorted_vertices() const {
    std::vector<Vertex> out(vertices_);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Typed description of each service vertex.
  void describe_service(const ServiceNode& s) { services_[vertex(VertexKind::service, s.vertex_value())] = s; }
  const ServiceNode* service_info(const Vertex& v) const {
    auto it = services_.find(v);
    return it == services_.end() ? nullptr : &it->second;
  }

  std::vector<std::string>& errors() { return errors_; }
  const std::vector<std::string>& errors() const { return errors_; }

  // Set semantics: insertion order is irrelevant.
  bool operator==(const IdentityGraph& o) const {
    return sorted_vertices() == o.sorted_vertices() && edges() == o.edges() && services_ == o.services_;
  }

  // Internal index access for traversal.
  std::size_t index_of(const Vertex& v) const { return index_.at(v); }
  const std::set<std::size_t>& adjacent(std::size_t i) const { return adj_[i]; }

private:
  std::vector<Vertex> vertices_;
  std::map<Vertex, std::size_t> index_;
  std::vector<std::set<std::size_t>> adj_;
  std::size_t edge_count_ = 0;
  std::map<Vertex, ServiceNode> services_;
  std::vector<std::string> errors_;
};

// ---------------------------------------------------------------------------
// Enrichment
// ---------------------------------------------------------------------------

class EnrichmentProvider {
public:
  virtual ~EnrichmentProvider() = default;
  virtual std::string name() const = 0;
  // Attributes for one vertex; may throw, which is recorded and skipped.
  virtual std::vector<Vertex> query(const Vertex& attribute) const = 0;
};

struct GeoRow {
  Ipv4 prefix;
  int length = 32;
  std::string country, region, city, isp, org;

  bool operator==(const GeoRow&) const = default;

  bool covers(Ipv4 ip) const {
    if (length == 0) return true;
    std::uint32_t mask = length >= 32 ? 0xffffffffu : ~((std::uint32_t{1} << (32 - length)) - 1);
    return (ip.value & mask) == (prefix.value & mask);
  }
};

struct ReverseDnsRow {
  Ipv4 ip;
  std::string hostname;

  bool operator==(const ReverseDnsRow&) const = default;
};

struct EnrichmentFixture {
  std::vector<GeoRow> geo;
  std::vector<ReverseDnsRow> rdns;

  bool operator==(const EnrichmentFixture&) const = default;
};

// Longest-prefix match over the fixture's geo rows; an ip vertex yields
// country, region, city, isp and org vertices.
class GeoFixtureProvider : public EnrichmentProvider {
public:
  explicit GeoFixtureProvider(std::vector<GeoRow> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) {
      if (r.length < 0 || r.length > 32) throw Error("geo fixture: prefix length out of range");
    }
  }

  std::string name() const override { return "geo-fixture"; }

  std::vector<Vertex> query(const Vertex& v) const override {
    if (v.kind != VertexKind::ip) return {};
    Ipv4 ip = Ipv4::parse(v.value);
    const GeoRow* best = nullptr;
    for (const auto& r : rows_) {
      if (r.covers(ip) && (!best || r.length > best->length)) best = &r;
    }
    if (!best) return {};
    std::vector<Vertex> out;
    auto add = [&](VertexKind k, const std::string& s) {
      if (!canonical(s).empty()) out.push_back(vertex(k, s));
    };
    add(VertexKind::country, best->country);
    add(VertexKind::region, best->region);
    add(VertexKind::city, best->city);
    add(VertexKind::isp, best->isp);
    add(VertexKind::org, best->org);
    return out;
  }

private:
  std::vector<GeoRow> rows_;
};

class ReverseDnsFixtureProvider : public EnrichmentProvider {
public:
  explicit ReverseDnsFixtureProvider(const std::vector<ReverseDnsRow>& rows) {
    for (const auto& r : rows) names_[r.ip].push_back(r.hostname);
  }

  std::string name() const override { return "rdns-fixture"; }

  std::vector<Vertex> query(const Vertex& v) const override {
    if (v.kind != VertexKind::ip) return {};
    auto it = names_.find(Ipv4::parse(v.value));
    if (it == names_.end()) return {};
    std::vector<Vertex> out;
    for (const auto& h : it->second)
      if (!canonical(h).empty()) out.push_back(vertex(VertexKind::hostname, h));
    return out;
  }

private:
  std::map<Ipv4, std::vector<std::string>> names_;
};

inline std::vector<std::unique_ptr<EnrichmentProvider>> fixture_providers(const EnrichmentFixture& f) {
  std::vector<std::unique_ptr<EnrichmentProvider>> out;
  out.push_back(std::make_unique<GeoFixtureProvider>(f.geo));
  out.push_back(std::make_unique<ReverseDnsFixtureProvider>(f.rdns));
  return out;
}

namespace detail {

inline std::vector<const EnrichmentProvider*> by_name(const std::vector<const EnrichmentProvider*>& providers) {
  std::vector<const EnrichmentProvider*> sorted(providers);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EnrichmentProvider* a, const EnrichmentProvider* b) { return a->name() < b->name(); });
  return sorted;
}

inline void attach(IdentityGraph& g, const Vertex& v, const std::vector<const EnrichmentProvider*>& providers) {
  for (const auto* p : providers) {
    try {
      auto infos = p->query(v);
      std::sort(infos.begin(), infos.end());
      for (const auto& info : infos) g.add_edge(v, info);
    } catch (const std::exception& e) {
      std::string msg = p->name() + " failed on " + v.str() + ": " + e.what();
      auto& errs = g.errors();
      if (std::find(errs.begin(), errs.end(), msg) == errs.end()) errs.push_back(msg);
    }
  }
}

}  // namespace detail

inline std::vector<const EnrichmentProvider*> pointers(const std::vector<std::unique_ptr<EnrichmentProvider>>& ps) {
  std::vector<const EnrichmentProvider*> out;
  for (const auto& p : ps) out.push_back(p.get());
  return out;
}

// Queries every ip vertex against every provider (sorted by name).
// Re-running adds nothing new.
inline IdentityGraph enrich(IdentityGraph graph, const std::vector<const EnrichmentProvider*>& providers) {
  auto sorted = detail::by_name(providers);
  std::vector<Vertex> ips;
  for (const auto& v : graph.vertices())
    if (v.kind == VertexKind::ip) ips.push_back(v);
  std::sort(ips.begin(), ips.end());
  for (const auto& v : ips) detail::attach(graph, v, sorted);
  return graph;
}

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

using ServiceDict = std::map<ServiceKey, std::optional<ServiceIdentity>>;

// Identified services by (public key, ip, tcp port); other outcomes map to
// nothing.
inline ServiceDict service_dict(const std::vector<handshaker::HandshakeRecord>& records) {
  ServiceDict out;
  for (const auto& r : records) {
    auto& slot = out[r.key()];
    if (r.outcome == handshaker::HandshakeOutcome::identified && r.identity && !slot) slot = r.identity;
  }
  return out;
}

// Each observation contributes pubkey-endpoint and endpoint-ip; a known
// service adds endpoint-service; provider results hang off the ip vertex.
inline IdentityGraph build_graph(const std::vector<Observation>& node_list, const ServiceDict& node_service_dict,
                                 const std::vector<const EnrichmentProvider*>& outer_sources = {}) {
  IdentityGraph g;
  auto sources = detail::by_name(outer_sources);
  for (const auto& node : node_list) {
    Vertex pk = vertex(VertexKind::pubkey, node.public_key.hex());
    Vertex ep = vertex(VertexKind::endpoint, endpoint_value(node.ip, node.tcp_port));
    Vertex ip = vertex(VertexKind::ip, node.ip.str());
    g.add_vertex(pk);
    g.add_edge(pk, ep);
    g.add_edge(ep, ip);
    auto it = node_service_dict.find(ServiceKey::of(node));
    if (it != node_service_dict.end() && it->second) {
      ServiceNode s{node.ip, node.tcp_port, *it->second};
      Vertex sv = vertex(VertexKind::service, s.vertex_value());
      g.add_edge(ep, sv);
      g.describe_service(s);
    }
    detail::attach(g, ip, sources);
  }
  return g;
}

inline std::vector<Observation> flatten(const std::vector<Snapshot>& snapshots) {
  std::vector<Observation> out;
  for (const auto& s : snapshots) out.insert(out.end(), s.observations.begin(), s.observations.end());
  return out;
}

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

using Component = std::vector<Vertex>;  // sorted

// Breadth-first over the vertices accepted by `keep` (all by default).
// Components are sorted internally and ordered by their first vertex.
template <typename Keep>
std::vector<Component> weakly_connected_components(const IdentityGraph& g, Keep keep) {
  const auto& vs = g.vertices();
  std::vector<char> seen(vs.size(), 0);
  std::vector<Component> out;
  for (std::size_t s = 0; s < vs.size(); ++s) {
    if (seen[s] || !keep(vs[s])) continue;
    Component comp;
    std::deque<std::size_t> q{s};
    seen[s] = 1;
    while (!q.empty()) {
      std::size_t v = q.front();
      q.pop_front();
      comp.push_back(vs[v]);
      for (auto w : g.adjacent(v)) {
        if (!seen[w] && keep(vs[w])) {
          seen[w] = 1;
          q.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Component> weakly_connected_components(const IdentityGraph& g) {
  return weakly_connected_components(g, [](const Vertex&) { return true; });
}

inline std::vector<Component> linkage_components(const IdentityGraph& g) {
  return weakly_connected_components(g, [](const Vertex& v) { return is_linkage(v.kind); });
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

struct GeoTriple {
  std::string country, region, city;
  auto operator<=>(const GeoTriple&) const = default;
};

struct ProviderPair {
  std::string isp, org;
  auto operator<=>(const ProviderPair&) const = default;
};

struct UserProfile {
  std::string user_id;  // "User<ordinal>"
  std::size_t ordinal = 0;
  std::string content_hash;  // sha256 over the sorted pubkey set
  std::set<std::string> pubkeys;
  std::set<std::string> ips;
  std::set<std::string> endpoints;
  std::set<ServiceNode> services;
  std::set<std::uint64_t> network_ids;
  std::set<GeoTriple> geo;
  std::set<ProviderPair> providers;
  std::set<std::string> hostnames;
  std::vector<Edge> evidence;  // sorted; linkage edges then enrichment edges

  bool operator==(const UserProfile&) const = default;

  std::size_t service_count() const { return services.size(); }
  std::size_t ip_count() const { return ips.size(); }
};

inline constexpr std::size_t kReuseThreshold = 2;

// Distinct service vertices a pubkey reaches through its endpoints.
inline std::set<Vertex> services_of(const IdentityGraph& g, const Vertex& pubkey) {
  std::set<Vertex> out;
  for (const auto& ep : g.neighbors(pubkey, VertexKind::endpoint))
    for (const auto& s : g.neighbors(ep, VertexKind::service)) out.insert(s);
  return out;
}

inline std::string component_hash(const std::set<std::string>& pubkeys) {
  std::string joined;
  for (const auto& k : pubkeys) joined += k + "\n";
  return to_hex(sha256(joined));
}

inline UserProfile profile_of(const IdentityGraph& g, const Component& comp) {
  UserProfile p;
  std::set<Vertex> members(comp.begin(), comp.end());
  std::set<Edge> linkage, enrichment;
  for (const auto& v : comp) {
    switch (v.kind) {
      case VertexKind::pubkey: p.pubkeys.insert(v.value); break;
      case VertexKind::endpoint: p.endpoints.insert(v.value); break;
      case VertexKind::ip: p.ips.insert(v.value); break;
      case VertexKind::service:
        if (const auto* s = g.service_info(v)) {
          p.services.insert(*s);
          if (s->identity.tuple) p.network_ids.insert(s->identity.tuple->network_id);
        }
        break;
      default: break;
    }
    for (const auto& n : g.neighbors(v)) {
      if (members.count(n)) {
        linkage.insert(v < n ? Edge{v, n} : Edge{n, v});
      } else if (v.kind == VertexKind::ip && !is_linkage(n.kind)) {
        enrichment.insert(Edge{v, n});
      }
    }
    if (v.kind != VertexKind::ip) continue;
    auto values_or_blank = [&](VertexKind k) {
      auto ns = g.neighbors(v, k);
      std::vector<std::string> vals;
      for (const auto& n : ns) vals.push_back(n.value);
      if (vals.empty()) vals.push_back("");
      return vals;
    };
    if (!g.neighbors(v, VertexKind::country).empty()) {
      for (const auto& c : values_or_blank(VertexKind::country))
        for (const auto& r : values_or_blank(VertexKind::region))
          for (const auto& ci : values_or_blank(VertexKind::city)) p.geo.insert({c, r, ci});
    }
    if (!g.neighbors(v, VertexKind::isp).empty() || !g.neighbors(v, VertexKind::org).empty()) {
      for (const auto& i : values_or_blank(VertexKind::isp))
        for (const auto& o : values_or_blank(VertexKind::org)) p.providers.insert({i, o});
    }
    for (const auto& h : g.neighbors(v, VertexKind::hostname)) p.hostnames.insert(h.value);
  }
  p.evidence.assign(linkage.begin(), linkage.end());
  p.evidence.insert(p.evidence.end(), enrichment.begin(), enrichment.end());
  p.content_hash = component_hash(p.pubkeys);
  return p;
}

// A linkage component is a reuse user iff one of its pubkeys reaches at
// least two distinct service nodes. Users are numbered 1..N in order of
// their content hash.
inline std::vector<UserProfile> detect_reuse(const IdentityGraph& g) {
  std::vector<UserProfile> out;
  for (const auto& comp : linkage_components(g)) {
    bool flagged = false;
    for (const auto& v : comp) {
      if (v.kind == VertexKind::pubkey && services_of(g, v).size() >= kReuseThreshold) {
        flagged = true;
        break;
      }
    }
    if (flagged) out.push_back(profile_of(g, comp));
  }
  std::sort(out.begin(), out.end(),
            [](const UserProfile& a, const UserProfile& b) { return a.content_hash < b.content_hash; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].ordinal = i + 1;
    out[i].user_id = "User" + std::to_string(i + 1);
  }
  return out;
}

inline const UserProfile* find_user(const std::vector<UserProfile>& profiles, std::string_view user_id) {
  for (const auto& p : profiles)
    if (canonical(p.user_id) == canonical(user_id)) return &p;
  return nullptr;
}

// Same structure, every raw value replaced by a salted digest.
inline UserProfile salted(const UserProfile& p, std::string_view salt) {
  auto h = [&](const std::string& v) { return to_hex(sha256(std::string(salt) + "\x1f" + v)); };
  auto hs = [&](const std::set<std::string>& in) {
    std::set<std::string> out;
    for (const auto& v : in) out.insert(h(v));
    return out;
  };
  UserProfile s;
  s.user_id = p.user_id;
  s.ordinal = p.ordinal;
  s.content_hash = h(p.content_hash);
  s.pubkeys = hs(p.pubkeys);
  s.ips = hs(p.ips);
  s.endpoints = hs(p.endpoints);
  for (const auto& sv : p.services) {
    ServiceNode x = sv;
    x.ip = Ipv4{};
    x.tcp_port = 1;
    x.identity.label = h(sv.vertex_value());
    s.services.insert(x);
  }
  s.network_ids = p.network_ids;
  for (const auto& g : p.geo) s.geo.insert({h(g.country), h(g.region), h(g.city)});
  for (const auto& pr : p.providers) s.providers.insert({h(pr.isp), h(pr.org)});
  s.hostnames = hs(p.hostnames);
  for (const auto& [a, b] : p.evidence) s.evidence.push_back({{a.kind, h(a.value)}, {b.kind, h(b.value)}});
  return s;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct UserRow {
  std::string user_id;
  std::size_t ordinal = 0;
  std::size_t pubkeys = 0;
  std::size_t ips = 0;
  std::size_t services = 0;

  bool operator==(const UserRow&) const = default;
};

struct UserStats {
  std::map<std::size_t, std::size_t> services_histogram;  // services per user -> users
  std::map<std::size_t, std::size_t> ip_histogram;        // ips per user -> users
  std::vector<UserRow> rows;                              // by ordinal
  std::size_t total_services = 0;

  std::size_t users() const { return rows.size(); }

  double share_with_services(std::size_t lo, std::size_t hi) const {
    if (rows.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& [k, c] : services_histogram)
      if (k >= lo && k <= hi) n += c;
    return static_cast<double>(n) / static_cast<double>(rows.size());
  }

  std::size_t max_services() const { return services_histogram.empty() ? 0 : services_histogram.rbegin()->first; }
  std::size_t max_ips() const { return ip_histogram.empty() ? 0 : ip_histogram.rbegin()->first; }
  std::size_t users_with_ips(std::size_t n) const {
    auto it = ip_histogram.find(n);
    return it == ip_histogram.end() ? 0 : it->second;
  }
};

inline UserStats user_stats(const std::vector<UserProfile>& profiles) {
  UserStats s;
  for (const auto& p : profiles) {
    ++s.services_histogram[p.service_count()];
    ++s.ip_histogram[p.ip_count()];
    s.total_services += p.service_count();
    s.rows.push_back({p.user_id, p.ordinal, p.pubkeys.size(), p.ip_count(), p.service_count()});
  }
  std::sort(s.rows.begin(), s.rows.end(), [](const UserRow& a, const UserRow& b) {
    return a.ordinal != b.ordinal ? a.ordinal < b.ordinal : a.user_id < b.user_id;
  });
  return s;
}

// ---------------------------------------------------------------------------
// Nonce collisions
// ---------------------------------------------------------------------------

struct CollisionRisk {
  double approx = 0.0;  // 1 - exp(-k(k-1) / 2^(n+1))
  double exact = 0.0;   // 1 - prod_{i<k} (1 - i / 2^n)
};

// Probability that `sessions` uniform draws from a 2^nonce_bits space repeat.
inline CollisionRisk collision_risk(int nonce_bits, long long sessions) {
  if (nonce_bits < 1) throw Error("collision_risk: nonce_bits must be >= 1");
  if (sessions < 0) throw Error("collision_risk: sessions must be >= 0");
  CollisionRisk r;
  const long double k = static_cast<long double>(sessions);
  const long double space = std::ldexp(1.0L, nonce_bits);
  r.approx = static_cast<double>(-std::expm1(-k * (k - 1) / (2 * space)));
  if (k > space) {
    r.exact = 1.0;
  } else if (sessions <= (1LL << 22)) {
    long double log_none = 0;
    for (long long i = 1; i < sessions; ++i) log_none += std::log1p(-static_cast<long double>(i) / space);
    r.exact = static_cast<double>(-std::expm1(log_none));
  } else if (k / space < 1e-3L) {
    // log prod (1 - i/N) = -sum_j S_j / (j N^j) with S_j the power sums of 0..k-1;
    // terms shrink by k/N, so three suffice.
    const long double s1 = k * (k - 1) / 2;
    const long double s2 = (k - 1) * k * (2 * k - 1) / 6;
    const long double s3 = s1 * s1;
    long double log_none = -(s1 / space + s2 / (2 * space * space) + s3 / (3 * space * space * space));
    r.exact = static_cast<double>(-std::expm1(log_none));
  } else {
    long double log_none = std::lgamma(space + 1) - std::lgamma(space - k + 1) - k * std::log(space);
    r.exact = static_cast<double>(-std::expm1(log_none));
  }
  return r;
}

}  // namespace keyreuse::integrator
