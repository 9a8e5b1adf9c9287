#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "keyreuse/handshaker.hpp"
#include "keyreuse/integrator.hpp"
#include "keyreuse/observation.hpp"
#include "keyreuse/simnet.hpp"

// Versioned flat files. The first line is a header
//   #keyreuse-store format_version=1 kind=<kind> created_at=<tick>
// followed by one tab-separated record per line, every line newline
// terminated. Text fields escape backslash, tab, newline, carriage return,
// '|' (list separator) and ';' (tuple separator).
namespace keyreuse::store {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kMagic = "#keyreuse-store";

enum class Kind { observation, handshake, profile, sim_result, enrichment_fixture };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::observation: return "observation";
    case Kind::handshake: return "handshake";
    case Kind::profile: return "profile";
    case Kind::sim_result: return "sim_result";
    case Kind::enrichment_fixture: return "enrichment_fixture";
  }
  return "?";
}

inline Kind parse_kind(std::string_view s) {
  for (auto k : {Kind::observation, Kind::handshake, Kind::profile, Kind::sim_result, Kind::enrichment_fixture}) {
    if (s == to_string(k)) return k;
  }
  throw Error("unknown record kind '" + std::string(s) + "'");
}

// Field order per kind, for documentation and tooling.
inline std::vector<std::string> schema(Kind k) {
  switch (k) {
    case Kind::observation:
      return {"snapshot_id", "public_key", "ip", "udp_port", "tcp_port", "protocol", "seen_at"};
    case Kind::handshake:
      return {"public_key", "ip", "tcp_port", "protocol", "outcome", "label", "tuple", "agent", "at"};
    case Kind::profile:
      return {"user_id",  "ordinal",   "content_hash", "pubkeys",   "ips",      "endpoints", "services",
              "network_ids", "geo", "providers",  "hostnames", "evidence"};
    case Kind::sim_result:
      return {"meta: protocol ended_at max_inbound log_digest events",
              "node: index public_key ip udp tcp seq active reachable inbound outbound service table",
              "conn: initiator acceptor initiator_key acceptor_key established_at"};
    case Kind::enrichment_fixture:
      return {"geo: prefix/len country region city isp org", "rdns: ip hostname"};
  }
  return {};
}

struct Header {
  int format_version = kFormatVersion;
  Kind kind = Kind::observation;
  Tick created_at = 0;

  bool operator==(const Header&) const = default;
};

// ---------------------------------------------------------------------------
// Field codec
// ---------------------------------------------------------------------------

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '|': out += "\\p"; break;
      case ';': out += "\\s"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw Error("dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 'p': out += '|'; break;
      case 's': out += ';'; break;
      default: throw Error(std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

// Splits on a raw separator; escaped separators never appear raw.
inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

// A list field: empty string is the empty list.
template <typename Range, typename Fn>
std::string join_list(const Range& items, Fn encode) {
  std::string out;
  bool first = true;
  for (const auto& it : items) {
    if (!first) out += '|';
    first = false;
    out += encode(it);
  }
  return out;
}

inline std::vector<std::string_view> list_items(std::string_view s) {
  if (s.empty()) return {};
  return split(s, '|');
}

// Optional text: "-" when absent, "+<escaped>" when present.
inline std::string opt_text(const std::optional<std::string>& v) { return v ? "+" + escape(*v) : "-"; }

inline std::optional<std::string> parse_opt_text(std::string_view s) {
  if (s == "-") return std::nullopt;
  if (s.empty() || s[0] != '+') throw Error("optional field must be '-' or start with '+'");
  return unescape(s.substr(1));
}

template <typename T>
T parse_int(std::string_view s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    throw Error(std::string("invalid ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint16_t parse_port(std::string_view s) {
  auto v = parse_int<unsigned>(s, "port");
  if (v == 0 || v > 65535) throw Error("port out of range '" + std::string(s) + "'");
  return static_cast<std::uint16_t>(v);
}

inline bool parse_bool(std::string_view s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw Error("invalid flag '" + std::string(s) + "'");
}

inline std::string tuple_text(const std::optional<handshaker::ServiceTuple>& t) {
  if (!t) return "-";
  return "+" + std::to_string(t->protocol_version) + ":" + std::to_string(t->network_id) + ":" +
         to_hex(t->genesis_hash) + ":" + to_hex(t->fork_id);
}

inline std::optional<handshaker::ServiceTuple> parse_tuple(std::string_view s) {
  if (s == "-") return std::nullopt;
  if (s.empty() || s[0] != '+') throw Error("tuple field must be '-' or start with '+'");
  auto parts = split(s.substr(1), ':');
  if (parts.size() != 4) throw Error("tuple needs 4 ':'-separated parts");
  handshaker::ServiceTuple t;
  t.protocol_version = parse_int<std::uint32_t>(parts[0], "protocol version");
  t.network_id = parse_int<std::uint64_t>(parts[1], "network id");
  t.genesis_hash = fixed_from_hex<32>(parts[2]);
  t.fork_id = fixed_from_hex<4>(parts[3]);
  return t;
}

// label;tuple;agent
inline std::string identity_text(const handshaker::ServiceIdentity& id) {
  return escape(id.label) + ";" + tuple_text(id.tuple) + ";" + opt_text(id.agent);
}

inline handshaker::ServiceIdentity parse_identity(std::string_view s) {
  auto parts = split(s, ';');
  if (parts.size() != 3) throw Error("service identity needs 3 ';'-separated parts");
  return {unescape(parts[0]), parse_tuple(parts[1]), parse_opt_text(parts[2])};
}

inline std::string opt_identity_text(const std::optional<handshaker::ServiceIdentity>& id) {
  return id ? "+" + identity_text(*id) : "-";
}

inline std::optional<handshaker::ServiceIdentity> parse_opt_identity(std::string_view s) {
  if (s == "-") return std::nullopt;
  if (s.empty() || s[0] != '+') throw Error("identity field must be '-' or start with '+'");
  return parse_identity(s.substr(1));
}

// ---------------------------------------------------------------------------
// File framing
// ---------------------------------------------------------------------------

inline std::string header_line(const Header& h) {
  return std::string(kMagic) + " format_version=" + std::to_string(h.format_version) + " kind=" + to_string(h.kind) +
         " created_at=" + std::to_string(h.created_at);
}

inline Header parse_header(std::string_view line) {
  auto parts = split(line, ' ');
  if (parts.size() != 4 || parts[0] != kMagic) throw Error("line 1: missing store header");
  auto field = [&](std::size_t i, std::string_view key) {
    std::string prefix = std::string(key) + "=";
    if (!parts[i].starts_with(prefix)) throw Error("line 1: expected " + prefix);
    return parts[i].substr(prefix.size());
  };
  Header h;
  try {
    h.format_version = parse_int<int>(field(1, "format_version"), "format version");
  } catch (const Error& e) {
    throw Error(std::string("line 1: ") + e.what());
  }
  if (h.format_version != kFormatVersion) {
    throw Error("format version mismatch: file has " + std::to_string(h.format_version) + ", reader supports " +
                std::to_string(kFormatVersion));
  }
  h.kind = parse_kind(field(2, "kind"));
  try {
    h.created_at = parse_int<Tick>(field(3, "created_at"), "created_at");
  } catch (const Error& e) {
    throw Error(std::string("line 1: ") + e.what());
  }
  return h;
}

struct RawFile {
  Header header;
  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (line number, body)
};

// Validates framing. Every line, the last included, must end in '\n'.
inline RawFile frame(std::string_view text, Kind expected) {
  if (text.empty()) throw Error("line 1: empty file");
  RawFile f;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw Error("line " + std::to_string(line_no) + ": truncated record");
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line_no == 1) {
      f.header = parse_header(line);
      if (f.header.kind != expected) {
        throw Error(std::string("kind mismatch: file holds ") + to_string(f.header.kind) + ", expected " +
                    to_string(expected));
      }
      continue;
    }
    f.lines.emplace_back(line_no, line);
  }
  return f;
}

template <typename Fn>
auto with_line(std::size_t line_no, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error("line " + std::to_string(line_no) + ": malformed record: " + e.what());
  }
}

inline std::vector<std::string_view> fields(std::string_view line, std::size_t n) {
  auto f = split(line, '\t');
  if (f.size() != n) {
    throw Error("expected " + std::to_string(n) + " fields, found " + std::to_string(f.size()));
  }
  return f;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline Header peek_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("line 1: empty file");
  return parse_header(line);
}

// ---------------------------------------------------------------------------
// Per-kind codecs
// ---------------------------------------------------------------------------

inline std::string encode_row(const Observation& o) {
  return std::to_string(o.snapshot_id) + "\t" + o.public_key.hex() + "\t" + o.ip.str() + "\t" +
         std::to_string(o.udp_port) + "\t" + std::to_string(o.tcp_port) + "\t" + to_string(o.protocol) + "\t" +
         std::to_string(o.seen_at);
}

inline Observation decode_observation(std::string_view line) {
  auto f = fields(line, 7);
  Observation o;
  o.snapshot_id = parse_int<std::uint64_t>(f[0], "snapshot id");
  o.public_key = PublicKey::from_hex(f[1]);
  o.ip = Ipv4::parse(f[2]);
  o.udp_port = parse_port(f[3]);
  o.tcp_port = parse_port(f[4]);
  o.protocol = parse_protocol(f[5]);
  o.seen_at = parse_int<Tick>(f[6], "timestamp");
  return o;
}

inline std::string encode_row(const handshaker::HandshakeRecord& r) {
  std::string label = r.identity ? "+" + escape(r.identity->label) : "-";
  std::string tuple = r.identity ? tuple_text(r.identity->tuple) : "-";
  std::string agent = r.identity ? opt_text(r.identity->agent) : "-";
  return r.public_key.hex() + "\t" + r.ip.str() + "\t" + std::to_string(r.tcp_port) + "\t" + to_string(r.protocol) +
         "\t" + handshaker::to_string(r.outcome) + "\t" + label + "\t" + tuple + "\t" + agent + "\t" +
         std::to_string(r.at);
}

inline handshaker::HandshakeRecord decode_handshake(std::string_view line) {
  auto f = fields(line, 9);
  handshaker::HandshakeRecord r;
  r.public_key = PublicKey::from_hex(f[0]);
  r.ip = Ipv4::parse(f[1]);
  r.tcp_port = parse_port(f[2]);
  r.protocol = parse_protocol(f[3]);
  r.outcome = handshaker::parse_outcome(f[4]);
  auto label = parse_opt_text(f[5]);
  if (label) {
    r.identity = handshaker::ServiceIdentity{*label, parse_tuple(f[6]), parse_opt_text(f[7])};
  } else if (f[6] != "-" || f[7] != "-") {
    throw Error("tuple/agent given without a label");
  }
  if ((r.outcome == handshaker::HandshakeOutcome::identified) != r.identity.has_value()) {
    throw Error("identity must be present exactly for identified records");
  }
  r.at = parse_int<Tick>(f[8], "timestamp");
  return r;
}

inline std::string vertex_text(const integrator::Vertex& v) {
  return std::string(integrator::to_string(v.kind)) + ";" + escape(v.value);
}

inline std::string encode_row(const integrator::UserProfile& p) {
  auto text = [](const std::string& s) { return escape(s); };
  std::string row;
  row += escape(p.user_id) + "\t" + std::to_string(p.ordinal) + "\t" + p.content_hash + "\t";
  row += join_list(p.pubkeys, text) + "\t";
  row += join_list(p.ips, text) + "\t";
  row += join_list(p.endpoints, text) + "\t";
  row += join_list(p.services, [](const integrator::ServiceNode& s) {
    return s.ip.str() + ";" + std::to_string(s.tcp_port) + ";" + identity_text(s.identity);
  }) + "\t";
  row += join_list(p.network_ids, [](std::uint64_t n) { return std::to_string(n); }) + "\t";
  row += join_list(p.geo, [](const integrator::GeoTriple& g) {
    return escape(g.country) + ";" + escape(g.region) + ";" + escape(g.city);
  }) + "\t";
  row += join_list(p.providers, [](const integrator::ProviderPair& g) { return escape(g.isp) + ";" + escape(g.org); }) +
         "\t";
  row += join_list(p.hostnames, text) + "\t";
  row += join_list(p.evidence, [](const integrator::Edge& e) { return vertex_text(e.first) + ";" + vertex_text(e.second); });
  return row;
}

inline integrator::UserProfile decode_profile(std::string_view line) {
  auto f = fields(line, 12);
  integrator::UserProfile p;
  p.user_id = unescape(f[0]);
  p.ordinal = parse_int<std::size_t>(f[1], "ordinal");
  p.content_hash = std::string(f[2]);
  auto strings = [](std::string_view s) {
    std::set<std::string> out;
    for (auto it : list_items(s)) out.insert(unescape(it));
    return out;
  };
  p.pubkeys = strings(f[3]);
  p.ips = strings(f[4]);
  p.endpoints = strings(f[5]);
  for (auto it : list_items(f[6])) {
    auto parts = split(it, ';');
    if (parts.size() != 5) throw Error("service node needs 5 parts");
    integrator::ServiceNode s;
    s.ip = Ipv4::parse(parts[0]);
    s.tcp_port = parse_port(parts[1]);
    s.identity = {unescape(parts[2]), parse_tuple(parts[3]), parse_opt_text(parts[4])};
    p.services.insert(std::move(s));
  }
  for (auto it : list_items(f[7])) p.network_ids.insert(parse_int<std::uint64_t>(it, "network id"));
  for (auto it : list_items(f[8])) {
    auto parts = split(it, ';');
    if (parts.size() != 3) throw Error("geo entry needs 3 parts");
    p.geo.insert({unescape(parts[0]), unescape(parts[1]), unescape(parts[2])});
  }
  for (auto it : list_items(f[9])) {
    auto parts = split(it, ';');
    if (parts.size() != 2) throw Error("provider entry needs 2 parts");
    p.providers.insert({unescape(parts[0]), unescape(parts[1])});
  }
  p.hostnames = strings(f[10]);
  for (auto it : list_items(f[11])) {
    auto parts = split(it, ';');
    if (parts.size() != 4) throw Error("evidence edge needs 4 parts");
    p.evidence.push_back({{integrator::parse_vertex_kind(parts[0]), unescape(parts[1])},
                          {integrator::parse_vertex_kind(parts[2]), unescape(parts[3])}});
  }
  return p;
}

inline std::string encode_rows(const integrator::EnrichmentFixture& fx) {
  std::string out;
  for (const auto& g : fx.geo) {
    out += "geo\t" + g.prefix.str() + "/" + std::to_string(g.length) + "\t" + escape(g.country) + "\t" +
           escape(g.region) + "\t" + escape(g.city) + "\t" + escape(g.isp) + "\t" + escape(g.org) + "\n";
  }
  for (const auto& r : fx.rdns) out += "rdns\t" + r.ip.str() + "\t" + escape(r.hostname) + "\n";
  return out;
}

inline void decode_fixture_row(std::string_view line, integrator::EnrichmentFixture& fx) {
  auto f = split(line, '\t');
  if (f.empty()) throw Error("empty record");
  if (f[0] == "geo") {
    f = fields(line, 7);
    auto slash = f[1].find('/');
    if (slash == std::string_view::npos) throw Error("geo prefix needs /length");
    integrator::GeoRow g;
    g.prefix = Ipv4::parse(f[1].substr(0, slash));
    g.length = parse_int<int>(f[1].substr(slash + 1), "prefix length");
    if (g.length < 0 || g.length > 32) throw Error("prefix length out of range");
    g.country = unescape(f[2]);
    g.region = unescape(f[3]);
    g.city = unescape(f[4]);
    g.isp = unescape(f[5]);
    g.org = unescape(f[6]);
    fx.geo.push_back(std::move(g));
  } else if (f[0] == "rdns") {
    f = fields(line, 3);
    fx.rdns.push_back({Ipv4::parse(f[1]), unescape(f[2])});
  } else {
    throw Error("unknown row tag '" + std::string(f[0]) + "'");
  }
}

inline std::string entry_text(const dht::Entry& e) {
  return e.record.public_key.hex() + ";" + e.record.ip.str() + ";" + std::to_string(e.record.udp_port) + ";" +
         std::to_string(e.record.tcp_port) + ";" + std::to_string(e.record.seq) + ";" + std::to_string(e.last_seen);
}

inline dht::Entry parse_entry(std::string_view s) {
  auto p = split(s, ';');
  if (p.size() != 6) throw Error("table entry needs 6 parts");
  dht::Entry e;
  e.record.public_key = PublicKey::from_hex(p[0]);
  e.record.ip = Ipv4::parse(p[1]);
  e.record.udp_port = parse_port(p[2]);
  e.record.tcp_port = parse_port(p[3]);
  e.record.seq = parse_int<std::uint64_t>(p[4], "seq");
  e.last_seen = parse_int<Tick>(p[5], "last_seen");
  e.id = node_id(e.record.public_key);
  return e;
}

inline std::string encode_rows(const simnet::SimResult& r) {
  std::string out = "meta\t" + std::string(to_string(r.protocol)) + "\t" + std::to_string(r.ended_at) + "\t" +
                    std::to_string(r.max_inbound) + "\t" + std::to_string(r.log_digest) + "\t" +
                    std::to_string(r.events_processed) + "\n";
  for (const auto& n : r.nodes) {
    out += "node\t" + std::to_string(n.index) + "\t" + n.record.public_key.hex() + "\t" + n.record.ip.str() + "\t" +
           std::to_string(n.record.udp_port) + "\t" + std::to_string(n.record.tcp_port) + "\t" +
           std::to_string(n.record.seq) + "\t" + (n.active ? "1" : "0") + "\t" + (n.tcp_reachable ? "1" : "0") +
           "\t" + std::to_string(n.inbound) + "\t" + std::to_string(n.outbound) + "\t" +
           opt_identity_text(n.service) + "\t" + join_list(n.table, entry_text) + "\n";
  }
  for (const auto& c : r.connections) {
    out += "conn\t" + std::to_string(c.initiator) + "\t" + std::to_string(c.acceptor) + "\t" +
           c.initiator_key.hex() + "\t" + c.acceptor_key.hex() + "\t" + std::to_string(c.established_at) + "\n";
  }
  return out;
}

inline void decode_sim_row(std::string_view line, simnet::SimResult& r, bool& seen_meta) {
  auto f = split(line, '\t');
  if (f[0] == "meta") {
    if (seen_meta) throw Error("duplicate meta row");
    f = fields(line, 6);
    r.protocol = parse_protocol(f[1]);
    r.ended_at = parse_int<Tick>(f[2], "ended_at");
    r.max_inbound = parse_int<int>(f[3], "max_inbound");
    r.log_digest = parse_int<std::uint64_t>(f[4], "digest");
    r.events_processed = parse_int<std::uint64_t>(f[5], "event count");
    seen_meta = true;
  } else if (f[0] == "node") {
    f = fields(line, 13);
    simnet::NodeSnapshot n;
    n.index = parse_int<std::size_t>(f[1], "index");
    if (n.index != r.nodes.size()) throw Error("node rows must be in index order");
    n.record.public_key = PublicKey::from_hex(f[2]);
    n.record.ip = Ipv4::parse(f[3]);
    n.record.udp_port = parse_port(f[4]);
    n.record.tcp_port = parse_port(f[5]);
    n.record.seq = parse_int<std::uint64_t>(f[6], "seq");
    n.active = parse_bool(f[7]);
    n.tcp_reachable = parse_bool(f[8]);
    n.inbound = parse_int<int>(f[9], "inbound");
    n.outbound = parse_int<int>(f[10], "outbound");
    n.service = parse_opt_identity(f[11]);
    for (auto it : list_items(f[12])) n.table.push_back(parse_entry(it));
    r.nodes.push_back(std::move(n));
  } else if (f[0] == "conn") {
    f = fields(line, 6);
    simnet::PeerConnection c;
    c.initiator = parse_int<std::size_t>(f[1], "initiator");
    c.acceptor = parse_int<std::size_t>(f[2], "acceptor");
    c.initiator_key = PublicKey::from_hex(f[3]);
    c.acceptor_key = PublicKey::from_hex(f[4]);
    c.established_at = parse_int<Tick>(f[5], "established_at");
    r.connections.push_back(c);
  } else {
    throw Error("unknown row tag '" + std::string(f[0]) + "'");
  }
}

// Rebuilds the routing-table graph of a decoded result.
inline simnet::DhtGraph graph_from_tables(const std::vector<simnet::NodeSnapshot>& nodes) {
  std::map<std::pair<Ipv4, std::uint16_t>, std::size_t> by_udp;
  for (const auto& n : nodes) by_udp[{n.record.ip, n.record.udp_port}] = n.index;
  simnet::DhtGraph g;
  g.vertex_count = nodes.size();
  for (const auto& n : nodes)
    for (const auto& e : n.table) {
      auto it = by_udp.find({e.record.ip, e.record.udp_port});
      if (it != by_udp.end()) g.edges.emplace_back(n.index, it->second);
    }
  return g;
}

// ---------------------------------------------------------------------------
// Public API: encode/decode in memory, write/read on disk.
// ---------------------------------------------------------------------------

template <typename Range>
std::string encode_list(Kind kind, const Range& records, Tick created_at) {
  std::string out = header_line({kFormatVersion, kind, created_at}) + "\n";
  for (const auto& r : records) out += encode_row(r) + "\n";
  return out;
}

inline std::string encode(const std::vector<Observation>& v, Tick created_at = 0) {
  return encode_list(Kind::observation, v, created_at);
}
inline std::string encode(const std::vector<handshaker::HandshakeRecord>& v, Tick created_at = 0) {
  return encode_list(Kind::handshake, v, created_at);
}
inline std::string encode(const std::vector<integrator::UserProfile>& v, Tick created_at = 0) {
  return encode_list(Kind::profile, v, created_at);
}
inline std::string encode(const integrator::EnrichmentFixture& fx, Tick created_at = 0) {
  return header_line({kFormatVersion, Kind::enrichment_fixture, created_at}) + "\n" + encode_rows(fx);
}
inline std::string encode(const simnet::SimResult& r, Tick created_at = 0) {
  return header_line({kFormatVersion, Kind::sim_result, created_at}) + "\n" + encode_rows(r);
}

inline std::vector<Observation> decode_observations(std::string_view text) {
  auto f = frame(text, Kind::observation);
  std::vector<Observation> out;
  for (auto [n, line] : f.lines) out.push_back(with_line(n, [&] { return decode_observation(line); }));
  return out;
}

inline std::vector<handshaker::HandshakeRecord> decode_handshakes(std::string_view text) {
  auto f = frame(text, Kind::handshake);
  std::vector<handshaker::HandshakeRecord> out;
  for (auto [n, line] : f.lines) out.push_back(with_line(n, [&] { return decode_handshake(line); }));
  return out;
}

inline std::vector<integrator::UserProfile> decode_profiles(std::string_view text) {
  auto f = frame(text, Kind::profile);
  std::vector<integrator::UserProfile> out;
  for (auto [n, line] : f.lines) out.push_back(with_line(n, [&] { return decode_profile(line); }));
  return out;
}

inline integrator::EnrichmentFixture decode_enrichment(std::string_view text) {
  auto f = frame(text, Kind::enrichment_fixture);
  integrator::EnrichmentFixture fx;
  for (auto [n, line] : f.lines) with_line(n, [&] { decode_fixture_row(line, fx); });
  return fx;
}

inline simnet::SimResult decode_sim_result(std::string_view text) {
  auto f = frame(text, Kind::sim_result);
  simnet::SimResult r;
  bool seen_meta = false;
  for (auto [n, line] : f.lines) with_line(n, [&] { decode_sim_row(line, r, seen_meta); });
  if (!seen_meta) throw Error("sim_result file has no meta row");
  r.graph = graph_from_tables(r.nodes);
  return r;
}

template <typename T>
std::size_t write(const std::filesystem::path& path, const T& records, Tick created_at = 0) {
  write_file(path, encode(records, created_at));
  if constexpr (requires { records.size(); }) {
    return records.size();
  } else if constexpr (requires { records.nodes; }) {
    return records.nodes.size() + records.connections.size() + 1;
  } else {
    return records.geo.size() + records.rdns.size();
  }
}

inline std::vector<Observation> read_observations(const std::filesystem::path& p) {
  return decode_observations(read_file(p));
}
inline std::vector<handshaker::HandshakeRecord> read_handshakes(const std::filesystem::path& p) {
  return decode_handshakes(read_file(p));
}
inline std::vector<integrator::UserProfile> read_profiles(const std::filesystem::path& p) {
  return decode_profiles(read_file(p));
}
inline integrator::EnrichmentFixture read_enrichment(const std::filesystem::path& p) {
  return decode_enrichment(read_file(p));
}
inline simnet::SimResult read_sim_result(const std::filesystem::path& p) { return decode_sim_result(read_file(p)); }

// Groups observations by snapshot id; bounds come from seen_at.
inline std::vector<Snapshot> snapshots_from(const std::vector<Observation>& obs) {
  std::map<std::uint64_t, Snapshot> by_id;
  for (const auto& o : obs) {
    auto [it, fresh] = by_id.try_emplace(o.snapshot_id);
    Snapshot& s = it->second;
    if (fresh) {
      s.snapshot_id = o.snapshot_id;
      s.started_at = s.ended_at = o.seen_at;
    }
    s.started_at = std::min(s.started_at, o.seen_at);
    s.ended_at = std::max(s.ended_at, o.seen_at);
    s.observations.push_back(o);
  }
  std::vector<Snapshot> out;
  for (auto& [_, s] : by_id) out.push_back(std::move(s));
  return out;
}

}  // namespace keyreuse::store
