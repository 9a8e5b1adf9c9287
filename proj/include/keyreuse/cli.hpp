#pragma once

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keyreuse/crawler.hpp"
#include "keyreuse/fixtures.hpp"
#include "keyreuse/handshaker.hpp"
#include "keyreuse/integrator.hpp"
#include "keyreuse/sim_view.hpp"
#include "keyreuse/simnet.hpp"
#include "keyreuse/store.hpp"

namespace keyreuse::cli {

inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

inline const char* kProfilesFile = "profiles.tsv";
inline const char* kSaltedProfilesFile = "profiles.salted.tsv";

enum class Format { table, records };

// Aligned text table; `records` emits one "name key=value ..." line per row
// with the same values.
class Table {
public:
  Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

  void print(std::ostream& os, Format f) const {
    if (f == Format::records) {
      for (const auto& r : rows_) {
        os << name_;
        for (std::size_t i = 0; i < columns_.size(); ++i) os << ' ' << columns_[i] << '=' << r[i];
        os << '\n';
      }
      return;
    }
    std::vector<std::size_t> w(columns_.size());
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      w[i] = columns_[i].size();
      for (const auto& r : rows_) w[i] = std::max(w[i], r[i].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i + 1 == cells.size()) {
          os << cells[i];
        } else {
          os << std::left << std::setw(static_cast<int>(w[i])) << cells[i] << "  ";
        }
      }
      os << '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
  }

private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string percent(double fraction) { return fixed(100.0 * fraction, 2) + "%"; }

struct Options {
  std::uint64_t seed = kDefaultSeed;
  std::string format = "table";
  std::string protocol = "v4";
  std::size_t nodes = 10;
  bool unique_keys = false;
  int minutes = 30;
  std::string state, out, snapshot, catalog, enrich, profiles_dir, user, salt;
  std::vector<std::string> snapshots, handshakes;
  long long queries = 40;
  std::uint64_t snapshot_id = 1;
  std::size_t bootstrap = 0;

  Format fmt() const { return format == "records" ? Format::records : Format::table; }
};

inline void add_common(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Random seed (default 1)");
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"table", "records"}));
}

inline void add_protocol(CLI::App* app, Options& o) {
  app->add_option("--protocol", o.protocol, "Discovery protocol")->check(CLI::IsMember({"v4", "v5"}));
}

inline int cmd_exp1(const Options& o, std::ostream& out) {
  if (o.nodes == 0) throw Error("--nodes must be at least 1");
  auto r = simnet::scenario_exp1(parse_protocol(o.protocol), o.nodes, o.seed, !o.unique_keys);
  Table t("exp1", {"protocol", "nodes", "services", "public_keys", "wcc_count", "max_wcc"});
  t.row({to_string(r.protocol), std::to_string(r.nodes), std::to_string(r.services), std::to_string(r.public_keys),
         std::to_string(r.wcc_count), std::to_string(r.max_wcc)});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_exp2(const Options& o, std::ostream& out) {
  auto r = simnet::scenario_exp2(o.seed, parse_protocol(o.protocol), !o.unique_keys);
  Table t("exp2", {"node", "inbound", "outbound"});
  t.row({"node1", std::to_string(r.node1.inbound), std::to_string(r.node1.outbound)});
  t.row({"node2", std::to_string(r.node2.inbound), std::to_string(r.node2.outbound)});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_converge(const Options& o, std::ostream& out) {
  if (o.nodes == 0) throw Error("--nodes must be at least 1");
  if (o.minutes < 0) throw Error("--minutes must be non-negative");
  auto cfg = simnet::converged_config(parse_protocol(o.protocol), o.nodes, o.seed, o.minutes * kMinute);
  auto r = simnet::run(cfg);
  std::size_t n = store::write(o.out, r, r.ended_at);
  std::size_t entries = 0;
  for (const auto& s : r.nodes) entries += s.table.size();
  Table t("converge", {"protocol", "nodes", "minutes", "mean_table", "rows", "out"});
  t.row({o.protocol, std::to_string(o.nodes), std::to_string(o.minutes),
         fixed(static_cast<double>(entries) / static_cast<double>(r.nodes.size()), 2), std::to_string(n), o.out});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_crawl(const Options& o, std::ostream& out) {
  auto state = store::read_sim_result(o.state);
  auto protocol = parse_protocol(o.protocol);
  if (state.protocol != protocol) {
    throw Error("state holds a " + std::string(to_string(state.protocol)) + " network, cannot crawl it with " +
                o.protocol);
  }
  if (state.nodes.empty()) throw Error("state holds no nodes");
  if (o.bootstrap >= state.nodes.size()) throw Error("--bootstrap index out of range");
  if (o.queries < 0) throw Error("--queries must be non-negative");
  simnet::SimNetworkView view(state);
  crawler::CrawlOptions opt;
  opt.snapshot_id = o.snapshot_id;
  opt.started_at = state.ended_at;
  std::vector<NodeRecord> boot{state.nodes[o.bootstrap].record};
  auto res = protocol == Protocol::v4 ? crawler::crawl_v4(view, boot, static_cast<int>(o.queries), o.seed, opt)
                                      : crawler::crawl_v5(view, boot, o.seed, opt);
  store::write(o.out, res.snapshot.observations, res.snapshot.ended_at);

  double sum = 0;
  std::size_t counted = 0;
  for (const auto& n : state.nodes) {
    if (n.table.empty()) continue;
    auto it = res.recovered.find(discovery::PeerKey::of(n.record));
    if (it == res.recovered.end()) continue;
    std::size_t hit = 0;
    for (const auto& e : n.table) hit += it->second.count(e.record.public_key);
    sum += static_cast<double>(hit) / static_cast<double>(n.table.size());
    ++counted;
  }
  Table t("crawl", {"protocol", "nodes_queried", "observations", "mean_recovered_fraction", "formula_fraction", "out"});
  t.row({o.protocol, std::to_string(res.queries_sent.size()), std::to_string(res.snapshot.observations.size()),
         counted ? fixed(sum / static_cast<double>(counted), 4) : "n/a",
         protocol == Protocol::v4 ? fixed(crawler::expected_fraction(o.queries), 4) : "1.0000", o.out});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_handshake(const Options& o, std::ostream& out) {
  auto obs = store::read_observations(o.snapshot);
  auto state = store::read_sim_result(o.state);
  auto catalog = o.catalog.empty() ? handshaker::ServiceCatalog::builtin() : handshaker::ServiceCatalog::load(o.catalog);
  // Services present in the simulated network speak tuples the catalog may
  // not know; add them so they can be identified.
  std::vector<handshaker::CatalogEntry> entries = catalog.entries();
  for (const auto& n : state.nodes) {
    if (!n.service || !n.service->tuple) continue;
    bool known = std::any_of(entries.begin(), entries.end(),
                             [&](const handshaker::CatalogEntry& e) { return e.tuple == *n.service->tuple; });
    if (!known) entries.push_back({n.service->label, *n.service->tuple});
  }
  catalog = handshaker::ServiceCatalog(entries);
  simnet::SimNetworkView view(state);
  Snapshot all;
  all.observations = obs;
  for (const auto& s : store::snapshots_from(obs)) all.ended_at = std::max(all.ended_at, s.ended_at);
  auto records = handshaker::sweep(all, view, catalog, o.seed);
  store::write(o.out, records, all.ended_at);

  std::map<std::string, std::size_t> outcomes;
  for (const auto& r : records) ++outcomes[handshaker::to_string(r.outcome)];
  Table t("outcome", {"outcome", "count"});
  for (const auto& [k, v] : outcomes) t.row({k, std::to_string(v)});
  t.print(out, o.fmt());
  Table c("census", {"service", "keys", "fraction"});
  for (const auto& row : handshaker::service_census(records)) {
    c.row({row.service, std::to_string(row.count), fixed(row.fraction, 4)});
  }
  c.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_integrate(const Options& o, std::ostream& out) {
  std::vector<Observation> obs;
  for (const auto& f : o.snapshots) {
    auto part = store::read_observations(f);
    obs.insert(obs.end(), part.begin(), part.end());
  }
  std::vector<handshaker::HandshakeRecord> hs;
  for (const auto& f : o.handshakes) {
    auto part = store::read_handshakes(f);
    hs.insert(hs.end(), part.begin(), part.end());
  }
  integrator::EnrichmentFixture fx;
  if (!o.enrich.empty()) fx = store::read_enrichment(o.enrich);
  auto providers = integrator::fixture_providers(fx);
  auto graph = integrator::build_graph(obs, integrator::service_dict(hs), integrator::pointers(providers));
  auto profiles = integrator::detect_reuse(graph);
  std::filesystem::path dir(o.out);
  store::write(dir / kProfilesFile, profiles);
  if (!o.salt.empty()) {
    std::vector<integrator::UserProfile> salted;
    for (const auto& p : profiles) salted.push_back(integrator::salted(p, o.salt));
    store::write(dir / kSaltedProfilesFile, salted);
  }
  std::size_t services = 0;
  for (const auto& p : profiles) services += p.service_count();
  Table t("integrate", {"observations", "handshakes", "vertices", "edges", "users", "service_nodes", "errors"});
  t.row({std::to_string(obs.size()), std::to_string(hs.size()), std::to_string(graph.vertex_count()),
         std::to_string(graph.edge_count()), std::to_string(profiles.size()), std::to_string(services),
         std::to_string(graph.errors().size())});
  t.print(out, o.fmt());
  return kExitOk;
}

inline std::vector<integrator::UserProfile> load_profiles(const std::string& dir) {
  return store::read_profiles(std::filesystem::path(dir) / kProfilesFile);
}

inline int cmd_report_stats(const Options& o, std::ostream& out) {
  auto stats = integrator::user_stats(load_profiles(o.profiles_dir));
  Table s("summary", {"users", "service_nodes", "share_3_to_5_services", "single_ip_users", "max_services", "max_ips"});
  s.row({std::to_string(stats.users()), std::to_string(stats.total_services), fixed(stats.share_with_services(3, 5), 4),
         std::to_string(stats.users_with_ips(1)), std::to_string(stats.max_services()),
         std::to_string(stats.max_ips())});
  s.print(out, o.fmt());
  Table sh("services_histogram", {"services", "users"});
  for (const auto& [k, v] : stats.services_histogram) sh.row({std::to_string(k), std::to_string(v)});
  sh.print(out, o.fmt());
  Table ih("ip_histogram", {"ips", "users"});
  for (const auto& [k, v] : stats.ip_histogram) ih.row({std::to_string(k), std::to_string(v)});
  ih.print(out, o.fmt());
  Table rows("user", {"user", "pubkeys", "ips", "services"});
  for (const auto& r : stats.rows) {
    rows.row({r.user_id, std::to_string(r.pubkeys), std::to_string(r.ips), std::to_string(r.services)});
  }
  rows.print(out, o.fmt());
  return kExitOk;
}

// Adjacency listing: pubkey -> ip -> endpoint -> service, then the
// attributes hanging off each ip.
inline void print_profile(const integrator::UserProfile& p, std::ostream& out, Format f) {
  if (f == Format::records) {
    auto rec = [&](const char* kind, const std::string& v) { out << "profile user=" << p.user_id << " kind=" << kind << " value=" << v << '\n'; };
    for (const auto& k : p.pubkeys) rec("pubkey", k);
    for (const auto& ip : p.ips) rec("ip", ip);
    for (const auto& s : p.services) rec("service", s.vertex_value());
    for (auto n : p.network_ids) rec("network_id", std::to_string(n));
    for (const auto& g : p.geo) {
      rec("country", g.country);
      rec("region", g.region);
      rec("city", g.city);
    }
    for (const auto& pr : p.providers) {
      rec("isp", pr.isp);
      rec("org", pr.org);
    }
    for (const auto& h : p.hostnames) rec("hostname", h);
    return;
  }
  out << p.user_id << "  (" << p.pubkeys.size() << " pubkey, " << p.ips.size() << " ips, " << p.services.size()
      << " services)\n";
  for (const auto& k : p.pubkeys) out << "  pubkey  " << k << '\n';
  for (const auto& ip : p.ips) {
    out << "    ip  " << ip << '\n';
    for (const auto& s : p.services) {
      if (s.ip.str() != ip) continue;
      out << "      service  " << s.tcp_port << "  " << s.identity.census_key();
      if (s.identity.tuple) out << "  network_id=" << s.identity.tuple->network_id;
      out << '\n';
    }
  }
  for (const auto& g : p.geo) out << "  geo  country=" << g.country << "  region=" << g.region << "  city=" << g.city << '\n';
  for (const auto& pr : p.providers) out << "  provider  isp=" << pr.isp << "  org=" << pr.org << '\n';
  for (const auto& h : p.hostnames) out << "  hostname  " << h << '\n';
  std::set<std::uint64_t> nets(p.network_ids.begin(), p.network_ids.end());
  if (!nets.empty()) {
    out << "  network_ids ";
    for (auto n : nets) out << ' ' << n;
    out << '\n';
  }
  out << "  evidence_edges  " << p.evidence.size() << '\n';
}

inline int cmd_report_profile(const Options& o, std::ostream& out) {
  auto profiles = load_profiles(o.profiles_dir);
  const auto* p = integrator::find_user(profiles, o.user);
  if (!p) throw Error("no profile for user '" + o.user + "'");
  print_profile(*p, out, o.fmt());
  return kExitOk;
}

inline int cmd_estimate(const Options& o, std::ostream& out) {
  double e = crawler::expected_distinct(o.queries);
  double f = crawler::expected_fraction(o.queries);
  Table t("coverage", {"queries", "expected_distinct", "fraction", "percent"});
  t.row({std::to_string(o.queries), fixed(e, 2), fixed(f, 4), percent(f)});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int cmd_fixture(const std::string& which, const Options& o, std::ostream& out) {
  auto corpus = which == "headline" ? fixtures::headline_corpus(o.seed) : fixtures::profile_corpus(o.seed);
  std::filesystem::path dir(o.out);
  std::size_t n_obs = store::write(dir / "snapshots.tsv", integrator::flatten(corpus.snapshots));
  std::size_t n_hs = store::write(dir / "handshakes.tsv", corpus.handshakes);
  std::size_t n_fx = store::write(dir / "enrichment.tsv", corpus.enrichment);
  Table t("fixture", {"name", "observations", "handshakes", "enrichment_rows", "out"});
  t.row({which, std::to_string(n_obs), std::to_string(n_hs), std::to_string(n_fx), o.out});
  t.print(out, o.fmt());
  return kExitOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"keyreuse: discovery-network simulation and key-reuse analysis", "keyreuse"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("sim", "Run a simulated scenario")->require_subcommand(1);
  auto* exp1 = sim->add_subcommand("exp1", "Shared-key network formation: components of the DHT graph");
  add_common(exp1, o);
  add_protocol(exp1, o);
  exp1->add_option("--nodes", o.nodes, "Number of nodes");
  exp1->add_flag("--unique-keys", o.unique_keys, "Control run: one key per node");
  auto* exp2 = sim->add_subcommand("exp2", "Two services under one key: connection counts");
  add_common(exp2, o);
  add_protocol(exp2, o);
  exp2->add_flag("--unique-keys", o.unique_keys, "Control run: Node 2 gets its own key");
  auto* conv = sim->add_subcommand("converge", "Run a unique-key network and save its state");
  add_common(conv, o);
  add_protocol(conv, o);
  conv->add_option("--nodes", o.nodes, "Number of nodes");
  conv->add_option("--minutes", o.minutes, "Simulated minutes");
  conv->add_option("--out", o.out, "State file to write")->required();

  auto* crawl = app.add_subcommand("crawl", "Crawl a saved network state into a snapshot");
  add_common(crawl, o);
  add_protocol(crawl, o);
  crawl->add_option("--state", o.state, "Saved network state")->required();
  crawl->add_option("--queries", o.queries, "FindNode queries per node (v4)");
  crawl->add_option("--out", o.out, "Snapshot file to write")->required();
  crawl->add_option("--snapshot-id", o.snapshot_id, "Snapshot id");
  crawl->add_option("--bootstrap", o.bootstrap, "Index of the bootstrap node");

  auto* hs = app.add_subcommand("handshake", "Handshake every endpoint of a snapshot");
  add_common(hs, o);
  hs->add_option("--snapshot", o.snapshot, "Snapshot file")->required();
  hs->add_option("--state", o.state, "Saved network state")->required();
  hs->add_option("--out", o.out, "Handshake file to write")->required();
  hs->add_option("--catalog", o.catalog, "Service catalog (tab-separated)");

  auto* integ = app.add_subcommand("integrate", "Build the identity graph and extract reuse profiles");
  add_common(integ, o);
  integ->add_option("--snapshots", o.snapshots, "Snapshot files")->required();
  integ->add_option("--handshakes", o.handshakes, "Handshake files")->required();
  integ->add_option("--enrich", o.enrich, "Enrichment fixture file");
  integ->add_option("--out", o.out, "Output directory")->required();
  integ->add_option("--salt", o.salt, "Also write a salted-hash export with this salt");

  auto* report = app.add_subcommand("report", "Report on extracted profiles")->require_subcommand(1);
  auto* stats = report->add_subcommand("stats", "Distribution statistics");
  add_common(stats, o);
  stats->add_option("--profiles", o.profiles_dir, "Directory written by integrate")->required();
  auto* prof = report->add_subcommand("profile", "One user's adjacency listing");
  add_common(prof, o);
  prof->add_option("--user", o.user, "User id, e.g. User1")->required();
  prof->add_option("--profiles", o.profiles_dir, "Directory written by integrate")->required();

  auto* est = app.add_subcommand("estimate-coverage", "Expected distinct records after n FindNode queries");
  add_common(est, o);
  est->add_option("--queries", o.queries, "Number of queries")->required();

  auto* fix = app.add_subcommand("fixture", "Write a synthetic corpus")->require_subcommand(1);
  auto* fix_head = fix->add_subcommand("headline", "83 reuse users over 485 service nodes");
  auto* fix_prof = fix->add_subcommand("profile", "One user with geo and provider data");
  for (auto* f : {fix_head, fix_prof}) {
    add_common(f, o);
    f->add_option("--out", o.out, "Output directory")->required();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kExitUsage;
  }

  try {
    if (*exp1) return cmd_exp1(o, out);
    if (*exp2) return cmd_exp2(o, out);
    if (*conv) return cmd_converge(o, out);
    if (*crawl) return cmd_crawl(o, out);
    if (*hs) return cmd_handshake(o, out);
    if (*integ) return cmd_integrate(o, out);
    if (*stats) return cmd_report_stats(o, out);
    if (*prof) return cmd_report_profile(o, out);
    if (*est) return cmd_estimate(o, out);
    if (*fix_head) return cmd_fixture("headline", o, out);
    if (*fix_prof) return cmd_fixture("profile", o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace keyreuse::cli
