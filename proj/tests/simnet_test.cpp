#include <gtest/gtest.h>

#include <set>

#include "keyreuse/sim_view.hpp"
#include "keyreuse/simnet.hpp"
#include "support.hpp"

namespace keyreuse::simnet {
namespace {

// Independent component count over the routing-table edge list.
std::size_t oracle_components(const DhtGraph& g) {
  testing::LabelUnion u;
  for (std::size_t i = 0; i < g.vertex_count; ++i) u.add(std::to_string(i));
  for (const auto& [a, b] : g.edges) u.join(std::to_string(a), std::to_string(b));
  return u.partition().size();
}

TEST(Simulation, UniqueKeysConvergeToOneComponent) {
  auto r = run(exp1_config(Protocol::v4, 10, 1, false));
  auto comps = r.graph.weakly_connected_components();
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].size(), 10u);
  EXPECT_EQ(oracle_components(r.graph), 1u);
}

TEST(Simulation, ZeroDurationLeavesEverythingEmpty) {
  auto cfg = exp1_config(Protocol::v4, 10, 1, false);
  cfg.duration = 0;
  for (auto& n : cfg.nodes) n.start_time = 1;
  auto r = run(cfg);
  for (const auto& n : r.nodes) {
    EXPECT_TRUE(n.table.empty());
    EXPECT_FALSE(n.active);
  }
  EXPECT_TRUE(r.connections.empty());
  EXPECT_EQ(r.graph.weakly_connected_components().size(), 10u);
}

TEST(Simulation, SameSeedGivesIdenticalEventLog) {
  auto cfg = converged_config(Protocol::v5, 20, 9, 5 * kMinute);
  cfg.record_log = true;
  auto a = run(cfg);
  auto b = run(cfg);
  EXPECT_FALSE(a.event_log.empty());
  EXPECT_EQ(a.event_log, b.event_log);
  EXPECT_EQ(a.log_digest, b.log_digest);
  cfg.seed = 10;
  EXPECT_NE(run(cfg).log_digest, a.log_digest);
}

TEST(Simulation, DigestDoesNotDependOnLogging) {
  auto cfg = converged_config(Protocol::v4, 15, 2, 3 * kMinute);
  auto quiet = run(cfg);
  cfg.record_log = true;
  auto loud = run(cfg);
  EXPECT_TRUE(quiet.event_log.empty());
  EXPECT_EQ(quiet.log_digest, loud.log_digest);
  EXPECT_EQ(quiet.events_processed, loud.events_processed);
}

TEST(Exp1, SharedKeyLeavesEveryTableEmpty) {
  for (Protocol p : {Protocol::v4, Protocol::v5}) {
    auto cfg = exp1_config(p, 10, 3);
    auto r = run(cfg);
    for (const auto& n : r.nodes) EXPECT_TRUE(n.table.empty());
    auto s = summarize_exp1(r, 10, 1);
    EXPECT_EQ(s.wcc_count, 10u);
    EXPECT_EQ(s.max_wcc, 1u);
  }
}

TEST(Exp1, UniqueKeyControl) {
  auto r = scenario_exp1(Protocol::v4, 10, 1, false);
  EXPECT_EQ(r.public_keys, 10u);
  EXPECT_EQ(r.wcc_count, 1u);
  EXPECT_EQ(r.max_wcc, 10u);
}

SimConfig pair_config() {
  SimConfig cfg;
  cfg.seed = 1;
  cfg.duration = kMinute;
  auto svc = scenario_service("Service A", 7001);
  for (int i = 0; i < 3; ++i) {
    NodeSpec s;
    s.key = generate_keypair(5, static_cast<std::uint64_t>(i));
    s.service = svc;
    s.ip = Ipv4::from_octets(10, 5, 0, static_cast<std::uint8_t>(1 + i));
    s.dials = false;
    cfg.nodes.push_back(s);
  }
  cfg.nodes[2].service = scenario_service("Service B", 7002);
  return cfg;
}

TEST(TryConnect, OutcomesAndCounters) {
  Simulation sim(pair_config());
  sim.run_until(10);
  auto cfg = sim.config();
  EXPECT_EQ(sim.try_connect(0, cfg.record_of(2)), ConnectOutcome::refused_tuple);
  EXPECT_EQ(sim.try_connect(0, cfg.record_of(1)), ConnectOutcome::connected);
  EXPECT_EQ(sim.outbound(0), 1);
  EXPECT_EQ(sim.inbound(1), 1);
  EXPECT_TRUE(sim.connected(0, 1));
  EXPECT_TRUE(sim.connected(1, 0));
  EXPECT_EQ(sim.try_connect(1, cfg.record_of(0)), ConnectOutcome::refused_duplicate);
  NodeRecord nowhere = cfg.record_of(1);
  nowhere.tcp_port = 1;
  EXPECT_EQ(sim.try_connect(0, nowhere), ConnectOutcome::unreachable);
  sim.disconnect(0, 1);
  EXPECT_FALSE(sim.connected(1, 0));
  EXPECT_EQ(sim.inbound(1), 0);
}

TEST(TryConnect, InboundLimitRefusesBeforeTuple) {
  auto cfg = pair_config();
  cfg.max_inbound = 1;
  cfg.max_outbound = 2;
  cfg.max_peers = 3;
  NodeSpec extra = cfg.nodes[0];
  extra.key = generate_keypair(5, 9);
  extra.ip = Ipv4::from_octets(10, 5, 0, 9);
  cfg.nodes.push_back(extra);
  Simulation sim(cfg);
  sim.run_until(10);
  EXPECT_EQ(sim.try_connect(0, cfg.record_of(1)), ConnectOutcome::connected);
  EXPECT_EQ(sim.try_connect(3, cfg.record_of(1)), ConnectOutcome::refused_limit);
  // A tuple-mismatched dial into a full node also reports the limit.
  EXPECT_EQ(sim.try_connect(2, cfg.record_of(1)), ConnectOutcome::refused_limit);
}

TEST(TryConnect, InactiveTargetIsUnreachable) {
  auto cfg = pair_config();
  cfg.nodes[1].start_time = 10 * kSecond;
  Simulation sim(cfg);
  sim.run_until(5);
  EXPECT_EQ(sim.try_connect(0, cfg.record_of(1)), ConnectOutcome::unreachable);
}

TEST(Config, RejectsInvalidSetups) {
  auto bad_limits = pair_config();
  bad_limits.max_inbound = 40;
  EXPECT_THROW(Simulation{bad_limits}, Error);
  auto dup = pair_config();
  dup.nodes[1].ip = dup.nodes[0].ip;
  EXPECT_THROW(Simulation{dup}, Error);
  auto boot = pair_config();
  boot.nodes[1].bootnodes = {7};
  EXPECT_THROW(Simulation{boot}, Error);
  auto port = pair_config();
  port.nodes[0].udp_port = 0;
  EXPECT_THROW(Simulation{port}, Error);
}

TEST(Latency, ConfiguredDelayIsApplied) {
  auto cfg = converged_config(Protocol::v4, 2, 1, 2 * kSecond);
  cfg.record_log = true;
  cfg.latency = {120, 120};
  auto r = run(cfg);
  // Node 1 starts at 200 ms and pings node 0; the ping lands 120 ms later.
  bool seen = false;
  for (const auto& line : r.event_log) {
    if (line.rfind("320 deliver node=0 ", 0) == 0 && line.find(" Ping ") != std::string::npos) seen = true;
  }
  EXPECT_TRUE(seen);
}

TEST(Exp2, ShortRunIsDeterministic) {
  auto cfg = exp2_config(4);
  cfg.duration = 8 * kMinute;
  auto a = run(cfg);
  auto b = run(cfg);
  EXPECT_EQ(a.log_digest, b.log_digest);
  EXPECT_EQ(a.connections.size(), b.connections.size());
  EXPECT_GT(a.connections.size(), 0u);
}

TEST(Exp2, ConnectionLimitsHoldEverywhere) {
  Simulation sim(exp2_config(2));
  for (Tick t = 0; t <= sim.config().duration; t += 5 * kMinute) {
    sim.run_until(t);
    for (std::size_t i = 0; i < sim.size(); ++i) {
      ASSERT_LE(sim.inbound(i), 34);
      ASSERT_LE(sim.outbound(i), 16);
      ASSERT_LE(sim.inbound(i) + sim.outbound(i), 50);
    }
  }
  // Symmetry: every connection is visible from both ends.
  for (const auto& c : sim.connections()) {
    EXPECT_TRUE(sim.connected(c.initiator, c.acceptor));
    EXPECT_TRUE(sim.connected(c.acceptor, c.initiator));
  }
}

TEST(SimView, ReflectsFinalTablesAndServices) {
  auto r = run(converged_config(Protocol::v4, 20, 3, 5 * kMinute));
  SimNetworkView view(r);
  EXPECT_EQ(view.active_records().size(), 20u);
  const auto& n = r.nodes[4];
  EXPECT_EQ(view.table_of(n.record).size(), n.table.size());
  NodeId target;
  auto reply = view.find_node_v4(n.record, target);
  ASSERT_TRUE(reply);
  EXPECT_LE(reply->size(), 16u);
  EXPECT_FALSE(view.find_node_v5(n.record, 16));
  NodeRecord imposter = n.record;
  imposter.public_key = generate_keypair(77, 77).public_key;
  EXPECT_FALSE(view.find_node_v4(imposter, target));
  auto svc = view.service_at(n.record.ip, n.record.tcp_port);
  ASSERT_TRUE(svc);
  EXPECT_EQ(svc->tuple, n.service->tuple);
  EXPECT_FALSE(view.service_at(n.record.ip, 1));
}

}  // namespace
}  // namespace keyreuse::simnet
