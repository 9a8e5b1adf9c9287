#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "keyreuse/crawler.hpp"
#include "keyreuse/fixtures.hpp"
#include "keyreuse/sim_view.hpp"
#include "support.hpp"

namespace keyreuse::crawler {
namespace {

// Expected distinct slots after n replies, each 16 distinct slots drawn
// uniformly from 272, by propagating the exact distribution of the count.
double markov_expected_distinct(int n) {
  const int slots = 272, draw = 16;
  auto choose = [](int a, int b) {
    if (b < 0 || b > a) return 0.0L;
    return std::exp(std::lgamma(a + 1.0L) - std::lgamma(b + 1.0L) - std::lgamma(a - b + 1.0L));
  };
  std::vector<long double> p(slots + 1, 0.0L);
  p[0] = 1.0L;
  for (int q = 0; q < n; ++q) {
    std::vector<long double> next(slots + 1, 0.0L);
    for (int seen = 0; seen <= slots; ++seen) {
      if (p[static_cast<std::size_t>(seen)] == 0.0L) continue;
      for (int fresh = 0; fresh <= draw; ++fresh) {
        long double w = choose(slots - seen, fresh) * choose(seen, draw - fresh) / choose(slots, draw);
        if (w > 0) next[static_cast<std::size_t>(seen + fresh)] += p[static_cast<std::size_t>(seen)] * w;
      }
    }
    p = std::move(next);
  }
  long double e = 0;
  for (int k = 0; k <= slots; ++k) e += k * p[static_cast<std::size_t>(k)];
  return static_cast<double>(e);
}

TEST(ExpectedDistinct, MatchesExactDistributionOracle) {
  for (int n : {0, 1, 2, 5, 17, 40, 100}) {
    EXPECT_NEAR(expected_distinct(n), markov_expected_distinct(n), 1e-9) << n;
  }
}

TEST(ExpectedDistinct, NamedValues) {
  EXPECT_DOUBLE_EQ(expected_distinct(0), 0.0);
  EXPECT_NEAR(expected_distinct(1), 16.0, 1e-12);
  EXPECT_NEAR(expected_distinct(40), 247.93, 0.005);
  EXPECT_NEAR(expected_fraction(40), 0.9115, 0.0001);
  EXPECT_THROW(expected_distinct(-1), Error);
}

TEST(ExpectedDistinct, MonotoneAndBounded) {
  double prev = -1;
  for (int n = 0; n <= 2000; ++n) {
    double e = expected_distinct(n);
    EXPECT_GE(e, prev);
    EXPECT_LE(e, 272.0);
    prev = e;
  }
}

// Hand-built network: record i answers from its own table; records in
// `silent` never answer.
class TableView : public DiscoveryView {
public:
  std::map<PeerKey, dht::RoutingTable> tables;
  std::set<PeerKey> silent;
  mutable std::map<PeerKey, int> calls;

  std::optional<std::vector<NodeRecord>> find_node_v4(const NodeRecord& to, const NodeId& target) const override {
    ++calls[PeerKey::of(to)];
    auto it = tables.find(PeerKey::of(to));
    if (it == tables.end() || silent.count(PeerKey::of(to))) return std::nullopt;
    return discovery::neighbors_v4(it->second, target);
  }
  std::optional<std::vector<NodeRecord>> find_node_v5(const NodeRecord& to, int distance) const override {
    ++calls[PeerKey::of(to)];
    auto it = tables.find(PeerKey::of(to));
    if (it == tables.end() || silent.count(PeerKey::of(to))) return std::nullopt;
    return discovery::nodes_v5(it->second, distance);
  }
};

NodeRecord rec(std::uint64_t i) {
  return {generate_keypair(61, i).public_key,
          Ipv4::from_octets(10, 6, static_cast<std::uint8_t>(i / 250), static_cast<std::uint8_t>(1 + i % 250)), 30303,
          30303, 1};
}

// Every node knows a random subset of the others.
TableView random_network(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TableView v;
  for (std::size_t i = 0; i < n; ++i) {
    dht::RoutingTable t(rec(i).public_key);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && rng() % 3 == 0) t.insert(rec(j), 0);
    v.tables.emplace(PeerKey::of(rec(i)), std::move(t));
  }
  return v;
}

TEST(CrawlV4, ZeroQueriesYieldsBootstrapOnly) {
  auto view = random_network(30, 1);
  auto res = crawl_v4(view, {rec(0), rec(1)}, 0, 7);
  ASSERT_EQ(res.snapshot.observations.size(), 2u);
  EXPECT_EQ(res.snapshot.observations[0].public_key, rec(0).public_key);
  EXPECT_TRUE(view.calls.empty());
}

TEST(CrawlV4, SameSeedSameSnapshot) {
  auto view = random_network(200, 2);
  auto a = crawl_v4(view, {rec(0)}, 1, 7);
  auto b = crawl_v4(view, {rec(0)}, 1, 7);
  EXPECT_EQ(a.snapshot, b.snapshot);
  EXPECT_EQ(a.recovered, b.recovered);
  auto c = crawl_v4(view, {rec(0)}, 1, 8);
  EXPECT_NE(a.recovered, c.recovered);
}

TEST(CrawlV4, NeverExceedsQueryBudget) {
  auto view = random_network(60, 3);
  auto res = crawl_v4(view, {rec(0)}, 12, 1);
  for (const auto& [k, n] : view.calls) EXPECT_LE(n, 12);
  for (const auto& [k, n] : res.queries_sent) EXPECT_LE(n, 12);
  EXPECT_EQ(res.snapshot.observations.size(), 60u);
}

TEST(CrawlV4, SilentNodesAreCountedAndSkipped) {
  auto view = random_network(40, 4);
  view.silent.insert(PeerKey::of(rec(5)));
  auto res = crawl_v4(view, {rec(0)}, 40, 1);
  EXPECT_EQ(res.unresponsive, 1u);
  EXPECT_EQ(view.calls[PeerKey::of(rec(5))], 1);
}

TEST(CrawlV5, RecoversEveryTableExactly) {
  auto view = random_network(80, 5);
  auto res = crawl_v5(view, {rec(0)}, 1);
  for (const auto& [k, t] : view.tables) {
    std::set<PublicKey> truth;
    for (const auto& e : t.entries()) truth.insert(e.record.public_key);
    EXPECT_EQ(res.recovered[k], truth);
  }
  for (const auto& [k, n] : res.queries_sent) EXPECT_LE(n, 17);
}

TEST(CrawlV5, EmptyTableContributesNothing) {
  TableView view;
  view.tables.emplace(PeerKey::of(rec(0)), dht::RoutingTable(rec(0).public_key));
  auto res = crawl_v5(view, {rec(0)}, 1);
  EXPECT_EQ(res.snapshot.observations.size(), 1u);  // the bootstrap sighting itself
  EXPECT_TRUE(res.recovered[PeerKey::of(rec(0))].empty());
}

TEST(CrawlV5, ObservationsPerNodeAreBounded) {
  auto view = random_network(600, 6);
  auto res = crawl_v5(view, {rec(0)}, 1);
  for (const auto& [k, keys] : res.recovered) EXPECT_LE(keys.size(), 272u);
}

TEST(Crawl, RequiresBootstrap) {
  TableView view;
  EXPECT_THROW(crawl_v4(view, {}, 3, 1), Error);
  EXPECT_THROW(crawl_v4(view, {rec(0)}, -1, 1), Error);
}

TEST(Crawl, SimulatedNetworkV5IsExhaustive) {
  auto result = simnet::run(simnet::converged_config(Protocol::v5, 60, 3, 10 * kMinute));
  simnet::SimNetworkView view(result);
  auto res = crawl_v5(view, {result.nodes[0].record}, 3);
  for (const auto& n : result.nodes) {
    std::set<PublicKey> truth;
    for (const auto& e : n.table) truth.insert(e.record.public_key);
    EXPECT_EQ(res.recovered[PeerKey::of(n.record)], truth);
  }
}

TEST(Summarize, KeysBehindOneIp) {
  Snapshot s;
  for (std::uint64_t i = 0; i < 3; ++i) {
    s.observations.push_back({1, rec(i).public_key, Ipv4::parse("203.0.113.7"), 30303,
                              static_cast<std::uint16_t>(30303 + i), Protocol::v4, 0});
  }
  auto sum = summarize({s});
  EXPECT_EQ(sum.distinct_by_key, 3u);
  EXPECT_EQ(sum.distinct_by_ip, 1u);
  EXPECT_EQ(sum.total_with_duplicates, 3u);
  EXPECT_EQ(summarize({}), Summary{});
}

TEST(Summarize, HeadlineCorpusRecount) {
  auto corpus = fixtures::headline_corpus(1);
  ASSERT_EQ(corpus.snapshots.size(), 10u);
  std::set<std::string> keys, ips;
  std::size_t total = 0;
  for (const auto& snap : corpus.snapshots) {
    for (const auto& o : snap.observations) {
      keys.insert(o.public_key.hex());
      ips.insert(o.ip.str());
      ++total;
    }
  }
  auto sum = summarize(corpus.snapshots);
  EXPECT_EQ(sum.distinct_by_key, keys.size());
  EXPECT_EQ(sum.distinct_by_ip, ips.size());
  EXPECT_EQ(sum.total_with_duplicates, total);
  EXPECT_GT(sum.total_with_duplicates, sum.distinct_by_key);
}

}  // namespace
}  // namespace keyreuse::crawler
