#include <gtest/gtest.h>

#include <map>
#include <random>

#include "dht_properties.hpp"
#include "keyreuse/dht.hpp"
#include "support.hpp"

namespace keyreuse::dht {
namespace {

using testing::random_id;
using testing::random_key;

NodeRecord record(const PublicKey& pk, std::uint8_t host, std::uint16_t port = 30303) {
  return {pk, Ipv4::from_octets(10, 0, 0, host), port, port, 1};
}

// Keys whose ids fall in the given bucket of `owner`.
std::vector<PublicKey> keys_in_bucket(const NodeId& owner, int bucket, std::size_t n, std::mt19937_64& rng) {
  std::vector<PublicKey> out;
  while (out.size() < n) {
    PublicKey pk = random_key(rng);
    if (bucket_index(owner, node_id(pk)) == bucket) out.push_back(pk);
  }
  return out;
}

TEST(BucketIndex, LowestAndHighestBits) {
  NodeId a;
  NodeId b = a;
  b.bytes[31] ^= 0x01;
  EXPECT_EQ(logdist(a, b), 1);
  EXPECT_EQ(bucket_index(a, b), 0);
  NodeId c = a;
  c.bytes[0] ^= 0x80;
  EXPECT_EQ(logdist(a, c), 256);
  EXPECT_EQ(bucket_index(a, c), 16);
  EXPECT_THROW(bucket_index(a, a), Error);
}

TEST(BucketIndex, BoundaryBetweenSharedAndDedicatedBuckets) {
  NodeId a;
  auto at_logdist = [&](int d) {
    NodeId x = a;
    int bit = 256 - d;  // from the most significant end
    x.bytes[static_cast<std::size_t>(bit / 8)] ^= static_cast<std::uint8_t>(0x80 >> (bit % 8));
    return x;
  };
  EXPECT_EQ(bucket_index(a, at_logdist(240)), 0);
  EXPECT_EQ(bucket_index(a, at_logdist(241)), 1);
  EXPECT_EQ(bucket_index(a, at_logdist(255)), 15);
}

TEST(BucketIndex, RandomPairsConcentrateInTopBucket) {
  std::mt19937_64 rng(21);
  std::map<int, int> hist;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    NodeId a = random_id(rng), b = random_id(rng);
    int idx = bucket_index(a, b);
    ASSERT_GE(idx, 0);
    ASSERT_LE(idx, 16);
    // Oracle: 256 - first differing bit, shifted.
    ASSERT_EQ(idx, std::max(0, testing::brute_logdist(a, b) - 240));
    ++hist[idx];
  }
  EXPECT_NEAR(hist[16] / double(n), 0.5, 0.01);
  EXPECT_NEAR(hist[15] / double(n), 0.25, 0.01);
}

TEST(RoutingTableTest, RejectsOwnKey) {
  std::mt19937_64 rng(22);
  PublicKey owner = random_key(rng);
  RoutingTable t(owner);
  EXPECT_EQ(t.insert(record(owner, 1), 0), InsertOutcome::rejected_self);
  EXPECT_TRUE(t.empty());
}

TEST(RoutingTableTest, LiveEntryWinsOverSecondEndpoint) {
  std::mt19937_64 rng(23);
  RoutingTable t(random_key(rng));
  PublicKey pk = random_key(rng);
  EXPECT_EQ(t.insert(record(pk, 1), 0), InsertOutcome::added);
  EXPECT_EQ(t.insert(record(pk, 2), 1), InsertOutcome::ignored_duplicate_key);
  ASSERT_NE(t.find(pk), nullptr);
  EXPECT_EQ(t.find(pk)->record.ip, Ipv4::from_octets(10, 0, 0, 1));
  EXPECT_EQ(t.size(), 1u);
}

TEST(RoutingTableTest, ReinsertRefreshesAndMovesToFront) {
  std::mt19937_64 rng(24);
  RoutingTable t(random_key(rng));
  auto keys = keys_in_bucket(t.owner_id(), 16, 3, rng);
  for (std::size_t i = 0; i < keys.size(); ++i) t.insert(record(keys[i], static_cast<std::uint8_t>(i + 1)), 0);
  EXPECT_EQ(t.bucket(16).entries.front().record.public_key, keys[2]);
  EXPECT_EQ(t.insert(record(keys[0], 1), 5), InsertOutcome::refreshed);
  EXPECT_EQ(t.bucket(16).entries.front().record.public_key, keys[0]);
  EXPECT_EQ(t.bucket(16).entries.front().last_seen, 5);
  EXPECT_TRUE(t.touch(keys[1], 9));
  EXPECT_EQ(t.bucket(16).entries.front().record.public_key, keys[1]);
}

TEST(RoutingTableTest, SeventeenthInsertIsQueued) {
  std::mt19937_64 rng(25);
  RoutingTable t(random_key(rng));
  auto keys = keys_in_bucket(t.owner_id(), 16, 16 + 16 + 1, rng);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(t.insert(record(keys[i], 1), 0), InsertOutcome::added);
  EXPECT_EQ(t.insert(record(keys[16], 1), 0), InsertOutcome::queued_replacement);
  EXPECT_EQ(t.bucket(16).entries.size(), 16u);
  EXPECT_EQ(t.bucket(16).replacements.size(), 1u);
  // Overflowing the replacement list drops its oldest entry.
  for (std::size_t i = 17; i < keys.size(); ++i) t.insert(record(keys[i], 1), 0);
  EXPECT_EQ(t.bucket(16).replacements.size(), 16u);
  EXPECT_FALSE(t.contains_anywhere(keys[16]));
  EXPECT_TRUE(t.contains_anywhere(keys[17]));
}

TEST(RoutingTableTest, EvictPromotesOldestReplacement) {
  std::mt19937_64 rng(26);
  RoutingTable t(random_key(rng));
  auto keys = keys_in_bucket(t.owner_id(), 16, 18, rng);
  for (const auto& k : keys) t.insert(record(k, 1), 0);
  const PublicKey r1 = keys[16], r2 = keys[17];
  NodeId victim = node_id(keys[3]);
  auto promoted = t.evict_and_promote(victim, 7);
  ASSERT_TRUE(promoted);
  EXPECT_EQ(promoted->public_key, r1);
  ASSERT_EQ(t.bucket(16).replacements.size(), 1u);
  EXPECT_EQ(t.bucket(16).replacements.front().record.public_key, r2);
  EXPECT_EQ(t.bucket(16).entries.size(), 16u);
  EXPECT_EQ(t.failed_requests().size(), 1u);
  EXPECT_EQ(t.failed_requests().front().id, victim);
}

TEST(RoutingTableTest, EvictWithoutReplacementsShrinksBucket) {
  std::mt19937_64 rng(27);
  RoutingTable t(random_key(rng));
  auto keys = keys_in_bucket(t.owner_id(), 16, 4, rng);
  for (const auto& k : keys) t.insert(record(k, 1), 0);
  EXPECT_FALSE(t.evict_and_promote(node_id(keys[0])));
  EXPECT_EQ(t.size(), 3u);
  RoutingTable before = t;
  EXPECT_FALSE(t.evict_and_promote(random_id(rng)));
  EXPECT_EQ(t, before);
}

TEST(Closest, EmptyTableGivesNothing) {
  std::mt19937_64 rng(28);
  RoutingTable t(random_key(rng));
  EXPECT_TRUE(t.closest(random_id(rng), 16).empty());
}

TEST(Closest, SmallTableReturnsEverythingSorted) {
  std::mt19937_64 rng(29);
  RoutingTable t(random_key(rng));
  for (int i = 0; i < 5; ++i) t.insert(record(random_key(rng), 1), 0);
  NodeId target = random_id(rng);
  auto got = t.closest(target, 16);
  EXPECT_EQ(got.size(), 5u);
  EXPECT_EQ(got, testing::brute_closest(t, target, 16));
}

// Id whose distance from the zero id is chosen by the key's first bytes, so
// that all 17 buckets of a table near zero can be filled.
NodeId spread_id(const PublicKey& pk) {
  NodeId id{sha256(pk.bytes)};
  int bucket = pk.bytes[0] % kBucketCount;
  int d = bucket == 0 ? 1 + pk.bytes[1] % 240 : bucket + 240;
  int bit = 256 - d;
  for (int i = 0; i < bit; ++i) id.bytes[static_cast<std::size_t>(i / 8)] &= static_cast<std::uint8_t>(~(0x80 >> (i % 8)));
  id.bytes[static_cast<std::size_t>(bit / 8)] |= static_cast<std::uint8_t>(0x80 >> (bit % 8));
  return id;
}

TEST(Closest, FullTableMatchesBruteForce) {
  std::mt19937_64 rng(30);
  // Owner id has its top set bit at logdist 16 from zero; every entry at
  // 241..256 lands in its own bucket and the rest share bucket 0.
  PublicKey owner;
  owner.bytes[1] = 255;
  RoutingTable t(owner, &spread_id);
  while (t.size() < kTableCapacity) {
    PublicKey pk = random_key(rng);
    if (pk == owner) continue;
    if (spread_id(pk) == t.owner_id()) continue;
    t.insert(record(pk, 1), 0);
  }
  EXPECT_EQ(t.size(), 272u);
  for (int trial = 0; trial < 50; ++trial) {
    NodeId target = random_id(rng);
    auto got = t.closest(target, 16);
    ASSERT_EQ(got.size(), 16u);
    EXPECT_EQ(got, testing::brute_closest(t, target, 16));
  }
}

TEST(Persistence, RoundTripKeepsKeys) {
  std::mt19937_64 rng(31);
  PublicKey owner = random_key(rng);
  RoutingTable t(owner);
  while (t.size() < 100) t.insert(record(random_key(rng), static_cast<std::uint8_t>(1 + rng() % 200)), 0);
  t.record_failure(random_id(rng), "timeout", 4);
  auto stored = persist(t);
  auto reloaded = load(owner, parse_persistence(serialize(stored)));
  std::set<PublicKey> a, b;
  for (const auto& e : t.entries()) a.insert(e.record.public_key);
  for (const auto& e : reloaded.entries()) b.insert(e.record.public_key);
  EXPECT_EQ(a, b);
  EXPECT_EQ(reloaded.failed_requests().size(), 1u);
  // In-bucket LRU order survives the trip.
  for (int i = 0; i < kBucketCount; ++i) {
    std::vector<PublicKey> x, y;
    for (const auto& e : t.bucket(i).entries) x.push_back(e.record.public_key);
    for (const auto& e : reloaded.bucket(i).entries) y.push_back(e.record.public_key);
    EXPECT_EQ(x, y) << "bucket " << i;
  }
}

TEST(Persistence, EmptyAndSelfSeeds) {
  std::mt19937_64 rng(32);
  PublicKey owner = random_key(rng);
  EXPECT_TRUE(load(owner, PersistenceTables{}).empty());
  PersistenceTables stored;
  stored.seed_nodes.push_back(record(owner, 1));
  stored.seed_nodes.push_back(record(random_key(rng), 2));
  EXPECT_EQ(load(owner, stored).size(), 1u);
}

TEST(Persistence, ParseErrorsNameTheRecord) {
  try {
    parse_persistence("live enode://" + std::string(128, 'a') + "@1.2.3.4:1?discport=1 1\nbogus line\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
  }
}

TEST(DhtProperties, RandomOperationSequences) {
  auto rep = testing::run_dht_properties(2000, 60, 33);
  EXPECT_TRUE(rep.ok()) << rep.single_entry_violations << " " << rep.capacity_violations << " "
                        << rep.closest_mismatches << " " << rep.self_insert_accepted;
  EXPECT_GT(rep.replacement_fills, 0u);
}

TEST(DhtProperties, IdenticalSequencesGiveIdenticalTables) {
  auto build = [] {
    std::mt19937_64 rng(34);
    RoutingTable t(random_key(rng));
    for (int i = 0; i < 500; ++i) t.insert(record(random_key(rng), static_cast<std::uint8_t>(1 + rng() % 9)), i);
    return t;
  };
  EXPECT_EQ(build(), build());
}

}  // namespace
}  // namespace keyreuse::dht
