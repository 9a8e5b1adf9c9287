#include <gtest/gtest.h>

#include <random>
#include <set>

#include "keyreuse/identity.hpp"
#include "support.hpp"

namespace keyreuse {
namespace {

TEST(Keygen, DeterministicForSameSeedAndIndex) {
  EXPECT_EQ(generate_keypair(7, 0), generate_keypair(7, 0));
}

TEST(Keygen, FreshIndicesGiveFreshKeys) {
  EXPECT_NE(generate_keypair(7, 0).public_key, generate_keypair(7, 1).public_key);
  std::set<PublicKey> keys;
  for (std::uint64_t i = 0; i < 300; ++i) keys.insert(generate_keypair(1, i).public_key);
  EXPECT_EQ(keys.size(), 300u);
}

TEST(Ipv4, ParsesAndPrints) {
  EXPECT_EQ(Ipv4::parse("10.0.0.1").value, 0x0a000001u);
  EXPECT_EQ(Ipv4::parse("255.255.255.255").str(), "255.255.255.255");
  EXPECT_EQ(Ipv4::from_octets(192, 0, 2, 10).str(), "192.0.2.10");
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.0.0.1", "a.b.c.d", "1..2.3", "1.2.3.4 ", "1234.1.1.1"}) {
    EXPECT_THROW(Ipv4::parse(bad), Error) << bad;
  }
}

TEST(EnrUrl, EncodesDecidedGrammar) {
  NodeRecord r;
  r.public_key.bytes.fill(0xaa);
  r.ip = Ipv4::parse("10.0.0.1");
  r.tcp_port = 30303;
  r.udp_port = 30301;
  EXPECT_EQ(encode_enr_url_v4(r), "enode://" + std::string(128, 'a') + "@10.0.0.1:30303?discport=30301");
  r.udp_port = 30303;
  EXPECT_TRUE(encode_enr_url_v4(r).ends_with("?discport=30303"));
}

TEST(EnrUrl, RoundTripsRandomRecords) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    NodeRecord r = testing::random_record(rng);
    EXPECT_EQ(decode_enr_url_v4(encode_enr_url_v4(r)), r);
  }
}

TEST(EnrUrl, RejectsMalformedUrls) {
  std::string key(128, 'b');
  for (const std::string& bad : {std::string("enr://") + key + "@1.2.3.4:1?discport=1",
                                 "enode://" + key + "1.2.3.4:1?discport=1",
                                 "enode://" + key + "@1.2.3.4:1",
                                 "enode://" + key + "@1.2.3.4?discport=1",
                                 "enode://" + key + "@1.2.3.4:0?discport=1",
                                 "enode://" + key + "@1.2.3.4:70000?discport=1",
                                 "enode://" + key.substr(2) + "@1.2.3.4:1?discport=1",
                                 "enode://" + std::string(128, 'z') + "@1.2.3.4:1?discport=1"}) {
    EXPECT_THROW(decode_enr_url_v4(bad), Error) << bad;
  }
}

TEST(Multiaddr, EncodesDecidedGrammarAndIgnoresUdp) {
  NodeRecord r;
  r.public_key = generate_keypair(3, 3).public_key;
  r.ip = Ipv4::parse("10.0.0.2");
  r.tcp_port = 9000;
  r.udp_port = 9001;
  EXPECT_EQ(encode_multiaddr(r), "/ip4/10.0.0.2/tcp/9000/p2p/" + node_id(r.public_key).hex());
  NodeRecord other = r;
  other.udp_port = 12345;
  EXPECT_EQ(encode_multiaddr(r), encode_multiaddr(other));
}

TEST(Multiaddr, RoundTripsRandomRecords) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    NodeRecord r = testing::random_record(rng);
    auto parts = decode_multiaddr(encode_multiaddr(r));
    EXPECT_EQ(parts.ip, r.ip);
    EXPECT_EQ(parts.tcp_port, r.tcp_port);
    EXPECT_EQ(parts.id, node_id(r.public_key));
  }
  EXPECT_THROW(decode_multiaddr("/ip6/::1/tcp/1/p2p/00"), Error);
  EXPECT_THROW(decode_multiaddr("ip4/1.2.3.4/tcp/1/p2p/00"), Error);
}

TEST(NodeIdTest, StableAndCollisionFree) {
  std::mt19937_64 rng(13);
  std::set<NodeId> ids;
  for (int i = 0; i < 10000; ++i) {
    PublicKey pk = testing::random_key(rng);
    EXPECT_EQ(node_id(pk), node_id(pk));
    ids.insert(node_id(pk));
  }
  EXPECT_EQ(ids.size(), 10000u);
}

TEST(NodeIdTest, IsSha256OfTheKeyBytes) {
  PublicKey pk;
  pk.bytes.fill(0);
  // sha256 of 64 zero bytes.
  EXPECT_EQ(node_id(pk).hex(), "f5a5fd42d16a20302798ef6ed309979b43003d2320d9f0e8ea9831a92759fb4b");
}

TEST(Logdist, MatchesBitwiseOracle) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 2000; ++i) {
    NodeId a = testing::random_id(rng);
    NodeId b = a;
    // Bias toward long shared prefixes so small distances are exercised.
    int flip = static_cast<int>(rng() % 256);
    b.bytes[static_cast<std::size_t>(flip / 8)] ^= static_cast<std::uint8_t>(0x80 >> (flip % 8));
    for (std::size_t k = static_cast<std::size_t>(flip / 8) + 1; k < 32; ++k)
      b.bytes[k] = static_cast<std::uint8_t>(rng() & 0xff);
    EXPECT_EQ(logdist(a, b), testing::brute_logdist(a, b));
    EXPECT_EQ(logdist(a, b), 256 - flip);
  }
  NodeId z;
  EXPECT_EQ(logdist(z, z), 0);
}

TEST(Identity, RecordsWithSameKeyShareIdentity) {
  NodeRecord a;
  a.public_key = generate_keypair(1, 1).public_key;
  a.ip = Ipv4::parse("10.0.0.1");
  a.udp_port = a.tcp_port = 30303;
  NodeRecord b = a;
  b.ip = Ipv4::parse("10.0.0.2");
  EXPECT_TRUE(a.same_identity(b));
  EXPECT_NE(a, b);
}

TEST(ProtocolName, ParsesBothAndRejectsOthers) {
  EXPECT_EQ(parse_protocol("v4"), Protocol::v4);
  EXPECT_EQ(parse_protocol("v5"), Protocol::v5);
  EXPECT_THROW(parse_protocol("v6"), Error);
}

}  // namespace
}  // namespace keyreuse
