#include <gtest/gtest.h>
#include <openssl/sha.h>

#include <random>

#include "anon_oracle.hpp"
#include "sockscope/error.hpp"
#include "sockscope/host_info.hpp"
#include "sockscope/privacy.hpp"
#include "sockscope/sha1.hpp"

using namespace sockscope;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Sha1, KnownVectors) {
  EXPECT_EQ(to_hex(Sha1::hash(bytes_of("abc"))), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_EQ(to_hex(Sha1::hash(bytes_of(""))), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  EXPECT_EQ(to_hex(Sha1::hash(bytes_of("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))),
            "84983e441c3bd26ebaae4aa1f95129e5e54670f1");
}

TEST(Sha1, MatchesOpenSslAtEveryLength) {
  std::mt19937 rng(7);
  for (std::size_t len = 0; len < 300; ++len) {
    std::vector<std::uint8_t> data(len);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    unsigned char ref[SHA_DIGEST_LENGTH];
    SHA1(data.data(), data.size(), ref);
    auto got = Sha1::hash(data);
    ASSERT_TRUE(std::equal(got.begin(), got.end(), ref)) << len;
  }
}

TEST(Sha1, Incremental) {
  Sha1 h;
  auto a = bytes_of("abcdbcdecdefdefgefghfghighij");
  auto b = bytes_of("hijkijkljklmklmnlmnomnopnopq");
  h.update(a);
  h.update(b);
  EXPECT_EQ(to_hex(h.finish()), "84983e441c3bd26ebaae4aa1f95129e5e54670f1");
}

TEST(Salt, HexAndFingerprint) {
  Salt zero;
  EXPECT_EQ(zero.hex(), std::string(64, '0'));
  EXPECT_EQ(zero.fingerprint(), "de8a847b");
  EXPECT_EQ(Salt::from_hex(std::string(64, 'A'))->hex(), std::string(64, 'a'));
  EXPECT_FALSE(Salt::from_hex("abc"));
  EXPECT_FALSE(Salt::from_hex(std::string(63, '0') + "g"));
  EXPECT_NE(Salt::generate(), Salt::generate());
}

// Values computed once with Python's hashlib.
TEST(Anonymize, FrozenValues) {
  Salt zero;
  EXPECT_EQ(anonymize_addr(NetAddress::ipv4(0xc0000201, 443), zero).address_text(), "168.142.25.52");
  auto v6 = *NetAddress::from_text(AddressFamily::ipv6, "2001:db8::1", 443);
  EXPECT_EQ(anonymize_addr(v6, zero).address_text(), "b673:325d:b632:5a60:7fe5:f7ff:3296:6eeb");
}

TEST(Anonymize, KeepsPortAndLocalAddresses) {
  auto salt = Salt::generate();
  auto g = anonymize_addr(NetAddress::ipv4(0x08080808, 53), salt);
  EXPECT_EQ(g.port, 53);
  auto lo = NetAddress::ipv4(0x7f000001, 80);
  EXPECT_EQ(anonymize_addr(lo, salt), lo);
  auto ll = NetAddress::ipv4(0xa9fe0101, 80);
  EXPECT_EQ(anonymize_addr(ll, salt), ll);
  auto ll6 = *NetAddress::from_text(AddressFamily::ipv6, "fe80::1", 1);
  EXPECT_EQ(anonymize_addr(ll6, salt), ll6);
  EXPECT_THROW(anonymize_addr(NetAddress::unix_path(), salt), NotApplicableError);
}

TEST(Anonymize, MatchesOracleOnRandomAddresses) {
  auto a = Salt::from_hex(std::string(64, '3')).value();
  auto b = Salt::from_hex(std::string(64, 'c')).value();
  for (const auto& addr : test::random_global_addresses(11, 500)) {
    auto x = anonymize_addr(addr, a);
    EXPECT_EQ(x.bits, test::oracle_anonymized_bits(addr, a));
    EXPECT_EQ(x.port, addr.port);
    EXPECT_NE(x.bits, anonymize_addr(addr, b).bits);
  }
  for (const auto& addr : test::local_addresses()) EXPECT_EQ(anonymize_addr(addr, a), addr);
}

TEST(Scrub, EventAddresses) {
  Salt salt;
  TraceEvent e;
  e.fn = ApiFunction::sendto;
  e.args = IoArgs{3, 100, 0, std::nullopt, NetAddress::ipv4(0xc0000201, 443)};
  auto s = scrub_event(e, salt);
  EXPECT_EQ(std::get<IoArgs>(s.args).addr->address_text(), "168.142.25.52");
  EXPECT_EQ(std::get<IoArgs>(s.args).buf_size, 100u);
}

TEST(Scrub, MetaOptOut) {
  TraceMeta m = describe_host({"/usr/bin/app", "-x"}, Salt{}, true);
  EXPECT_TRUE(m.metadata_opt_out);
  EXPECT_FALSE(m.kernel_version);
  EXPECT_FALSE(m.network_config_summary);
  EXPECT_EQ(m.app_name, "app");
  EXPECT_EQ(m.salt_fingerprint, "de8a847b");
  TraceMeta full = describe_host({"app"}, Salt{}, false);
  EXPECT_TRUE(full.kernel_version);
  EXPECT_TRUE(full.network_config_summary);
  EXPECT_EQ(full.network_config_summary->find('.'), std::string::npos);
}
