#include "shardgame/digest.hpp"

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "shardgame/protocol.hpp"

namespace shardgame {
namespace {

std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(to_hex(sha256(bytes(""))), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha256(bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(EncodeView, LayoutAndSentinel) {
  EXPECT_EQ(encode_view({0, 0}), (std::vector<std::uint8_t>{0, 0, 0, 0}));
  EXPECT_EQ(encode_view({0, 99}), encode_view({0, 0}));
  const auto e = encode_view({30, 7});
  ASSERT_EQ(e.size(), 20u);
  EXPECT_EQ(e[0], 16);
  EXPECT_EQ(e[11], 30);
  EXPECT_EQ(e[19], 7);
}

TEST(SubmitViewDigest, DeterministicAndDistinct) {
  const auto a = submit_view_digest(0, {30, 7});
  const auto b = submit_view_digest(1, {30, 7});
  EXPECT_EQ(a.digest, b.digest);
  EXPECT_EQ(a.processor, 0u);
  EXPECT_EQ(to_hex(a.digest), "2ad61cc87772e7eaba2619a3d514930e2efcd8e7dd8fa305f7695253fcbf21fc");
  EXPECT_NE(submit_view_digest(0, {31, 7}).digest, a.digest);
  EXPECT_NE(submit_view_digest(0, {30, 8}).digest, a.digest);
}

TEST(SubmitViewDigest, EmptyViewIsStable) {
  EXPECT_EQ(to_hex(submit_view_digest(3, {0, 0}).digest),
            "df3f619804a92fdb4057192dc43dd748ea778adc52bc498ce80524c014b81119");
}

TEST(SubmitViewDigest, InjectiveOnSmallGrid) {
  std::set<Digest> seen;
  for (std::uint64_t tx = 1; tx <= 40; ++tx) {
    for (std::uint64_t id = 0; id < 40; ++id) EXPECT_TRUE(seen.insert(submit_view_digest(0, {tx, id}).digest).second);
  }
}

}  // namespace
}  // namespace shardgame
