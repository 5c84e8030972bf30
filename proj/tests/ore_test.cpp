#include "scale/ore.hpp"

#include <gtest/gtest.h>

#include <random>

#include "scale/error.hpp"

namespace scale::ore {
namespace {

int sign_of(std::int64_t v) { return (v > 0) - (v < 0); }

OreParams params_of(int block, int key) {
  OreParams p;
  p.block_bits = static_cast<std::uint8_t>(block);
  p.key_bits = static_cast<std::uint16_t>(key);
  return p;
}

TEST(OreParams, AcceptsAllSupportedSettings) {
  OreKey k256 = OreKey::setup(params_of(16, 256));
  OreKey k128 = OreKey::setup(params_of(16, 128));
  EXPECT_EQ(k256.prf_key().size(), 32u);
  EXPECT_EQ(k128.prf_key().size(), 16u);
  EXPECT_EQ(OreKey::setup(params_of(16, 192)).prf_key().size(), 24u);
}

TEST(OreParams, RejectsInvalid) {
  for (int block : {0, 1, 3, 5, 6, 32}) {
    try {
      OreKey::setup(params_of(block, 256));
      FAIL() << "block " << block << " accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parameter);
    }
  }
  EXPECT_THROW(OreKey::setup(params_of(16, 100)), Error);
  OreParams bad_domain = params_of(16, 256);
  bad_domain.domain_bits = 64;
  EXPECT_THROW(bad_domain.validate(), Error);
  EXPECT_THROW(OreKey::from_bytes(params_of(8, 128), Bytes(32)), Error);
}

TEST(OreParams, BlockCountAndSizes) {
  EXPECT_EQ(params_of(2, 128).num_blocks(), 16u);
  EXPECT_EQ(params_of(16, 128).num_blocks(), 2u);
  EXPECT_EQ(params_of(8, 256).left_bytes(), 4u * 18u);
  EXPECT_EQ(params_of(8, 256).right_bytes(), 16u + 4u * 64u);
  EXPECT_EQ(params_of(16, 256).right_bytes(), 16u + 2u * 16384u);
}

TEST(OreSetup, SeedIsDeterministic) {
  OreParams p = params_of(8, 256);
  OreKey a = OreKey::setup(p, 42);
  OreKey b = OreKey::setup(p, 42);
  OreKey c = OreKey::setup(p, 43);
  EXPECT_TRUE(std::equal(a.prf_key().begin(), a.prf_key().end(),
                         b.prf_key().begin(), b.prf_key().end()));
  EXPECT_FALSE(std::equal(a.prf_key().begin(), a.prf_key().end(),
                          c.prf_key().begin(), c.prf_key().end()));
  Nonce n{};
  n[3] = 9;
  EXPECT_EQ(encrypt(a, 1234, Parts::full, n), encrypt(b, 1234, Parts::full, n));
}

TEST(OreSetup, UnseededKeysDiffer) {
  OreParams p = params_of(8, 128);
  OreKey a = OreKey::setup(p);
  OreKey b = OreKey::setup(p);
  EXPECT_FALSE(std::equal(a.prf_key().begin(), a.prf_key().end(),
                          b.prf_key().begin(), b.prf_key().end()));
}

TEST(OreCompare, ExampleValuesAreOrdered) {
  OreKey k = OreKey::setup(params_of(16, 256), 1);
  const std::uint32_t sorted[] = {7, 13, 21, 32, 53};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_EQ(compare(encrypt(k, sorted[i]), encrypt(k, sorted[j])),
                sign_of(i - j))
          << sorted[i] << " vs " << sorted[j];
    }
  }
}

TEST(OreCompare, EqualPlaintextsDistinctBitsCompareZero) {
  OreKey k = OreKey::setup(params_of(8, 256), 2);
  OreCiphertext a = encrypt(k, 0);
  OreCiphertext b = encrypt(k, 0);
  EXPECT_NE(a.serialize(), b.serialize());
  EXPECT_EQ(compare(a, b), 0);
  EXPECT_EQ(compare(b, a), 0);
  EXPECT_EQ(compare(a, a), 0);
}

class OreAllParams : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(OreAllParams, RandomPairsMatchSign) {
  auto [block, key] = GetParam();
  OreKey k = OreKey::setup(params_of(block, key), 7);
  std::mt19937_64 rng(block * 1000 + key);
  // Small blocks are cheap; large ones build 2^16-slot tables per block.
  const int pairs = block == 16 ? 60 : 1000;
  for (int t = 0; t < pairs; ++t) {
    std::uint32_t x = static_cast<std::uint32_t>(rng());
    std::uint32_t y = static_cast<std::uint32_t>(rng());
    if (t % 4 == 1) y = x;
    if (t % 4 == 2) y = x ^ (1u << (rng() % 32));
    OreCiphertext cx = encrypt(k, x);
    OreCiphertext cy = encrypt(k, y);
    int want = sign_of(std::int64_t{x} - std::int64_t{y});
    ASSERT_EQ(compare(cx, cy), want) << x << " " << y;
    ASSERT_EQ(compare(cy, cx), -want) << x << " " << y;
  }
}

TEST_P(OreAllParams, CiphertextSizeIsConstant) {
  auto [block, key] = GetParam();
  OreParams p = params_of(block, key);
  OreKey k = OreKey::setup(p, 8);
  for (std::uint32_t m : {0u, 1u, 0xffffffffu, 0x7fffffffu, 123456u}) {
    EXPECT_EQ(encrypt(k, m).serialize().size(),
              3 + 8 + p.left_bytes() + p.right_bytes());
    EXPECT_EQ(encrypt(k, m, Parts::left_only).serialize().size(),
              3 + 8 + p.left_bytes());
    EXPECT_EQ(encrypt(k, m, Parts::right_only).serialize().size(),
              3 + 8 + p.right_bytes());
  }
}

TEST_P(OreAllParams, LeftRightRolesCompare) {
  auto [block, key] = GetParam();
  OreKey k = OreKey::setup(params_of(block, key), 9);
  std::mt19937_64 rng(block + key);
  for (int t = 0; t < 20; ++t) {
    std::uint32_t x = static_cast<std::uint32_t>(rng() >> 33);
    std::uint32_t y = t % 3 == 0 ? x : static_cast<std::uint32_t>(rng() >> 33);
    int want = sign_of(std::int64_t{x} - std::int64_t{y});
    OreCiphertext lx = encrypt(k, x, Parts::left_only);
    OreCiphertext ry = encrypt(k, y, Parts::right_only);
    EXPECT_EQ(compare(lx, ry), want);
    EXPECT_EQ(compare(ry, lx), -want);
    EXPECT_EQ(compare(lx, encrypt(k, y)), want);
  }
}

TEST_P(OreAllParams, BatchLeftMatchesPointwise) {
  auto [block, key] = GetParam();
  OreKey k = OreKey::setup(params_of(block, key), 10);
  std::vector<std::uint32_t> ms = {0, 1, 2, 0xffffffffu, 0x80000000u};
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) ms.push_back(static_cast<std::uint32_t>(rng()));
  std::vector<OreCiphertext> batch = encrypt_left_many(k, ms);
  ASSERT_EQ(batch.size(), ms.size());
  for (std::size_t i = 0; i < ms.size(); i += 97) {
    EXPECT_EQ(batch[i], encrypt(k, ms[i], Parts::left_only)) << ms[i];
  }
}

TEST_P(OreAllParams, DecidingBlockIsFirstDifferingBlock) {
  auto [block, key] = GetParam();
  OreParams p = params_of(block, key);
  OreKey k = OreKey::setup(p, 12);
  std::mt19937_64 rng(13);
  for (int t = 0; t < 40; ++t) {
    std::uint32_t x = static_cast<std::uint32_t>(rng());
    // Flip one bit so every block index gets exercised.
    std::uint32_t y = t == 0 ? x : x ^ (1u << (rng() % 32));
    CompareTrace tr = compare_traced(encrypt(k, x, Parts::left_only),
                                     encrypt(k, y, Parts::right_only));
    EXPECT_EQ(tr.deciding_block, first_differing_block(p, x, y));
    EXPECT_EQ(tr.result, sign_of(std::int64_t{x} - std::int64_t{y}));
  }
}

INSTANTIATE_TEST_SUITE_P(
    Grid, OreAllParams,
    ::testing::Combine(::testing::Values(2, 4, 8, 16),
                       ::testing::Values(128, 192, 256)));

TEST_P(OreAllParams, VectorKernelMatchesPortable) {
  auto [block, key] = GetParam();
  OreKey k = OreKey::setup(params_of(block, key), 21);
  std::mt19937_64 rng(block * 1000 + key);
  for (int i = 0; i < 6; ++i) {
    std::uint32_t m = i == 0 ? 0 : (i == 1 ? 0xffffffffu : static_cast<std::uint32_t>(rng()));
    Nonce n{};
    for (auto& b : n) b = static_cast<std::uint8_t>(rng());
    detail::set_vector_kernel(false);
    OreCiphertext portable = encrypt(k, m, Parts::right_only, n);
    detail::set_vector_kernel(true);
    OreCiphertext vec = encrypt(k, m, Parts::right_only, n);
    ASSERT_EQ(portable, vec) << "m=" << m;
  }
}

TEST(OreCompare, ExhaustiveEightBitSubdomain) {
  OreKey k = OreKey::setup(params_of(4, 128), 14);
  std::vector<OreCiphertext> cts;
  for (std::uint32_t x = 0; x < 256; ++x) cts.push_back(encrypt(k, x << 20));
  for (int x = 0; x < 256; ++x) {
    for (int y = 0; y < 256; ++y) {
      ASSERT_EQ(compare(cts[x], cts[y]), sign_of(x - y)) << x << " " << y;
    }
  }
}

TEST(OreCompare, FirstDifferingBlockReference) {
  OreParams p = params_of(8, 128);
  EXPECT_EQ(first_differing_block(p, 5, 5), -1);
  EXPECT_EQ(first_differing_block(p, 0x01000000, 0), 0);
  EXPECT_EQ(first_differing_block(p, 0x00010000, 0), 1);
  EXPECT_EQ(first_differing_block(p, 0x00000100, 0), 2);
  EXPECT_EQ(first_differing_block(p, 1, 0), 3);
}

TEST(OreCompare, CrossKeyDoesNotThrow) {
  OreParams p = params_of(8, 128);
  OreKey a = OreKey::setup(p, 1);
  OreKey b = OreKey::setup(p, 2);
  int r = compare(encrypt(a, 10), encrypt(b, 20));
  EXPECT_TRUE(r >= -1 && r <= 1);
}

TEST(OreFormat, MismatchedParamsRejected) {
  OreKey a = OreKey::setup(params_of(8, 128), 1);
  OreKey b = OreKey::setup(params_of(4, 128), 1);
  try {
    compare(encrypt(a, 1), encrypt(b, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::format);
  }
}

TEST(OreFormat, TwoLeftOnlyCannotCompare) {
  OreKey a = OreKey::setup(params_of(8, 128), 1);
  EXPECT_THROW(compare(encrypt(a, 1, Parts::left_only),
                       encrypt(a, 2, Parts::left_only)),
               Error);
  EXPECT_THROW(compare(encrypt(a, 1, Parts::right_only),
                       encrypt(a, 2, Parts::right_only)),
               Error);
}

TEST(OreFormat, SerializeRoundTrip) {
  OreKey k = OreKey::setup(params_of(8, 192), 3);
  for (Parts parts : {Parts::full, Parts::left_only, Parts::right_only}) {
    OreCiphertext ct = encrypt(k, 99, parts);
    Bytes bytes = ct.serialize();
    EXPECT_EQ(bytes[0], 32);
    EXPECT_EQ(bytes[1], 8);
    EXPECT_EQ(bytes[2], 24);
    OreCiphertext back = OreCiphertext::deserialize(bytes);
    EXPECT_EQ(back, ct);
    EXPECT_EQ(back.parts(), parts);
  }
}

TEST(OreFormat, MalformedRejected) {
  OreKey k = OreKey::setup(params_of(8, 128), 3);
  Bytes bytes = encrypt(k, 5).serialize();
  Bytes truncated(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(OreCiphertext::deserialize(truncated), Error);
  Bytes bad_header = bytes;
  bad_header[1] = 5;
  EXPECT_THROW(OreCiphertext::deserialize(bad_header), Error);
  // Shorten the left part by rewriting its length prefix.
  Bytes bad_len = bytes;
  bad_len[6] -= 1;
  EXPECT_THROW(OreCiphertext::deserialize(bad_len), Error);
  Bytes trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(OreCiphertext::deserialize(trailing), Error);
}

TEST(OreEncrypt, ExplicitNonceIsDeterministic) {
  OreKey k = OreKey::setup(params_of(16, 256), 5);
  Nonce n{};
  n[0] = 1;
  OreCiphertext a = encrypt(k, 21, Parts::right_only, n);
  OreCiphertext b = encrypt(k, 21, Parts::right_only, n);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::equal(a.nonce().begin(), a.nonce().end(), n.begin()));
}

}  // namespace
}  // namespace scale::ore
