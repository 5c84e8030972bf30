#include "scale/key_schedule.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <utility>

#include "scale/error.hpp"
#include "oracles.hpp"

namespace scale {
namespace {

using testing::ceil_formula;
using testing::min_chain_cover;

ore::OreParams small_params() {
  ore::OreParams p;
  p.block_bits = 8;
  p.key_bits = 256;
  return p;
}

MasterKey fixed_mk(std::uint8_t fill) {
  MasterKey mk;
  mk.fill(fill);
  return mk;
}

Bytes key_bytes(const ore::OreKey& k) {
  return Bytes(k.prf_key().begin(), k.prf_key().end());
}

// Literal border peeling of the upper triangle: class t takes what is left
// of row t and of column n+1-t.
std::vector<std::vector<int>> peel(int n) {
  std::vector<std::vector<int>> cls(n + 1, std::vector<int>(n + 1, 0));
  int remaining = n * (n - 1) / 2;
  for (int t = 1; remaining > 0; ++t) {
    for (int i = 1; i <= n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        if (cls[i][j] == 0 && (i == t || j == n + 1 - t)) {
          cls[i][j] = t;
          --remaining;
        }
      }
    }
  }
  return cls;
}

TEST(Kappa, ExampleValues) {
  EXPECT_EQ(kappa(5), 2u);
  EXPECT_EQ(kappa(2), 1u);
  EXPECT_EQ(kappa(3), 1u);
  EXPECT_EQ(kappa(2500), 1250u);
}

TEST(Kappa, RejectsTinyDomain) {
  for (std::uint64_t n : {0u, 1u}) {
    try {
      kappa(n);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::domain);
    }
  }
}

TEST(Kappa, FormulaAuditToOneMillion) {
  for (std::uint64_t n = 2; n <= 1'000'000; ++n) {
    ASSERT_EQ(kappa(n), ceil_formula(n)) << "n=" << n;
  }
}

TEST(Kappa, EqualsMinimumChainCover) {
  for (int n = 2; n <= 12; ++n) {
    EXPECT_EQ(kappa(n), min_chain_cover(n)) << "n=" << n;
  }
}

TEST(OocOfPair, BorderExamples) {
  EXPECT_EQ(ooc_of_pair(1, 5, 5), 1u);
  EXPECT_EQ(ooc_of_pair(2, 5, 5), 1u);
  EXPECT_EQ(ooc_of_pair(2, 4, 5), 2u);
  EXPECT_EQ(ooc_of_pair(2, 3, 5), 2u);
  EXPECT_THROW(ooc_of_pair(3, 3, 5), Error);
  EXPECT_THROW(ooc_of_pair(0, 3, 5), Error);
  EXPECT_THROW(ooc_of_pair(2, 6, 5), Error);
}

TEST(OocOfPair, MatchesBorderPeeling) {
  for (int n = 2; n <= 10; ++n) {
    auto cls = peel(n);
    for (int i = 1; i <= n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        EXPECT_EQ(ooc_of_pair(i, j, n), static_cast<std::uint32_t>(cls[i][j]))
            << "n=" << n << " pair " << i << "," << j;
      }
    }
  }
}

TEST(OocOfPair, ClassesAreChainsOfPredictedSize) {
  for (std::uint64_t n = 2; n <= 200; ++n) {
    std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> cls(
        kappa(n) + 1);
    for (std::uint64_t i = 1; i <= n; ++i) {
      for (std::uint64_t j = i + 1; j <= n; ++j) {
        std::uint32_t t = ooc_of_pair(i, j, n);
        ASSERT_GE(t, 1u);
        ASSERT_LE(t, kappa(n));
        cls[t].emplace_back(i, j);
      }
    }
    for (std::uint32_t t = 1; t <= kappa(n); ++t) {
      ASSERT_EQ(cls[t].size(), initial_class_size(n, t)) << n << " " << t;
      ASSERT_EQ(cls[t].size(), 2 * n - 3 - 4 * (t - 1));
      auto& c = cls[t];
      std::sort(c.begin(), c.end());
      for (std::size_t k = 1; k < c.size(); ++k) {
        ASSERT_LE(c[k - 1].second, c[k].second) << "not a chain";
      }
    }
    EXPECT_EQ(initial_class_size(n, kappa(n) + 1), 0u);
  }
}

TEST(KeyDerivation, ColumnKeysDeterministicAndSeparated) {
  MasterKey mk = fixed_mk(7);
  auto p = small_params();
  EXPECT_EQ(key_bytes(derive_column_key(mk, 1, p)),
            key_bytes(derive_column_key(mk, 1, p)));
  EXPECT_NE(key_bytes(derive_column_key(mk, 1, p)),
            key_bytes(derive_column_key(mk, 2, p)));
}

TEST(KeyDerivation, OocKeysSeparatedFromColumns) {
  MasterKey mk = fixed_mk(9);
  auto p = small_params();
  EXPECT_NE(key_bytes(derive_ooc_key(mk, 1, 1, p)),
            key_bytes(derive_ooc_key(mk, 1, 2, p)));
  EXPECT_NE(key_bytes(derive_ooc_key(mk, 1, 1, p)),
            key_bytes(derive_ooc_key(mk, 2, 1, p)));
  Bytes col = key_bytes(derive_column_key(mk, 1, p));
  for (std::uint32_t t = 1; t <= 64; ++t) {
    EXPECT_NE(key_bytes(derive_ooc_key(mk, 1, t, p)), col);
  }
}

TEST(KeyDerivation, KeyLengthFollowsParams) {
  MasterKey mk = fixed_mk(1);
  auto p = small_params();
  p.key_bits = 128;
  EXPECT_EQ(derive_column_key(mk, 0, p).prf_key().size(), 16u);
  p.key_bits = 192;
  EXPECT_EQ(derive_ooc_key(mk, 0, 1, p).prf_key().size(), 24u);
}

TEST(KeyDerivation, NoCollisionsOverTenThousandKeys) {
  std::mt19937_64 rng(5);
  auto p = small_params();
  std::set<Bytes> seen;
  for (int i = 0; i < 10'000; ++i) {
    MasterKey mk;
    for (auto& b : mk) b = static_cast<std::uint8_t>(rng());
    std::uint32_t dim = static_cast<std::uint32_t>(rng() % 8);
    Bytes k = (i % 2 == 0)
                  ? key_bytes(derive_column_key(mk, dim, p))
                  : key_bytes(derive_ooc_key(
                        mk, dim, static_cast<std::uint32_t>(rng() % 1000 + 1), p));
    EXPECT_TRUE(seen.insert(k).second) << "collision at " << i;
  }
  MasterKey mk = fixed_mk(3);
  std::set<Bytes> labels;
  for (std::uint32_t dim = 0; dim < 10; ++dim) {
    labels.insert(key_bytes(derive_column_key(mk, dim, p)));
    for (std::uint32_t t = 1; t <= 100; ++t) {
      labels.insert(key_bytes(derive_ooc_key(mk, dim, t, p)));
    }
  }
  EXPECT_EQ(labels.size(), 10u * 101u);
}

TEST(KeyDerivation, PayloadKeyDiffersFromOthers) {
  MasterKey mk = fixed_mk(4);
  PayloadKey pk = derive_payload_key(mk);
  EXPECT_EQ(pk, derive_payload_key(mk));
  EXPECT_NE(pk, derive_payload_key(fixed_mk(5)));
  Bytes pkb(pk.begin(), pk.end());
  EXPECT_NE(pkb, key_bytes(derive_column_key(mk, 0, small_params())));
}

TEST(KeyDerivation, GeneratedMasterKeysDiffer) {
  EXPECT_NE(generate_master_key(), generate_master_key());
}

TEST(KeySchedule, InitialRegistry) {
  auto ks = KeySchedule::create(fixed_mk(2), small_params(), 5, 3);
  EXPECT_EQ(ks.d(), 3u);
  EXPECT_EQ(ks.n(), 5u);
  for (std::uint32_t j = 0; j < 3; ++j) {
    EXPECT_EQ(ks.active(j), (std::vector<std::uint32_t>{1, 2}));
    EXPECT_EQ(ks.next_ooc_id(j), 3u);
  }
  EXPECT_EQ(ks.total_active(), 6u);
  EXPECT_TRUE(ks.is_active(0, 2));
  EXPECT_FALSE(ks.is_active(0, 3));
  EXPECT_EQ(key_bytes(ks.ooc_key(1, 2)),
            key_bytes(derive_ooc_key(fixed_mk(2), 1, 2, small_params())));
  EXPECT_EQ(key_bytes(ks.column_key(2)),
            key_bytes(derive_column_key(fixed_mk(2), 2, small_params())));
}

TEST(KeySchedule, UnknownOocAndDimension) {
  auto ks = KeySchedule::create(fixed_mk(2), small_params(), 5, 1);
  try {
    ks.ooc_key(0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_ooc);
  }
  EXPECT_THROW(ks.column_key(1), Error);
  EXPECT_THROW(ks.active(1), Error);
}

TEST(KeySchedule, RegistryGrowsDensely) {
  auto ks = KeySchedule::create(fixed_mk(2), small_params(), 5, 2);
  EXPECT_THROW(ks.register_ooc(0, 2), Error);  // duplicate
  EXPECT_THROW(ks.register_ooc(0, 4), Error);  // gap
  ks.register_ooc(0, 3);
  EXPECT_TRUE(ks.is_active(0, 3));
  EXPECT_FALSE(ks.is_active(1, 3));
  EXPECT_EQ(ks.next_ooc_id(0), 4u);
  EXPECT_EQ(key_bytes(ks.ooc_key(0, 3)),
            key_bytes(derive_ooc_key(fixed_mk(2), 0, 3, small_params())));
}

TEST(KeySchedule, SerializeRoundTripReproducesKeys) {
  auto ks = KeySchedule::create(fixed_mk(8), small_params(), 9, 2);
  ks.register_ooc(1, 5);
  Bytes blob = ks.serialize();
  auto back = KeySchedule::parse(blob, small_params());
  EXPECT_EQ(back.master_key(), ks.master_key());
  EXPECT_EQ(back.n(), 9u);
  EXPECT_EQ(back.d(), 2u);
  EXPECT_EQ(back.active(1), ks.active(1));
  EXPECT_EQ(key_bytes(back.ooc_key(1, 5)), key_bytes(ks.ooc_key(1, 5)));
  EXPECT_EQ(key_bytes(back.column_key(0)), key_bytes(ks.column_key(0)));
  EXPECT_EQ(back.payload_key(), ks.payload_key());
  EXPECT_EQ(back.serialize(), blob);
}

TEST(KeySchedule, ParseRejectsTruncation) {
  auto ks = KeySchedule::create(fixed_mk(8), small_params(), 9, 2);
  Bytes blob = ks.serialize();
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, blob.size() - 1}) {
    Bytes part(blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(KeySchedule::parse(part, small_params()), Error) << cut;
  }
  Bytes longer = blob;
  longer.push_back(0);
  EXPECT_THROW(KeySchedule::parse(longer, small_params()), Error);
}

}  // namespace
}  // namespace scale
