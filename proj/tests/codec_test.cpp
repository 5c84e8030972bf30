#include "scale/codec.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "scale/error.hpp"
#include "scale/owner_client.hpp"
#include "scale/query_engine.hpp"
#include "test_support.hpp"

namespace scale {
namespace {

using testing::fast_params;
using testing::test_mk;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

bool contains(const Bytes& hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) !=
         hay.end();
}

std::vector<std::uint32_t> random_query(std::mt19937_64& rng, std::size_t d,
                                        std::uint32_t range) {
  std::vector<std::uint32_t> q(d);
  for (auto& v : q) v = static_cast<std::uint32_t>(rng() % range);
  return q;
}

TEST(Codec, UploadRoundTrip) {
  std::mt19937_64 rng(1);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 9, 3, 50),
                                      test_mk(), fast_params());
  Bytes enc = codec::encode_upload(bundle);
  EXPECT_EQ(enc[0], codec::kProtocolVersion);
  EXPECT_EQ(codec::decode_upload(enc), bundle);
}

TEST(Codec, QueryResultInsertDeleteRoundTrip) {
  std::mt19937_64 rng(2);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 7, 2, 50),
                                      test_mk(), fast_params());
  EncryptedQuery q = encrypt_query({10, 20}, st.keys());
  EXPECT_EQ(codec::decode_query(codec::encode_query(q)), q);

  auto db = CloudDatabase::ingest(UploadBundle(bundle), IndexVariant::avl);
  auto results = secure_skyline(*db, q);
  ASSERT_FALSE(results.empty());
  EXPECT_EQ(codec::decode_results(codec::encode_results(results)), results);
  EXPECT_TRUE(codec::decode_results(codec::encode_results({})).empty());

  InsertBundle ins = prepare_insert({99, {0, 49}}, st);
  EXPECT_EQ(codec::decode_insert(codec::encode_insert(ins)), ins);

  DeleteRequest del{0xfedcba9876543210ull};
  Bytes del_bytes = codec::encode_delete(del);
  EXPECT_EQ(codec::decode_delete(del_bytes), del);
}

TEST(Codec, DeleteEncodingIsBigEndian) {
  Bytes b = codec::encode_delete({0x0102030405060708ull});
  ASSERT_EQ(b.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(b[i], i + 1);
}

TEST(Codec, RejectsTruncationTrailingBytesAndVersion) {
  std::mt19937_64 rng(3);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 4, 2, 50),
                                      test_mk(), fast_params());
  Bytes enc = codec::encode_upload(bundle);
  for (std::size_t cut = 0; cut < enc.size(); cut += 7) {
    ErrorCode c = code_of([&] {
      codec::decode_upload(ByteView(enc.data(), cut));
    });
    ASSERT_TRUE(c == ErrorCode::format || c == ErrorCode::protocol)
        << "cut " << cut << " gave " << error_code_name(c);
  }
  Bytes longer = enc;
  longer.push_back(0);
  EXPECT_EQ(code_of([&] { codec::decode_upload(longer); }), ErrorCode::format);
  Bytes wrong = enc;
  wrong[0] = 2;
  EXPECT_EQ(code_of([&] { codec::decode_upload(wrong); }), ErrorCode::protocol);

  Bytes q = codec::encode_query(encrypt_query({1, 2}, st.keys()));
  q.resize(q.size() - 1);
  EXPECT_EQ(code_of([&] { codec::decode_query(q); }), ErrorCode::format);
}

TEST(Codec, HostileCountsDoNotAllocate) {
  // Version, params, d, then a record count of 2^32-1 with no body.
  Bytes b{codec::kProtocolVersion, 32, 8, 16, 0, 0, 0, 1, 0xff, 0xff, 0xff,
          0xff};
  EXPECT_EQ(code_of([&] { codec::decode_upload(b); }), ErrorCode::format);
}

class SnapshotTest : public ::testing::TestWithParam<IndexVariant> {};

TEST_P(SnapshotTest, RestoredDatabaseAnswersIdentically) {
  std::mt19937_64 rng(10 + static_cast<unsigned>(GetParam()));
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 40, 3, 90),
                                      test_mk(), fast_params());
  auto db = CloudDatabase::ingest(std::move(bundle), GetParam());
  for (std::uint64_t id = 100; id < 110; ++id) {
    db->apply_insert(prepare_insert(
        {id, {static_cast<std::uint32_t>(rng() % 90), 5, 7}}, st));
  }
  db->apply_delete(prepare_delete(3, st));

  Bytes snap = codec::save_snapshot(*db);
  auto back = codec::load_snapshot(snap);
  EXPECT_EQ(back->variant(), GetParam());
  EXPECT_EQ(back->n(), db->n());
  EXPECT_EQ(back->order(), db->order());
  // Byte-stable: saving the restored image reproduces the file.
  EXPECT_EQ(codec::save_snapshot(*back), snap);

  for (int i = 0; i < 20; ++i) {
    EncryptedQuery q = encrypt_query(random_query(rng, 3, 100), st.keys());
    ASSERT_EQ(secure_skyline(*back, q), secure_skyline(*db, q));
  }

  // Maintenance keeps working on the restored trees.
  for (int op = 0; op < 30; ++op) {
    if (op % 3 == 0) {
      auto live = st.records();
      auto del = prepare_delete(live[rng() % live.size()].record_id, st);
      db->apply_delete(del);
      back->apply_delete(del);
    } else {
      auto ins = prepare_insert({1000 + static_cast<std::uint64_t>(op),
                                 {static_cast<std::uint32_t>(rng() % 90),
                                  static_cast<std::uint32_t>(rng() % 90),
                                  static_cast<std::uint32_t>(rng() % 90)}},
                                st);
      db->apply_insert(InsertBundle(ins));
      back->apply_insert(std::move(ins));
    }
    for (std::uint32_t j = 0; j < 3; ++j) {
      for (const auto& [ooc, tree] : back->forest(j)) {
        std::string why;
        ASSERT_TRUE(tree.audit(&why)) << why;
        ASSERT_TRUE(tree.audit_order([&](const SumNode& a, const SumNode& b) {
          return back->node_compare(j, a, b);
        }));
      }
      ASSERT_EQ(back->pair_count(j), st.n() * (st.n() - 1) / 2);
    }
  }
  for (int i = 0; i < 20; ++i) {
    auto qp = random_query(rng, 3, 100);
    EncryptedQuery q = encrypt_query(qp, st.keys());
    auto got = decrypt_results(secure_skyline(*back, q), st.keys().payload_key());
    ASSERT_EQ(testing::ids_of(got), dynamic_skyline_bnl(st.records(), qp));
  }
}

TEST_P(SnapshotTest, LoadsIntoAnotherIndexVariant) {
  std::mt19937_64 rng(30);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 30, 2, 60),
                                      test_mk(), fast_params());
  auto db = CloudDatabase::ingest(std::move(bundle), IndexVariant::avl);
  auto other = codec::load_snapshot(codec::save_snapshot(*db), GetParam());
  EXPECT_EQ(other->variant(), GetParam());
  for (std::uint32_t j = 0; j < 2; ++j) {
    for (const auto& [ooc, tree] : other->forest(j)) {
      std::string why;
      ASSERT_TRUE(tree.audit(&why)) << why;
    }
  }
  other->apply_insert(prepare_insert({77, {1, 2}}, st));
  for (int i = 0; i < 10; ++i) {
    auto qp = random_query(rng, 2, 70);
    auto got = decrypt_results(
        secure_skyline(*other, encrypt_query(qp, st.keys())),
        st.keys().payload_key());
    ASSERT_EQ(testing::ids_of(got), dynamic_skyline_bnl(st.records(), qp));
  }
}

TEST_P(SnapshotTest, EmptyForestAndSingleRecord) {
  auto [bundle, st] = encrypt_dataset({{1, {5}}, {2, {6}}}, test_mk(),
                                      fast_params());
  auto db = CloudDatabase::ingest(std::move(bundle), GetParam());
  db->apply_delete(prepare_delete(2, st));
  ASSERT_EQ(db->total_pairs(), 0u);
  auto back = codec::load_snapshot(codec::save_snapshot(*db));
  EXPECT_EQ(back->n(), 1u);
  EXPECT_TRUE(back->forest(0).empty());
  back->apply_insert(prepare_insert({3, {9}}, st));
  EXPECT_EQ(back->total_pairs(), 1u);
}

TEST_P(SnapshotTest, CorruptImagesAreRejected) {
  std::mt19937_64 rng(20);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 8, 2, 40),
                                      test_mk(), fast_params());
  auto db = CloudDatabase::ingest(std::move(bundle), GetParam());
  Bytes snap = codec::save_snapshot(*db);

  for (std::size_t cut = 0; cut < snap.size(); cut += 13) {
    ErrorCode c = code_of([&] {
      codec::load_snapshot(ByteView(snap.data(), cut));
    });
    ASSERT_TRUE(c == ErrorCode::format || c == ErrorCode::protocol)
        << "cut " << cut << " gave " << error_code_name(c);
  }
  Bytes bad = snap;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { codec::load_snapshot(bad); }), ErrorCode::format);
  bad = snap;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { codec::load_snapshot(bad); }), ErrorCode::format);

  // Re-point the last tree node at an id the database never saw.
  bad = snap;
  const auto& last_tree = db->forest(1).rbegin()->second;
  const SumNode* last = nullptr;
  last_tree.for_each([&](const SumNode& n) { last = &n; });
  std::size_t node_bytes = 16 + last->sum_ct.serialized_size();
  std::size_t at = bad.size() - node_bytes;
  ASSERT_EQ(get_be64(bad.data() + at), last->lo_id);
  put_be64(bad.data() + at, 777777);
  EXPECT_NE(code_of([&] { codec::load_snapshot(bad); }), ErrorCode::internal);
}

INSTANTIATE_TEST_SUITE_P(Variants, SnapshotTest,
                         ::testing::Values(IndexVariant::linked_list,
                                           IndexVariant::avl,
                                           IndexVariant::red_black),
                         [](const auto& info) {
                           return std::string(index_variant_name(info.param));
                         });

// Planted attribute values never appear on the cloud side in either byte
// order, and neither does any key.
TEST(CloudState, HoldsNoPlaintextOrKeys) {
  const std::vector<std::uint32_t> sentinels{0x5ca1ab1e, 0x0badcafe, 0x7e57da7a};
  std::vector<PlainRecord> rs;
  for (std::uint64_t i = 0; i < 12; ++i) {
    rs.push_back({i + 1,
                  {sentinels[i % 3] - static_cast<std::uint32_t>(i),
                   sentinels[(i + 1) % 3] + static_cast<std::uint32_t>(i)}});
  }
  MasterKey mk = test_mk(9);
  auto [bundle, st] = encrypt_dataset(rs, mk, fast_params());
  Bytes upload = codec::encode_upload(bundle);
  auto db = CloudDatabase::ingest(std::move(bundle), IndexVariant::avl);
  PlainRecord extra{50, {sentinels[0] + 100, sentinels[1] + 100}};
  InsertBundle ins = prepare_insert(extra, st);
  Bytes ins_bytes = codec::encode_insert(ins);
  db->apply_insert(std::move(ins));
  Bytes snap = codec::save_snapshot(*db);
  Bytes query = codec::encode_query(encrypt_query(rs[0].attrs, st.keys()));

  std::vector<Bytes> secrets;
  auto all = rs;
  all.push_back(extra);
  for (const auto& r : all) {
    for (std::uint32_t v : r.attrs) {
      Bytes be(4), le(4);
      put_be32(be.data(), v);
      for (int i = 0; i < 4; ++i) le[i] = be[3 - i];
      secrets.push_back(be);
      secrets.push_back(le);
    }
  }
  secrets.emplace_back(mk.begin(), mk.end());
  const PayloadKey& pk = st.keys().payload_key();
  secrets.emplace_back(pk.begin(), pk.end());
  for (std::uint32_t j = 0; j < 2; ++j) {
    ByteView ck = st.keys().column_key(j).prf_key();
    secrets.emplace_back(ck.begin(), ck.end());
    for (std::uint32_t ooc : st.keys().active(j)) {
      ByteView ok = st.keys().ooc_key(j, ooc).prf_key();
      secrets.emplace_back(ok.begin(), ok.end());
    }
  }
  for (const Bytes* blob : {&upload, &ins_bytes, &snap, &query}) {
    for (const Bytes& s : secrets) {
      ASSERT_FALSE(contains(*blob, s)) << "leaked " << to_hex(s);
    }
  }
}

}  // namespace
}  // namespace scale
