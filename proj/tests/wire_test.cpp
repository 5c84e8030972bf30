#include "scale/wire.hpp"

#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <thread>

#include "scale/codec.hpp"
#include "scale/error.hpp"
#include "scale/owner_client.hpp"
#include "scale/query_engine.hpp"
#include "test_support.hpp"

namespace scale::wire {
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

std::vector<std::uint32_t> random_query(std::mt19937_64& rng, std::size_t d) {
  std::vector<std::uint32_t> q(d);
  for (auto& v : q) v = static_cast<std::uint32_t>(rng() % 120);
  return q;
}

// Server on an ephemeral loopback port, stopped on scope exit.
struct LiveServer {
  Service service;
  Server server;
  explicit LiveServer(std::uint32_t max_frame = kDefaultMaxFrame)
      : server(service, max_frame) {
    server.listen("127.0.0.1", 0);
    server.start();
  }
  std::unique_ptr<SocketTransport> connect() {
    return SocketTransport::connect("127.0.0.1", server.port());
  }
};

TEST(Frames, ErrPayloadRoundTrip) {
  Frame f = make_err(ErrorCode::unknown_id, "no such record");
  EXPECT_EQ(f.type, MsgType::err);
  auto [code, reason] = parse_err(f.payload);
  EXPECT_EQ(code, ErrorCode::unknown_id);
  EXPECT_EQ(reason, "no such record");
  EXPECT_EQ(f.payload[0], 0);
  EXPECT_EQ(f.payload[1], static_cast<std::uint8_t>(ErrorCode::unknown_id));
}

TEST(Frames, AddressParsing) {
  EXPECT_EQ(parse_address("127.0.0.1:7000"),
            (std::pair<std::string, std::uint16_t>{"127.0.0.1", 7000}));
  EXPECT_EQ(parse_address("[::1]:80"),
            (std::pair<std::string, std::uint16_t>{"::1", 80}));
  EXPECT_EQ(code_of([] { parse_address("localhost"); }), ErrorCode::parameter);
  EXPECT_EQ(code_of([] { parse_address("h:99999"); }), ErrorCode::parameter);
  EXPECT_EQ(code_of([] { parse_address("h:12x"); }), ErrorCode::parameter);
}

TEST(Service, QueryBeforeUploadIsEmptyResult) {
  Service svc;
  auto [bundle, st] = encrypt_dataset({{1, {3}}, {2, {8}}}, test_mk(),
                                      fast_params());
  Frame resp = svc.handle({MsgType::query,
                           codec::encode_query(encrypt_query({4}, st.keys()))});
  ASSERT_EQ(resp.type, MsgType::result);
  EXPECT_TRUE(codec::decode_results(resp.payload).empty());
  Frame del = svc.handle({MsgType::del, codec::encode_delete({1})});
  ASSERT_EQ(del.type, MsgType::err);
  EXPECT_EQ(parse_err(del.payload).first, ErrorCode::unknown_id);
  Frame bogus = svc.handle({MsgType::result, {}});
  ASSERT_EQ(bogus.type, MsgType::err);
  EXPECT_EQ(parse_err(bogus.payload).first, ErrorCode::protocol);
}

TEST(Loopback, EndToEndMatchesInProcessByteForByte) {
  std::mt19937_64 rng(5);
  auto records = testing::random_records(rng, 60, 3, 120);
  auto [bundle, st] = encrypt_dataset(records, test_mk(), fast_params());
  auto local = CloudDatabase::ingest(UploadBundle(bundle), IndexVariant::avl);

  LiveServer live;
  auto sock = live.connect();
  CountingTransport counter(*sock);
  Client client(counter);
  client.upload(bundle);
  EXPECT_EQ(counter.frames_sent(), 1u);
  EXPECT_EQ(counter.frames_received(), 1u);

  for (int i = 0; i < 25; ++i) {
    auto qp = random_query(rng, 3);
    EncryptedQuery q = encrypt_query(qp, st.keys());
    counter.reset();
    auto remote = client.query(q);
    // One request frame and one response frame per query.
    EXPECT_EQ(counter.frames_sent(), 1u);
    EXPECT_EQ(counter.frames_received(), 1u);
    auto in_process = secure_skyline(*local, q);
    ASSERT_EQ(codec::encode_results(remote), codec::encode_results(in_process));
    EXPECT_EQ(counter.bytes_received(),
              5 + codec::encode_results(in_process).size());
    auto plain = decrypt_results(remote, st.keys().payload_key());
    ASSERT_EQ(testing::ids_of(plain), dynamic_skyline_bnl(records, qp));
  }
}

TEST(Loopback, MaintenanceOverTheWire) {
  std::mt19937_64 rng(6);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 20, 2, 120),
                                      test_mk(), fast_params());
  LiveServer live;
  auto sock = live.connect();
  Client client(*sock);
  client.upload(bundle);
  std::uint64_t next = 100;
  for (int op = 0; op < 40; ++op) {
    if (op % 3 == 2) {
      auto live_recs = st.records();
      client.remove(
          prepare_delete(live_recs[rng() % live_recs.size()].record_id, st));
    } else {
      client.insert(prepare_insert({next++, random_query(rng, 2)}, st));
    }
    auto qp = random_query(rng, 2);
    auto got = decrypt_results(client.query(encrypt_query(qp, st.keys())),
                               st.keys().payload_key());
    ASSERT_EQ(testing::ids_of(got), dynamic_skyline_bnl(st.records(), qp));
  }
  auto db = live.service.database();
  for (std::uint32_t j = 0; j < 2; ++j) {
    EXPECT_EQ(db->pair_count(j), st.n() * (st.n() - 1) / 2);
  }
}

TEST(Loopback, ErrorsSurfaceWithCodesAndKeepConnection) {
  auto [bundle, st] = encrypt_dataset({{1, {3}}, {2, {8}}, {3, {5}}},
                                      test_mk(), fast_params());
  LiveServer live;
  auto sock = live.connect();
  Client client(*sock);
  client.upload(bundle);
  EXPECT_EQ(code_of([&] { client.remove({42}); }), ErrorCode::unknown_id);
  // A rejected request leaves the connection usable.
  auto res = client.query(encrypt_query({4}, st.keys()));
  EXPECT_EQ(res.size(), 2u);

  // Incomplete query: strip the doubled ciphertexts.
  EncryptedQuery partial = encrypt_query({4}, st.keys());
  partial.dbl_cts[0].clear();
  EXPECT_EQ(code_of([&] { client.query(partial); }),
            ErrorCode::incomplete_query);
  EXPECT_EQ(client.query(encrypt_query({4}, st.keys())).size(), 2u);
}

TEST(Loopback, MalformedPayloadGetsErrAndClose) {
  LiveServer live;
  auto sock = live.connect();
  sock->send(Frame{MsgType::query, Bytes{1, 2, 3}});
  Frame resp = sock->recv();
  ASSERT_EQ(resp.type, MsgType::err);
  EXPECT_EQ(parse_err(resp.payload).first, ErrorCode::format);
  EXPECT_EQ(code_of([&] { sock->recv(); }), ErrorCode::transport);
}

TEST(Loopback, UnknownTypeGetsErrAndClose) {
  LiveServer live;
  auto sock = live.connect();
  const std::uint8_t raw[5] = {0, 0, 0, 0, 0x42};
  ASSERT_EQ(::send(sock->fd(), raw, sizeof(raw), 0), 5);
  Frame resp = sock->recv();
  ASSERT_EQ(resp.type, MsgType::err);
  EXPECT_EQ(parse_err(resp.payload).first, ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { sock->recv(); }), ErrorCode::transport);
}

TEST(Loopback, OversizedFrameGetsErr) {
  LiveServer live(1024);
  auto sock = live.connect();
  // Header announcing 2000 payload bytes; the body never follows.
  const std::uint8_t raw[5] = {0, 0, 0x07, 0xd0, 0x02};
  ASSERT_EQ(::send(sock->fd(), raw, sizeof(raw), 0), 5);
  Frame resp = sock->recv();
  ASSERT_EQ(resp.type, MsgType::err);
  EXPECT_EQ(parse_err(resp.payload).first, ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { sock->recv(); }), ErrorCode::transport);
}

TEST(Loopback, ClientRejectsOversizedResponse) {
  int fds[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  SocketTransport a(fds[0], 16), b(fds[1]);
  b.send(Frame{MsgType::result, Bytes(17)});
  EXPECT_EQ(code_of([&] { a.recv(); }), ErrorCode::protocol);
}

TEST(Loopback, EightConcurrentClientsMatchSerial) {
  std::mt19937_64 rng(9);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 50, 3, 120),
                                      test_mk(), fast_params());
  LiveServer live;
  {
    auto sock = live.connect();
    Client(*sock).upload(bundle);
  }
  std::vector<EncryptedQuery> queries;
  for (int i = 0; i < 12; ++i) {
    queries.push_back(encrypt_query(random_query(rng, 3), st.keys()));
  }
  std::vector<Bytes> serial;
  {
    auto sock = live.connect();
    Client client(*sock);
    for (const auto& q : queries) {
      serial.push_back(codec::encode_results(client.query(q)));
    }
  }
  std::vector<std::vector<Bytes>> got(8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      auto sock = live.connect();
      Client client(*sock);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        std::size_t k = (i + static_cast<std::size_t>(t)) % queries.size();
        got[t].resize(queries.size());
        got[t][k] = codec::encode_results(client.query(queries[k]));
      }
    });
  }
  for (auto& th : threads) th.join();
  for (int t = 0; t < 8; ++t) EXPECT_EQ(got[t], serial) << "client " << t;
}

TEST(Loopback, ConcurrentQueriesDuringMaintenance) {
  std::mt19937_64 rng(12);
  auto [bundle, st] = encrypt_dataset(testing::random_records(rng, 30, 2, 120),
                                      test_mk(), fast_params());
  LiveServer live;
  auto owner_sock = live.connect();
  Client owner(*owner_sock);
  owner.upload(bundle);
  // Readers encrypt with the key schedule as it was at upload time. Inserts
  // may open classes such a stale query does not cover, which the server
  // reports as incomplete_query.
  const KeySchedule keys = st.keys();
  std::atomic<bool> done{false};
  std::atomic<int> answered{0}, attempts{0}, failures{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&, t] {
      std::mt19937_64 local(100 + t);
      auto sock = live.connect();
      Client client(*sock);
      while (!done) {
        EncryptedQuery q = encrypt_query(random_query(local, 2), keys);
        try {
          client.query(q);
          ++answered;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::incomplete_query) ++failures;
        }
        ++attempts;
      }
    });
  }
  auto wait_for = [&](const std::atomic<int>& counter, int target) {
    while (counter.load() < target && failures.load() == 0) {
      std::this_thread::yield();
    }
  };
  wait_for(answered, 4);
  for (std::uint64_t id = 500; id < 530; ++id) {
    auto rec = PlainRecord{id, random_query(rng, 2)};
    owner.insert(prepare_insert(rec, st));
    // Let some queries overlap every maintenance step.
    wait_for(attempts, attempts.load() + 2);
  }
  done = true;
  for (auto& th : readers) th.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_GT(answered.load(), 0);
}

}  // namespace
}  // namespace scale::wire
