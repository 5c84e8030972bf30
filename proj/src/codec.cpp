#include "scale/codec.hpp"

#include <algorithm>

#include "scale/error.hpp"

namespace scale::codec {
namespace {

constexpr char kSnapshotMagic[4] = {'S', 'C', 'D', 'B'};
constexpr std::uint16_t kSnapshotVersion = 1;

void put_params(ByteWriter& w, const ore::OreParams& p) {
  w.u8(p.domain_bits);
  w.u8(p.block_bits);
  w.u8(static_cast<std::uint8_t>(p.key_bits / 8));
}

ore::OreParams get_params(ByteReader& r) {
  ore::OreParams p;
  p.domain_bits = r.u8();
  p.block_bits = r.u8();
  p.key_bits = static_cast<std::uint16_t>(r.u8() * 8);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, e.what());
  }
  return p;
}

// Guards count fields against allocation blow-ups on hostile input.
std::uint32_t get_count(ByteReader& r, std::size_t min_item_bytes,
                        const char* what) {
  std::uint32_t n = r.u32();
  if (min_item_bytes > 0 && n > r.remaining() / min_item_bytes) {
    fail(ErrorCode::format, std::string(what) + ": count exceeds message");
  }
  return n;
}

void put_record(ByteWriter& w, const EncryptedRecord& rec) {
  w.u64(rec.record_id);
  w.u32(static_cast<std::uint32_t>(rec.column_cts.size()));
  for (const auto& ct : rec.column_cts) ct.serialize(w);
  w.blob(rec.payload_ct);
}

EncryptedRecord get_record(ByteReader& r) {
  EncryptedRecord rec;
  rec.record_id = r.u64();
  std::uint32_t d = get_count(r, 11, "record");
  rec.column_cts.reserve(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    rec.column_cts.push_back(ore::OreCiphertext::parse(r));
  }
  ByteView payload = r.blob();
  rec.payload_ct.assign(payload.begin(), payload.end());
  return rec;
}

void put_sum(ByteWriter& w, const SumEntry& e) {
  w.u32(e.dim);
  w.u64(e.id_a);
  w.u64(e.id_b);
  w.u32(e.ooc_id);
  e.sum_ct.serialize(w);
}

SumEntry get_sum(ByteReader& r) {
  SumEntry e;
  e.dim = r.u32();
  e.id_a = r.u64();
  e.id_b = r.u64();
  e.ooc_id = r.u32();
  e.sum_ct = ore::OreCiphertext::parse(r);
  return e;
}

void put_id_lists(ByteWriter& w,
                  const std::vector<std::vector<std::uint32_t>>& lists) {
  w.u32(static_cast<std::uint32_t>(lists.size()));
  for (const auto& l : lists) {
    w.u32(static_cast<std::uint32_t>(l.size()));
    for (std::uint32_t v : l) w.u32(v);
  }
}

std::vector<std::vector<std::uint32_t>> get_id_lists(ByteReader& r) {
  std::vector<std::vector<std::uint32_t>> out(get_count(r, 4, "id lists"));
  for (auto& l : out) {
    l.resize(get_count(r, 4, "id list"));
    for (auto& v : l) v = r.u32();
  }
  return out;
}

void check_version(ByteReader& r, const char* what) {
  std::uint8_t v = r.u8();
  if (v != kProtocolVersion) {
    fail(ErrorCode::protocol, std::string(what) + ": unsupported version " +
                                  std::to_string(v));
  }
}

}  // namespace

Bytes encode_upload(const UploadBundle& b) {
  ByteWriter w;
  w.u8(kProtocolVersion);
  put_params(w, b.params);
  w.u32(b.d);
  w.u32(static_cast<std::uint32_t>(b.records.size()));
  for (const auto& rec : b.records) put_record(w, rec);
  w.u32(static_cast<std::uint32_t>(b.sums.size()));
  for (const auto& e : b.sums) put_sum(w, e);
  put_id_lists(w, b.active);
  return w.take();
}

UploadBundle decode_upload(ByteView bytes) {
  ByteReader r(bytes);
  check_version(r, "upload");
  UploadBundle b;
  b.params = get_params(r);
  b.d = r.u32();
  b.records.resize(get_count(r, 12, "upload records"));
  for (auto& rec : b.records) rec = get_record(r);
  b.sums.resize(get_count(r, 35, "upload sums"));
  for (auto& e : b.sums) e = get_sum(r);
  b.active = get_id_lists(r);
  r.expect_done("upload");
  return b;
}

Bytes encode_query(const EncryptedQuery& q) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(q.q_cts.size()));
  for (const auto& ct : q.q_cts) ct.serialize(w);
  w.u32(static_cast<std::uint32_t>(q.dbl_cts.size()));
  for (const auto& dim : q.dbl_cts) {
    w.u32(static_cast<std::uint32_t>(dim.size()));
    for (const auto& dq : dim) {
      w.u32(dq.ooc_id);
      dq.ct.serialize(w);
    }
  }
  return w.take();
}

EncryptedQuery decode_query(ByteView bytes) {
  ByteReader r(bytes);
  EncryptedQuery q;
  q.q_cts.resize(get_count(r, 11, "query"));
  for (auto& ct : q.q_cts) ct = ore::OreCiphertext::parse(r);
  q.dbl_cts.resize(get_count(r, 4, "query"));
  for (auto& dim : q.dbl_cts) {
    dim.resize(get_count(r, 15, "query"));
    for (auto& dq : dim) {
      dq.ooc_id = r.u32();
      dq.ct = ore::OreCiphertext::parse(r);
    }
  }
  r.expect_done("query");
  return q;
}

Bytes encode_results(const std::vector<ResultEntry>& rs) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(rs.size()));
  for (const auto& e : rs) {
    w.u64(e.record_id);
    w.blob(e.payload_ct);
  }
  return w.take();
}

std::vector<ResultEntry> decode_results(ByteView bytes) {
  ByteReader r(bytes);
  std::vector<ResultEntry> out(get_count(r, 12, "results"));
  for (auto& e : out) {
    e.record_id = r.u64();
    ByteView p = r.blob();
    e.payload_ct.assign(p.begin(), p.end());
  }
  r.expect_done("results");
  return out;
}

Bytes encode_insert(const InsertBundle& b) {
  ByteWriter w;
  put_record(w, b.record);
  w.u32(static_cast<std::uint32_t>(b.sums.size()));
  for (const auto& e : b.sums) put_sum(w, e);
  put_id_lists(w, b.new_oocs);
  return w.take();
}

InsertBundle decode_insert(ByteView bytes) {
  ByteReader r(bytes);
  InsertBundle b;
  b.record = get_record(r);
  b.sums.resize(get_count(r, 35, "insert sums"));
  for (auto& e : b.sums) e = get_sum(r);
  b.new_oocs = get_id_lists(r);
  r.expect_done("insert");
  return b;
}

Bytes encode_delete(const DeleteRequest& req) {
  ByteWriter w;
  w.u64(req.record_id);
  return w.take();
}

DeleteRequest decode_delete(ByteView bytes) {
  ByteReader r(bytes);
  DeleteRequest req{r.u64()};
  r.expect_done("delete");
  return req;
}

Bytes save_snapshot(const CloudDatabase& db) {
  auto lock = db.read_lock();
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kSnapshotMagic), 4));
  w.u16(kSnapshotVersion);
  put_params(w, db.params());
  w.u32(db.d());
  w.u8(static_cast<std::uint8_t>(db.variant()));
  w.u32(static_cast<std::uint32_t>(db.n()));
  for (std::uint64_t id : db.order()) put_record(w, db.record(id));
  for (std::uint32_t j = 0; j < db.d(); ++j) {
    const auto& col = db.column_order(j);
    w.u32(static_cast<std::uint32_t>(col.size()));
    for (std::uint64_t id : col) w.u64(id);
  }
  std::vector<std::vector<std::uint32_t>> active;
  for (std::uint32_t j = 0; j < db.d(); ++j) active.push_back(db.active(j));
  put_id_lists(w, active);
  for (std::uint32_t j = 0; j < db.d(); ++j) {
    w.u32(static_cast<std::uint32_t>(db.forest(j).size()));
    for (const auto& [ooc, tree] : db.forest(j)) {
      w.u32(ooc);
      w.u32(static_cast<std::uint32_t>(tree.size()));
      tree.for_each([&](const SumNode& n) {
        w.u64(n.lo_id);
        w.u64(n.hi_id);
        n.sum_ct.serialize(w);
      });
    }
  }
  return w.take();
}

std::unique_ptr<CloudDatabase> load_snapshot(
    ByteView bytes, std::optional<IndexVariant> variant) {
  ByteReader r(bytes);
  ByteView magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kSnapshotMagic)) {
    fail(ErrorCode::format, "snapshot: bad magic");
  }
  if (r.u16() != kSnapshotVersion) {
    fail(ErrorCode::format, "snapshot: unsupported version");
  }
  ore::OreParams params = get_params(r);
  std::uint32_t d = r.u32();
  std::uint8_t v = r.u8();
  if (v > static_cast<std::uint8_t>(IndexVariant::red_black)) {
    fail(ErrorCode::format, "snapshot: unknown index variant");
  }
  std::vector<EncryptedRecord> records(get_count(r, 12, "snapshot records"));
  for (auto& rec : records) rec = get_record(r);
  if (d > r.remaining() / 4) fail(ErrorCode::format, "snapshot: bad d");
  std::vector<std::vector<std::uint64_t>> columns(d);
  for (auto& col : columns) {
    col.resize(get_count(r, 8, "snapshot column"));
    for (auto& id : col) id = r.u64();
  }
  auto active = get_id_lists(r);

  // Nodes are handed to restore(), which owns them from then on; until
  // then a failed parse must free them here.
  std::vector<CloudDatabase::TreeImage> trees;
  try {
    for (std::uint32_t j = 0; j < d; ++j) {
      std::uint32_t count = get_count(r, 8, "snapshot forest");
      for (std::uint32_t t = 0; t < count; ++t) {
        CloudDatabase::TreeImage img{j, r.u32(), {}};
        std::uint32_t size = get_count(r, 27, "snapshot tree");
        trees.push_back(std::move(img));
        auto& nodes = trees.back().inorder;
        nodes.reserve(size);
        for (std::uint32_t i = 0; i < size; ++i) {
          auto node = std::make_unique<SumNode>();
          node->lo_id = r.u64();
          node->hi_id = r.u64();
          node->sum_ct = ore::OreCiphertext::parse(r);
          node->ooc_id = trees.back().ooc_id;
          nodes.push_back(node.release());
        }
      }
    }
    r.expect_done("snapshot");
  } catch (...) {
    for (auto& t : trees) {
      for (SumNode* n : t.inorder) delete n;
    }
    throw;
  }
  return CloudDatabase::restore(params, d,
                                variant.value_or(static_cast<IndexVariant>(v)),
                                std::move(records), std::move(columns),
                                std::move(active), std::move(trees));
}

}  // namespace scale::codec
