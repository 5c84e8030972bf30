#include "scale/owner_client.hpp"

#include <algorithm>
#include <unordered_set>

#include "crypto.hpp"
#include "scale/error.hpp"

namespace scale {
namespace {

constexpr char kOwnerMagic[4] = {'S', 'C', 'O', 'W'};
constexpr std::uint16_t kOwnerVersion = 1;
constexpr std::size_t kPayloadNonce = 12;

void check_attrs(const PlainRecord& rec, std::size_t d) {
  if (rec.attrs.size() != d) {
    fail(ErrorCode::parameter,
         "record " + std::to_string(rec.record_id) + " has " +
             std::to_string(rec.attrs.size()) + " attributes, expected " +
             std::to_string(d));
  }
  for (std::uint32_t v : rec.attrs) {
    if (v > kMaxAttribute) {
      fail(ErrorCode::overflow, "record " + std::to_string(rec.record_id) +
                                    ": attribute " + std::to_string(v) +
                                    " exceeds 2^31-1");
    }
  }
}

EncryptedRecord encrypt_record(const PlainRecord& rec, const KeySchedule& ks) {
  EncryptedRecord out;
  out.record_id = rec.record_id;
  out.column_cts.reserve(rec.attrs.size());
  for (std::uint32_t j = 0; j < rec.attrs.size(); ++j) {
    out.column_cts.push_back(ore::encrypt(ks.column_key(j), rec.attrs[j]));
  }
  out.payload_ct = seal_payload(ks.payload_key(), rec);
  return out;
}

// Encrypts grouped plaintext sums and appends SumEntries.
struct SumBatch {
  std::uint32_t ooc_id;
  std::vector<std::uint32_t> values;
  std::vector<ElemPair> pairs;
};

void emit_sums(std::uint32_t dim, SumBatch& batch, const KeySchedule& ks,
               std::vector<SumEntry>& out) {
  if (batch.values.empty()) return;
  std::vector<ore::OreCiphertext> cts =
      ore::encrypt_left_many(ks.ooc_key(dim, batch.ooc_id), batch.values);
  for (std::size_t i = 0; i < cts.size(); ++i) {
    const ElemPair& p = batch.pairs[i];
    SumEntry e;
    e.dim = dim;
    e.id_a = std::min(p.lo.id, p.hi.id);
    e.id_b = std::max(p.lo.id, p.hi.id);
    e.ooc_id = batch.ooc_id;
    e.sum_ct = std::move(cts[i]);
    out.push_back(std::move(e));
  }
}

// Whether p can join the lexicographically sorted chain without breaking
// comparability with its neighbours. A chain sorted lexicographically is
// also sorted component-wise, so neighbours suffice.
bool fits_chain(const std::vector<ElemPair>& chain, const ElemPair& p) {
  auto it = std::lower_bound(chain.begin(), chain.end(), p);
  if (it != chain.end() && !pair_leq(p, *it)) return false;
  if (it != chain.begin() && !pair_leq(*std::prev(it), p)) return false;
  return true;
}

void insert_sorted(std::vector<ElemPair>& chain, const ElemPair& p) {
  chain.insert(std::lower_bound(chain.begin(), chain.end(), p), p);
}

}  // namespace

bool is_chain(const std::vector<ElemPair>& sorted_pairs) {
  for (std::size_t i = 1; i < sorted_pairs.size(); ++i) {
    if (!pair_leq(sorted_pairs[i - 1], sorted_pairs[i])) return false;
  }
  return true;
}

const std::vector<ElemPair>& OwnerState::ooc_class(std::uint32_t dim,
                                                    std::uint32_t ooc_id) const {
  static const std::vector<ElemPair> kEmpty;
  const auto& per_dim = classes_.at(dim);
  if (ooc_id >= per_dim.size()) return kEmpty;
  return per_dim[ooc_id];
}

std::vector<ElemPair>& OwnerState::mutable_class(std::uint32_t dim,
                                                 std::uint32_t ooc_id) {
  auto& per_dim = classes_.at(dim);
  if (ooc_id >= per_dim.size()) per_dim.resize(ooc_id + 1);
  return per_dim[ooc_id];
}

const std::vector<std::uint32_t>& OwnerState::attrs(std::uint64_t id) const {
  auto it = attrs_.find(id);
  if (it == attrs_.end()) {
    fail(ErrorCode::unknown_id, "unknown record " + std::to_string(id));
  }
  return it->second;
}

std::vector<PlainRecord> OwnerState::records() const {
  std::vector<PlainRecord> out;
  out.reserve(attrs_.size());
  for (const auto& [id, a] : attrs_) out.push_back(PlainRecord{id, a});
  std::sort(out.begin(), out.end(),
            [](const PlainRecord& x, const PlainRecord& y) {
              return x.record_id < y.record_id;
            });
  return out;
}

bool operator==(const OwnerState& a, const OwnerState& b) {
  auto trimmed = [](std::vector<std::vector<ElemPair>> v) {
    while (!v.empty() && v.back().empty()) v.pop_back();
    return v;
  };
  if (a.classes_.size() != b.classes_.size()) return false;
  for (std::size_t j = 0; j < a.classes_.size(); ++j) {
    if (trimmed(a.classes_[j]) != trimmed(b.classes_[j])) return false;
  }
  return a.keys_.serialize() == b.keys_.serialize() &&
         a.keys_.params() == b.keys_.params() && a.sorted_ == b.sorted_ &&
         a.attrs_ == b.attrs_;
}

std::pair<UploadBundle, OwnerState> encrypt_dataset(
    const std::vector<PlainRecord>& records, const MasterKey& mk,
    const ore::OreParams& params) {
  params.validate();
  const std::size_t n = records.size();
  if (n < 2) fail(ErrorCode::domain, "encrypt_dataset: need at least 2 records");
  const std::size_t d = records.front().attrs.size();
  if (d == 0) fail(ErrorCode::parameter, "records have no attributes");
  std::unordered_set<std::uint64_t> seen;
  for (const PlainRecord& r : records) {
    check_attrs(r, d);
    if (!seen.insert(r.record_id).second) {
      fail(ErrorCode::duplicate_id,
           "duplicate record id " + std::to_string(r.record_id));
    }
  }

  OwnerState state;
  state.keys_ = KeySchedule::create(mk, params, static_cast<std::uint32_t>(n),
                                    static_cast<std::uint32_t>(d));
  const KeySchedule& ks = state.keys_;
  const std::uint32_t k = kappa(n);

  UploadBundle bundle;
  bundle.params = params;
  bundle.d = static_cast<std::uint32_t>(d);
  bundle.records.reserve(n);
  for (const PlainRecord& r : records) {
    bundle.records.push_back(encrypt_record(r, ks));
    state.attrs_.emplace(r.record_id, r.attrs);
  }

  bundle.sums.reserve(d * n * (n - 1) / 2);
  state.sorted_.resize(d);
  state.classes_.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    std::vector<ElemKey>& sorted = state.sorted_[j];
    sorted.reserve(n);
    for (const PlainRecord& r : records) {
      sorted.push_back(ElemKey{r.attrs[j], r.record_id});
    }
    std::sort(sorted.begin(), sorted.end());
    state.classes_[j].resize(k + 1);
    std::vector<SumBatch> batches(k + 1);
    for (std::uint32_t t = 1; t <= k; ++t) {
      batches[t].ooc_id = t;
      batches[t].values.reserve(initial_class_size(n, t));
      batches[t].pairs.reserve(initial_class_size(n, t));
    }
    // Row-major over ranks gives each class in lexicographic order.
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        std::uint32_t t = ooc_of_pair(a + 1, b + 1, n);
        batches[t].values.push_back(sorted[a].value + sorted[b].value);
        batches[t].pairs.push_back(ElemPair{sorted[a], sorted[b]});
      }
    }
    for (std::uint32_t t = 1; t <= k; ++t) {
      emit_sums(j, batches[t], ks, bundle.sums);
      state.classes_[j][t] = std::move(batches[t].pairs);
    }
  }
  for (std::uint32_t j = 0; j < d; ++j) bundle.active.push_back(ks.active(j));
  return {std::move(bundle), std::move(state)};
}

EncryptedQuery encrypt_query(const std::vector<std::uint32_t>& q,
                             const KeySchedule& keys) {
  if (q.size() != keys.d()) {
    fail(ErrorCode::domain, "query has " + std::to_string(q.size()) +
                                " dimensions, expected " +
                                std::to_string(keys.d()));
  }
  for (std::uint32_t v : q) {
    if (v > kMaxAttribute) {
      fail(ErrorCode::overflow,
           "query value " + std::to_string(v) + " makes 2q overflow");
    }
  }
  EncryptedQuery eq;
  eq.q_cts.reserve(q.size());
  eq.dbl_cts.resize(q.size());
  for (std::uint32_t j = 0; j < q.size(); ++j) {
    eq.q_cts.push_back(
        ore::encrypt(keys.column_key(j), q[j], ore::Parts::left_only));
    for (std::uint32_t m : keys.active(j)) {
      eq.dbl_cts[j].push_back(DoubledQuery{
          m, ore::encrypt(keys.ooc_key(j, m), 2 * q[j],
                          ore::Parts::right_only)});
    }
  }
  return eq;
}

Bytes seal_payload(const PayloadKey& key, const PlainRecord& rec) {
  std::uint8_t nonce[kPayloadNonce];
  crypto::random_bytes(nonce, sizeof(nonce));
  std::uint8_t aad[8];
  put_be64(aad, rec.record_id);
  ByteWriter plain;
  for (std::uint32_t v : rec.attrs) plain.u32(v);
  Bytes sealed = crypto::gcm_seal(key, ByteView(nonce, kPayloadNonce),
                                  ByteView(aad, 8), plain.bytes());
  ByteWriter out;
  out.raw(ByteView(nonce, kPayloadNonce));
  out.raw(sealed);
  return out.take();
}

PlainRecord open_payload(const PayloadKey& key, std::uint64_t record_id,
                         ByteView payload_ct) {
  if (payload_ct.size() < kPayloadNonce + 16) {
    fail(ErrorCode::tamper, "payload too short");
  }
  std::uint8_t aad[8];
  put_be64(aad, record_id);
  Bytes plain;
  if (!crypto::gcm_open(key, payload_ct.subspan(0, kPayloadNonce),
                        ByteView(aad, 8), payload_ct.subspan(kPayloadNonce),
                        plain) ||
      plain.size() % 4 != 0) {
    fail(ErrorCode::tamper, "payload of record " + std::to_string(record_id) +
                                " failed authentication");
  }
  PlainRecord rec;
  rec.record_id = record_id;
  for (std::size_t i = 0; i < plain.size(); i += 4) {
    rec.attrs.push_back(get_be32(plain.data() + i));
  }
  return rec;
}

std::vector<PlainRecord> decrypt_results(
    const std::vector<ResultEntry>& results, const PayloadKey& key) {
  std::vector<PlainRecord> out;
  out.reserve(results.size());
  for (const ResultEntry& r : results) {
    out.push_back(open_payload(key, r.record_id, r.payload_ct));
  }
  return out;
}

InsertBundle prepare_insert(const PlainRecord& rec, OwnerState& state) {
  const std::uint32_t d = state.d();
  check_attrs(rec, d);
  if (state.has_record(rec.record_id)) {
    fail(ErrorCode::duplicate_id,
         "record " + std::to_string(rec.record_id) + " already exists");
  }
  KeySchedule& ks = state.keys_;
  const std::uint64_t n_after = state.n() + 1;

  InsertBundle bundle;
  bundle.record = encrypt_record(rec, ks);
  bundle.new_oocs.resize(d);
  bundle.sums.reserve(d * state.n());

  for (std::uint32_t j = 0; j < d; ++j) {
    std::vector<ElemKey>& sorted = state.sorted_[j];
    const ElemKey e{rec.attrs[j], rec.record_id};
    const std::size_t pos =
        std::lower_bound(sorted.begin(), sorted.end(), e) - sorted.begin();
    const std::uint64_t rank = pos + 1;
    std::uint32_t fresh = 0;
    std::vector<SumBatch> batches;
    auto batch_for = [&](std::uint32_t t) -> SumBatch& {
      for (SumBatch& b : batches) {
        if (b.ooc_id == t) return b;
      }
      batches.push_back(SumBatch{t, {}, {}});
      return batches.back();
    };
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const ElemKey& other = sorted[k];
      const std::uint64_t other_rank = k < pos ? k + 1 : k + 2;
      const ElemPair p = k < pos ? ElemPair{other, e} : ElemPair{e, other};
      std::uint32_t t = ooc_of_pair(std::min(rank, other_rank),
                                    std::max(rank, other_rank), n_after);
      if (!ks.is_active(j, t)) {
        // The formula reaches one past the registry when n grows.
        ks.register_ooc(j, t);
        bundle.new_oocs[j].push_back(t);
      } else if (!fits_chain(state.ooc_class(j, t), p)) {
        if (fresh == 0) {
          fresh = ks.next_ooc_id(j);
          ks.register_ooc(j, fresh);
          bundle.new_oocs[j].push_back(fresh);
        }
        t = fresh;
      }
      std::vector<ElemPair>& chain = state.mutable_class(j, t);
      if (!fits_chain(chain, p)) {
        fail(ErrorCode::internal, "chain invariant violated in fresh class");
      }
      insert_sorted(chain, p);
      SumBatch& b = batch_for(t);
      b.values.push_back(rec.attrs[j] + other.value);
      b.pairs.push_back(p);
    }
    for (SumBatch& b : batches) emit_sums(j, b, ks, bundle.sums);
    sorted.insert(sorted.begin() + static_cast<std::ptrdiff_t>(pos), e);
    if (state.classes_[j].size() < ks.next_ooc_id(j)) {
      state.classes_[j].resize(ks.next_ooc_id(j));
    }
  }
  state.attrs_.emplace(rec.record_id, rec.attrs);
  ks.set_n(static_cast<std::uint32_t>(state.n()));
  return bundle;
}

DeleteRequest prepare_delete(std::uint64_t record_id, OwnerState& state) {
  auto it = state.attrs_.find(record_id);
  if (it == state.attrs_.end()) {
    fail(ErrorCode::unknown_id, "unknown record " + std::to_string(record_id));
  }
  const std::vector<std::uint32_t> attrs = it->second;
  for (std::uint32_t j = 0; j < state.d(); ++j) {
    std::vector<ElemKey>& sorted = state.sorted_[j];
    const ElemKey e{attrs[j], record_id};
    auto pos = std::lower_bound(sorted.begin(), sorted.end(), e);
    sorted.erase(pos);
    for (std::vector<ElemPair>& chain : state.classes_[j]) {
      std::erase_if(chain, [&](const ElemPair& p) {
        return p.lo.id == record_id || p.hi.id == record_id;
      });
    }
  }
  state.attrs_.erase(it);
  state.keys_.set_n(static_cast<std::uint32_t>(state.n()));
  return DeleteRequest{record_id};
}

UpdateRequest prepare_update(const PlainRecord& rec, OwnerState& state) {
  UpdateRequest u;
  u.remove = prepare_delete(rec.record_id, state);
  u.insert = prepare_insert(rec, state);
  return u;
}

Bytes serialize_owner_state(const OwnerState& state) {
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kOwnerMagic), 4));
  w.u16(kOwnerVersion);
  w.blob(state.keys_.serialize());
  std::vector<PlainRecord> recs = state.records();
  w.u32(static_cast<std::uint32_t>(recs.size()));
  for (const PlainRecord& r : recs) {
    w.u64(r.record_id);
    for (std::uint32_t v : r.attrs) w.u32(v);
  }
  for (const auto& per_dim : state.classes_) {
    w.u32(static_cast<std::uint32_t>(per_dim.size()));
    for (const auto& chain : per_dim) {
      w.u32(static_cast<std::uint32_t>(chain.size()));
      for (const ElemPair& p : chain) {
        w.u32(p.lo.value);
        w.u64(p.lo.id);
        w.u32(p.hi.value);
        w.u64(p.hi.id);
      }
    }
  }
  return w.take();
}

OwnerState parse_owner_state(ByteView bytes, const ore::OreParams& params) {
  ByteReader r(bytes);
  ByteView magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kOwnerMagic)) {
    fail(ErrorCode::format, "owner state: bad magic");
  }
  if (r.u16() != kOwnerVersion) {
    fail(ErrorCode::format, "owner state: unsupported version");
  }
  OwnerState state;
  state.keys_ = KeySchedule::parse(r.blob(), params);
  const std::uint32_t d = state.keys_.d();
  const std::uint32_t n = r.u32();
  state.sorted_.resize(d);
  for (std::uint32_t i = 0; i < n; ++i) {
    PlainRecord rec;
    rec.record_id = r.u64();
    rec.attrs.resize(d);
    for (std::uint32_t j = 0; j < d; ++j) rec.attrs[j] = r.u32();
    if (!state.attrs_.emplace(rec.record_id, rec.attrs).second) {
      fail(ErrorCode::format, "owner state: duplicate record");
    }
    for (std::uint32_t j = 0; j < d; ++j) {
      state.sorted_[j].push_back(ElemKey{rec.attrs[j], rec.record_id});
    }
  }
  for (auto& s : state.sorted_) std::sort(s.begin(), s.end());
  state.classes_.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    std::uint32_t count = r.u32();
    if (count > state.keys_.next_ooc_id(j)) {
      fail(ErrorCode::format, "owner state: more classes than registry");
    }
    state.classes_[j].resize(count);
    for (std::uint32_t t = 0; t < count; ++t) {
      std::uint32_t size = r.u32();
      if (size > r.remaining() / 24) {
        fail(ErrorCode::format, "owner state: class longer than file");
      }
      auto& chain = state.classes_[j][t];
      chain.reserve(size);
      for (std::uint32_t i = 0; i < size; ++i) {
        ElemPair p;
        p.lo.value = r.u32();
        p.lo.id = r.u64();
        p.hi.value = r.u32();
        p.hi.id = r.u64();
        chain.push_back(p);
      }
    }
  }
  r.expect_done("owner state");
  return state;
}

}  // namespace scale
