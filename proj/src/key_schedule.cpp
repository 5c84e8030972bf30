#include "scale/key_schedule.hpp"

#include <algorithm>
#include <cstring>

#include "crypto.hpp"
#include "scale/error.hpp"

namespace scale {
namespace {

constexpr std::size_t kMaxDims = 1024;

Bytes label(const char* tag, std::initializer_list<std::uint32_t> parts) {
  Bytes out(tag, tag + std::strlen(tag));
  for (std::uint32_t p : parts) {
    std::uint8_t b[4];
    put_be32(b, p);
    out.insert(out.end(), b, b + 4);
  }
  return out;
}

ore::OreKey key_from_label(const MasterKey& mk, const Bytes& lbl,
                           const ore::OreParams& params) {
  params.validate();
  auto mac = crypto::hmac_sha256(mk, lbl);
  return ore::OreKey::from_bytes(
      params, ByteView(mac.data(), params.key_bits / 8));
}

}  // namespace

std::uint32_t kappa(std::uint64_t n) {
  if (n < 2) fail(ErrorCode::domain, "kappa: n must be at least 2");
  std::uint64_t num = 2 * n - 3;
  return static_cast<std::uint32_t>((num + 3) / 4);
}

std::uint32_t ooc_of_pair(std::uint64_t rank_a, std::uint64_t rank_b,
                          std::uint64_t n) {
  if (rank_a < 1 || rank_a >= rank_b || rank_b > n) {
    fail(ErrorCode::domain, "ooc_of_pair: need 1 <= a < b <= n, got a=" +
                                std::to_string(rank_a) +
                                " b=" + std::to_string(rank_b) +
                                " n=" + std::to_string(n));
  }
  return static_cast<std::uint32_t>(std::min(rank_a, n + 1 - rank_b));
}

std::uint64_t initial_class_size(std::uint64_t n, std::uint32_t t) {
  if (t < 1 || t > kappa(n)) return 0;
  return 2 * n - 4 * std::uint64_t{t} + 1;
}

MasterKey generate_master_key() {
  MasterKey mk;
  crypto::random_bytes(mk.data(), mk.size());
  return mk;
}

ore::OreKey derive_column_key(const MasterKey& mk, std::uint32_t dim,
                              const ore::OreParams& params) {
  return key_from_label(mk, label("scale/col", {dim}), params);
}

ore::OreKey derive_ooc_key(const MasterKey& mk, std::uint32_t dim,
                           std::uint32_t ooc_id,
                           const ore::OreParams& params) {
  return key_from_label(mk, label("scale/sum", {dim, ooc_id}), params);
}

PayloadKey derive_payload_key(const MasterKey& mk) {
  return crypto::hmac_sha256(mk, label("scale/payload", {}));
}

KeySchedule KeySchedule::create(const MasterKey& mk,
                                const ore::OreParams& params, std::uint32_t n,
                                std::uint32_t d) {
  if (d == 0 || d > kMaxDims) {
    fail(ErrorCode::parameter, "dimension count out of range");
  }
  const std::uint32_t k = kappa(n);
  KeySchedule ks;
  ks.mk_ = mk;
  ks.params_ = params;
  ks.n_ = n;
  ks.d_ = d;
  ks.payload_key_ = derive_payload_key(mk);
  ks.registry_.resize(d);
  ks.ooc_keys_.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    ks.column_keys_.push_back(derive_column_key(mk, j, params));
    for (std::uint32_t t = 1; t <= k; ++t) ks.register_ooc(j, t);
  }
  return ks;
}

void KeySchedule::check_dim(std::uint32_t dim) const {
  if (dim >= d_) {
    fail(ErrorCode::domain, "dimension " + std::to_string(dim) +
                                " out of range (d=" + std::to_string(d_) +
                                ")");
  }
}

const ore::OreKey& KeySchedule::column_key(std::uint32_t dim) const {
  check_dim(dim);
  return column_keys_[dim];
}

const ore::OreKey& KeySchedule::ooc_key(std::uint32_t dim,
                                        std::uint32_t ooc_id) const {
  check_dim(dim);
  const auto& keys = ooc_keys_[dim];
  if (ooc_id >= keys.size() || !keys[ooc_id]) {
    fail(ErrorCode::unknown_ooc, "ooc " + std::to_string(ooc_id) +
                                     " not registered in dimension " +
                                     std::to_string(dim));
  }
  return *keys[ooc_id];
}

const std::vector<std::uint32_t>& KeySchedule::active(
    std::uint32_t dim) const {
  check_dim(dim);
  return registry_[dim];
}

bool KeySchedule::is_active(std::uint32_t dim, std::uint32_t ooc_id) const {
  check_dim(dim);
  const auto& keys = ooc_keys_[dim];
  return ooc_id < keys.size() && keys[ooc_id].has_value();
}

std::uint32_t KeySchedule::next_ooc_id(std::uint32_t dim) const {
  check_dim(dim);
  const auto& ids = registry_[dim];
  if (ids.empty()) return 1;
  return *std::max_element(ids.begin(), ids.end()) + 1;
}

void KeySchedule::register_ooc(std::uint32_t dim, std::uint32_t ooc_id) {
  check_dim(dim);
  if (ooc_id == 0) fail(ErrorCode::domain, "ooc ids start at 1");
  // Ids are allocated densely, so anything past max+1 is corrupt input.
  if (ooc_id > next_ooc_id(dim)) {
    fail(ErrorCode::domain, "ooc " + std::to_string(ooc_id) +
                                " skips ahead of the registry");
  }
  if (is_active(dim, ooc_id)) {
    fail(ErrorCode::duplicate_id, "ooc " + std::to_string(ooc_id) +
                                      " already registered");
  }
  auto& keys = ooc_keys_[dim];
  if (keys.size() <= ooc_id) keys.resize(ooc_id + 1);
  keys[ooc_id] = derive_ooc_key(mk_, dim, ooc_id, params_);
  registry_[dim].push_back(ooc_id);
}

std::size_t KeySchedule::total_active() const {
  std::size_t total = 0;
  for (const auto& ids : registry_) total += ids.size();
  return total;
}

Bytes KeySchedule::serialize() const {
  ByteWriter w;
  w.raw(mk_);
  w.u32(d_);
  w.u32(n_);
  for (const auto& ids : registry_) {
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (std::uint32_t id : ids) w.u32(id);
  }
  return w.take();
}

KeySchedule KeySchedule::parse(ByteView bytes, const ore::OreParams& params) {
  params.validate();
  ByteReader r(bytes);
  KeySchedule ks;
  ByteView mk = r.raw(32);
  std::copy(mk.begin(), mk.end(), ks.mk_.begin());
  ks.params_ = params;
  ks.d_ = r.u32();
  ks.n_ = r.u32();
  if (ks.d_ == 0 || ks.d_ > kMaxDims) {
    fail(ErrorCode::format, "key file: dimension count out of range");
  }
  ks.payload_key_ = derive_payload_key(ks.mk_);
  ks.registry_.resize(ks.d_);
  ks.ooc_keys_.resize(ks.d_);
  for (std::uint32_t j = 0; j < ks.d_; ++j) {
    ks.column_keys_.push_back(derive_column_key(ks.mk_, j, params));
    std::uint32_t count = r.u32();
    if (count > r.remaining() / 4) {
      fail(ErrorCode::format, "key file: id list longer than file");
    }
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint32_t id = r.u32();
      if (id == 0 || ks.is_active(j, id)) {
        fail(ErrorCode::format, "key file: bad or repeated ooc id");
      }
      ks.register_ooc(j, id);
    }
  }
  r.expect_done("key file");
  return ks;
}

}  // namespace scale
