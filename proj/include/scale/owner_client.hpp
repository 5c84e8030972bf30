#pragma once

// Data-owner and query-user side: dataset encryption, query encryption,
// insert/delete bundle preparation and result decryption.

#include <compare>
#include <cstdint>
#include <utility>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "scale/key_schedule.hpp"
#include "scale/oracle.hpp"
#include "scale/types.hpp"

namespace scale {

inline constexpr std::uint32_t kMaxAttribute = 0x7fffffffu;

// Strict element order within a dimension: value, then record id.
struct ElemKey {
  std::uint32_t value = 0;
  std::uint64_t id = 0;

  friend auto operator<=>(const ElemKey&, const ElemKey&) = default;
};

// A pair of elements with lo < hi.
struct ElemPair {
  ElemKey lo;
  ElemKey hi;

  friend auto operator<=>(const ElemPair&, const ElemPair&) = default;
};

// Component-wise order on pairs.
inline bool pair_leq(const ElemPair& a, const ElemPair& b) {
  return a.lo <= b.lo && a.hi <= b.hi;
}

// True when every two pairs are comparable under pair_leq. Input must be
// sorted lexicographically.
bool is_chain(const std::vector<ElemPair>& sorted_pairs);

class OwnerState {
 public:
  OwnerState() = default;

  const KeySchedule& keys() const { return keys_; }
  KeySchedule& keys() { return keys_; }
  std::uint32_t d() const { return keys_.d(); }
  std::size_t n() const { return attrs_.size(); }

  // Sorted (value, id) list of a dimension.
  const std::vector<ElemKey>& sorted(std::uint32_t dim) const {
    return sorted_.at(dim);
  }
  // Lexicographically sorted members of class (dim, ooc_id).
  const std::vector<ElemPair>& ooc_class(std::uint32_t dim,
                                         std::uint32_t ooc_id) const;
  std::size_t class_count(std::uint32_t dim) const {
    return classes_.at(dim).size();
  }
  bool has_record(std::uint64_t id) const { return attrs_.contains(id); }
  const std::vector<std::uint32_t>& attrs(std::uint64_t id) const;
  // Records in ascending id order.
  std::vector<PlainRecord> records() const;

  friend bool operator==(const OwnerState&, const OwnerState&);

 private:
  friend std::pair<UploadBundle, OwnerState> encrypt_dataset(
      const std::vector<PlainRecord>&, const MasterKey&,
      const ore::OreParams&);
  friend InsertBundle prepare_insert(const PlainRecord&, OwnerState&);
  friend DeleteRequest prepare_delete(std::uint64_t, OwnerState&);
  friend Bytes serialize_owner_state(const OwnerState&);
  friend OwnerState parse_owner_state(ByteView, const ore::OreParams&);

  std::vector<ElemPair>& mutable_class(std::uint32_t dim,
                                       std::uint32_t ooc_id);

  KeySchedule keys_;
  std::vector<std::vector<ElemKey>> sorted_;
  absl::flat_hash_map<std::uint64_t, std::vector<std::uint32_t>> attrs_;
  // [dim][ooc_id], index 0 unused.
  std::vector<std::vector<std::vector<ElemPair>>> classes_;
};

// Full upload: n records, d*n(n-1)/2 sums and the initial registry.
std::pair<UploadBundle, OwnerState> encrypt_dataset(
    const std::vector<PlainRecord>& records, const MasterKey& mk,
    const ore::OreParams& params);

// d left-only column ciphertexts plus one right-only ciphertext of 2q[j]
// per active class of every dimension.
EncryptedQuery encrypt_query(const std::vector<std::uint32_t>& q,
                             const KeySchedule& keys);

Bytes seal_payload(const PayloadKey& key, const PlainRecord& rec);
PlainRecord open_payload(const PayloadKey& key, std::uint64_t record_id,
                         ByteView payload_ct);

// Throws ErrorCode::tamper if any payload fails authentication.
std::vector<PlainRecord> decrypt_results(
    const std::vector<ResultEntry>& results, const PayloadKey& key);

InsertBundle prepare_insert(const PlainRecord& rec, OwnerState& state);
DeleteRequest prepare_delete(std::uint64_t record_id, OwnerState& state);

struct UpdateRequest {
  DeleteRequest remove;
  InsertBundle insert;
};

// Delete of rec.record_id followed by insert of rec.
UpdateRequest prepare_update(const PlainRecord& rec, OwnerState& state);

Bytes serialize_owner_state(const OwnerState& state);
OwnerState parse_owner_state(ByteView bytes, const ore::OreParams& params);

}  // namespace scale
