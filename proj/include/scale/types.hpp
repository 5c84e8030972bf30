#pragma once

// Messages exchanged between the data owner, query users and the cloud.

#include <cstdint>
#include <vector>

#include "scale/bytes.hpp"
#include "scale/ore.hpp"

namespace scale {

struct EncryptedRecord {
  std::uint64_t record_id = 0;
  // One full ciphertext per dimension under that dimension's column key.
  std::vector<ore::OreCiphertext> column_cts;
  // nonce(12) || AES-256-GCM(d x u32) || tag(16), AAD = record id.
  Bytes payload_ct;

  friend bool operator==(const EncryptedRecord&,
                         const EncryptedRecord&) = default;
};

struct SumEntry {
  std::uint32_t dim = 0;
  // Canonical order: id_a < id_b.
  std::uint64_t id_a = 0;
  std::uint64_t id_b = 0;
  std::uint32_t ooc_id = 0;
  // Left-only ciphertext under the (dim, ooc_id) key.
  ore::OreCiphertext sum_ct;

  friend bool operator==(const SumEntry&, const SumEntry&) = default;
};

struct UploadBundle {
  ore::OreParams params;
  std::uint32_t d = 0;
  std::vector<EncryptedRecord> records;
  std::vector<SumEntry> sums;
  // Per dimension, the active ooc ids.
  std::vector<std::vector<std::uint32_t>> active;

  friend bool operator==(const UploadBundle&, const UploadBundle&) = default;
};

struct InsertBundle {
  EncryptedRecord record;
  std::vector<SumEntry> sums;
  // Per dimension, ooc ids this bundle opens.
  std::vector<std::vector<std::uint32_t>> new_oocs;

  friend bool operator==(const InsertBundle&, const InsertBundle&) = default;
};

struct DeleteRequest {
  std::uint64_t record_id = 0;

  friend bool operator==(const DeleteRequest&, const DeleteRequest&) = default;
};

struct DoubledQuery {
  std::uint32_t ooc_id = 0;
  // Right-only ciphertext of 2q[j] under the (j, ooc_id) key.
  ore::OreCiphertext ct;

  friend bool operator==(const DoubledQuery&, const DoubledQuery&) = default;
};

struct EncryptedQuery {
  // Left-only ciphertext of q[j] under column key j.
  std::vector<ore::OreCiphertext> q_cts;
  // Per dimension, one entry per active ooc id.
  std::vector<std::vector<DoubledQuery>> dbl_cts;

  std::size_t ciphertext_count() const;

  friend bool operator==(const EncryptedQuery&, const EncryptedQuery&) = default;
};

struct ResultEntry {
  std::uint64_t record_id = 0;
  Bytes payload_ct;

  friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

inline std::size_t EncryptedQuery::ciphertext_count() const {
  std::size_t n = q_cts.size();
  for (const auto& dim : dbl_cts) n += dim.size();
  return n;
}

}  // namespace scale
