#pragma once

// Cloud-side ciphertext state. Holds no plaintext and no key material.
//
// Each (dimension, ooc) class lives in its own ordered index. Members of a
// class form a chain under component-wise order of their base elements, so
// the cloud orders them lexicographically by (low element, high element)
// using ORE compares on the column ciphertexts. Within a class that order
// coincides with the order of the sums.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "scale/ordered_index.hpp"
#include "scale/types.hpp"

namespace scale {

struct SumNode {
  SumNode* left = nullptr;
  SumNode* right = nullptr;
  SumNode* parent = nullptr;
  std::int32_t aux = 0;
  std::uint32_t ooc_id = 0;
  // Element order within the dimension: lo sorts before hi.
  std::uint64_t lo_id = 0;
  std::uint64_t hi_id = 0;
  ore::OreCiphertext sum_ct;
};

using SumIndex = OrderedIndex<SumNode>;

struct PairKey {
  std::uint64_t a = 0;  // smaller id
  std::uint64_t b = 0;

  static PairKey of(std::uint64_t x, std::uint64_t y) {
    return x < y ? PairKey{x, y} : PairKey{y, x};
  }
  friend bool operator==(const PairKey&, const PairKey&) = default;
  template <typename H>
  friend H AbslHashValue(H h, const PairKey& k) {
    return H::combine(std::move(h), k.a, k.b);
  }
};

struct SumRef {
  std::uint32_t ooc_id = 0;
  const ore::OreCiphertext* sum_ct = nullptr;
};

struct MaintenanceStats {
  std::uint64_t ore_compares = 0;
};

class CloudDatabase {
 public:
  explicit CloudDatabase(IndexVariant variant = IndexVariant::avl)
      : variant_(variant) {}
  CloudDatabase(const CloudDatabase&) = delete;
  CloudDatabase& operator=(const CloudDatabase&) = delete;

  // Builds a database from a full upload. Validates the whole bundle first.
  static std::unique_ptr<CloudDatabase> ingest(UploadBundle&& bundle,
                                               IndexVariant variant);

  IndexVariant variant() const { return variant_; }
  const ore::OreParams& params() const { return params_; }
  std::uint32_t d() const { return d_; }
  std::size_t n() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Symmetric in the ids. Throws ErrorCode::missing_sum.
  SumRef lookup_sum(std::uint32_t dim, std::uint64_t id_a,
                    std::uint64_t id_b) const;

  // Validates, then applies under the writer lock.
  MaintenanceStats apply_insert(InsertBundle&& bundle);
  MaintenanceStats apply_delete(const DeleteRequest& req);

  // Readers hold this for the duration of a query.
  std::shared_lock<std::shared_mutex> read_lock() const {
    return std::shared_lock<std::shared_mutex>(mu_);
  }

  // The following accessors assume the caller holds a lock or owns the
  // database exclusively.
  const EncryptedRecord& record(std::uint64_t id) const;
  // Ids in insertion order.
  const std::vector<std::uint64_t>& order() const { return order_; }
  // Ids sorted by element order of one dimension.
  const std::vector<std::uint64_t>& column_order(std::uint32_t dim) const {
    return columns_.at(dim);
  }
  const std::vector<std::uint32_t>& active(std::uint32_t dim) const {
    return active_.at(dim);
  }
  std::size_t pair_count(std::uint32_t dim) const {
    return pair_index_.at(dim).size();
  }
  std::size_t total_pairs() const;
  // Lock-free lookup used inside a query.
  const SumNode* find_sum(std::uint32_t dim, std::uint64_t id_a,
                          std::uint64_t id_b) const;
  const std::map<std::uint32_t, SumIndex>& forest(std::uint32_t dim) const {
    return forest_.at(dim);
  }
  // Three-way element order of two records in one dimension: ORE compare
  // of the column ciphertexts, ties broken by id. Counts ORE compares into
  // *counter when given.
  int element_compare(std::uint32_t dim, std::uint64_t x, std::uint64_t y,
                      std::uint64_t* counter = nullptr) const;
  // Lexicographic pair order used inside every tree.
  int node_compare(std::uint32_t dim, const SumNode& a, const SumNode& b,
                   std::uint64_t* counter = nullptr) const;

  // Rebuilds from snapshot parts without any compares. Used by the codec.
  struct TreeImage {
    std::uint32_t dim;
    std::uint32_t ooc_id;
    std::vector<SumNode*> inorder;
  };
  static std::unique_ptr<CloudDatabase> restore(
      const ore::OreParams& params, std::uint32_t d, IndexVariant variant,
      std::vector<EncryptedRecord>&& records,
      std::vector<std::vector<std::uint64_t>>&& columns,
      std::vector<std::vector<std::uint32_t>>&& active,
      std::vector<TreeImage>&& trees);

 private:
  void validate_insert(const InsertBundle& bundle) const;
  void add_record_to_columns(const EncryptedRecord& rec, MaintenanceStats& st);
  SumIndex& tree_for(std::uint32_t dim, std::uint32_t ooc_id);

  IndexVariant variant_;
  ore::OreParams params_{};
  std::uint32_t d_ = 0;
  absl::flat_hash_map<std::uint64_t, EncryptedRecord> records_;
  std::vector<std::uint64_t> order_;
  std::vector<std::vector<std::uint64_t>> columns_;
  std::vector<absl::flat_hash_map<PairKey, SumNode*>> pair_index_;
  std::vector<std::map<std::uint32_t, SumIndex>> forest_;
  std::vector<std::vector<std::uint32_t>> active_;
  mutable std::shared_mutex mu_;
};

}  // namespace scale
