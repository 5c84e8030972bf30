#include "scale/cloud_store.hpp"

#include <algorithm>
#include <tuple>

#include "absl/container/flat_hash_set.h"
#include "scale/error.hpp"

namespace scale {

const char* index_variant_name(IndexVariant v) {
  switch (v) {
    case IndexVariant::linked_list: return "list";
    case IndexVariant::avl: return "avl";
    case IndexVariant::red_black: return "rbtree";
  }
  return "unknown";
}

namespace {

void check_column_ct(const ore::OreCiphertext& ct,
                     const ore::OreParams& params, const char* what) {
  if (!(ct.params() == params) || ct.parts() != ore::Parts::full) {
    fail(ErrorCode::format,
         std::string(what) + ": column ciphertext has wrong parameters or "
                             "is missing a part");
  }
}

void check_sum_ct(const ore::OreCiphertext& ct, const ore::OreParams& params) {
  if (!(ct.params() == params) || !ct.has_left() || ct.empty()) {
    fail(ErrorCode::format, "sum ciphertext has wrong parameters or no left part");
  }
}

void check_record(const EncryptedRecord& rec, const ore::OreParams& params,
                  std::uint32_t d) {
  if (rec.column_cts.size() != d) {
    fail(ErrorCode::inconsistent_bundle,
         "record " + std::to_string(rec.record_id) + " has " +
             std::to_string(rec.column_cts.size()) + " columns, expected " +
             std::to_string(d));
  }
  for (const auto& ct : rec.column_cts) check_column_ct(ct, params, "record");
  if (rec.payload_ct.empty()) {
    fail(ErrorCode::inconsistent_bundle, "record without payload");
  }
}

}  // namespace

std::unique_ptr<CloudDatabase> CloudDatabase::ingest(UploadBundle&& bundle,
                                                     IndexVariant variant) {
  try {
    bundle.params.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("upload: ") + e.what());
  }
  const std::uint32_t d = bundle.d;
  const std::size_t n = bundle.records.size();
  if (d == 0) fail(ErrorCode::inconsistent_bundle, "upload: d is zero");
  if (n < 2) {
    fail(ErrorCode::inconsistent_bundle, "upload: need at least 2 records");
  }
  if (bundle.active.size() != d) {
    fail(ErrorCode::inconsistent_bundle, "upload: active list count != d");
  }
  if (bundle.sums.size() != std::size_t{d} * n * (n - 1) / 2) {
    fail(ErrorCode::inconsistent_bundle,
         "upload: " + std::to_string(bundle.sums.size()) +
             " sums, expected " + std::to_string(std::size_t{d} * n * (n - 1) / 2));
  }

  auto db = std::make_unique<CloudDatabase>(variant);
  db->params_ = bundle.params;
  db->d_ = d;
  db->records_.reserve(n);
  for (EncryptedRecord& rec : bundle.records) {
    check_record(rec, bundle.params, d);
    std::uint64_t id = rec.record_id;
    if (!db->records_.emplace(id, std::move(rec)).second) {
      fail(ErrorCode::duplicate_id, "upload: duplicate record " + std::to_string(id));
    }
    db->order_.push_back(id);
  }
  bundle.records.clear();

  std::vector<absl::flat_hash_set<std::uint32_t>> active(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    for (std::uint32_t t : bundle.active[j]) {
      if (t == 0 || !active[j].insert(t).second) {
        fail(ErrorCode::inconsistent_bundle, "upload: bad active ooc list");
      }
    }
  }
  db->active_ = std::move(bundle.active);

  // Element ranks from the column order; only E(P)'s order is used.
  db->columns_.resize(d);
  std::vector<absl::flat_hash_map<std::uint64_t, std::uint32_t>> rank(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    std::vector<std::uint64_t>& col = db->columns_[j];
    col = db->order_;
    std::sort(col.begin(), col.end(), [&](std::uint64_t x, std::uint64_t y) {
      return db->element_compare(j, x, y) < 0;
    });
    rank[j].reserve(n);
    for (std::uint32_t r = 0; r < col.size(); ++r) rank[j][col[r]] = r;
  }

  struct Slot {
    std::uint32_t lo_rank;
    std::uint32_t hi_rank;
    SumNode* node;
  };
  // groups[j][ooc] -> members; nodes are owned by `owned` until placed.
  std::vector<std::map<std::uint32_t, std::vector<Slot>>> groups(d);
  std::vector<std::unique_ptr<SumNode>> owned;
  owned.reserve(bundle.sums.size());
  db->pair_index_.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    db->pair_index_[j].reserve(n * (n - 1) / 2);
  }
  for (SumEntry& e : bundle.sums) {
    if (e.dim >= d || e.id_a >= e.id_b) {
      fail(ErrorCode::inconsistent_bundle, "upload: malformed sum entry");
    }
    auto ra = rank[e.dim].find(e.id_a);
    auto rb = rank[e.dim].find(e.id_b);
    if (ra == rank[e.dim].end() || rb == rank[e.dim].end()) {
      fail(ErrorCode::inconsistent_bundle, "upload: sum names unknown record");
    }
    if (!active[e.dim].contains(e.ooc_id)) {
      fail(ErrorCode::unknown_ooc, "upload: sum in inactive ooc " +
                                       std::to_string(e.ooc_id));
    }
    check_sum_ct(e.sum_ct, bundle.params);
    auto node = std::make_unique<SumNode>();
    node->ooc_id = e.ooc_id;
    bool a_low = ra->second < rb->second;
    node->lo_id = a_low ? e.id_a : e.id_b;
    node->hi_id = a_low ? e.id_b : e.id_a;
    node->sum_ct = std::move(e.sum_ct);
    if (!db->pair_index_[e.dim]
             .emplace(PairKey{e.id_a, e.id_b}, node.get())
             .second) {
      fail(ErrorCode::inconsistent_bundle, "upload: duplicate sum entry");
    }
    groups[e.dim][e.ooc_id].push_back(
        Slot{std::min(ra->second, rb->second), std::max(ra->second, rb->second),
             node.get()});
    owned.push_back(std::move(node));
  }
  bundle.sums.clear();
  bundle.sums.shrink_to_fit();

  db->forest_.resize(d);
  std::vector<SumNode*> sorted;
  for (std::uint32_t j = 0; j < d; ++j) {
    for (auto& [ooc, slots] : groups[j]) {
      std::sort(slots.begin(), slots.end(), [](const Slot& x, const Slot& y) {
        return std::tie(x.lo_rank, x.hi_rank) < std::tie(y.lo_rank, y.hi_rank);
      });
      sorted.clear();
      for (const Slot& s : slots) sorted.push_back(s.node);
      auto [it, inserted] = db->forest_[j].emplace(ooc, SumIndex(variant));
      it->second.build_sorted(sorted);
      slots.clear();
      slots.shrink_to_fit();
    }
  }
  // Every node now belongs to a tree.
  for (auto& p : owned) p.release();
  return db;
}

std::unique_ptr<CloudDatabase> CloudDatabase::restore(
    const ore::OreParams& params, std::uint32_t d, IndexVariant variant,
    std::vector<EncryptedRecord>&& records,
    std::vector<std::vector<std::uint64_t>>&& columns,
    std::vector<std::vector<std::uint32_t>>&& active,
    std::vector<TreeImage>&& trees) {
  auto db = std::make_unique<CloudDatabase>(variant);
  // Trees own their nodes from here on, even if validation below fails.
  db->forest_.resize(d);
  db->pair_index_.resize(d);
  bool bad_tree = false;
  for (TreeImage& t : trees) {
    bool placed = false;
    if (t.dim < d) {
      auto [it, inserted] =
          db->forest_[t.dim].emplace(t.ooc_id, SumIndex(variant));
      if (inserted) {
        it->second.build_sorted(t.inorder);
        placed = true;
      }
    }
    if (!placed) {
      for (SumNode* node : t.inorder) delete node;
      bad_tree = true;
    }
    t.inorder.clear();
  }
  if (bad_tree) fail(ErrorCode::format, "snapshot: duplicate or misplaced tree");
  params.validate();
  db->params_ = params;
  db->d_ = d;
  for (EncryptedRecord& rec : records) {
    check_record(rec, params, d);
    std::uint64_t id = rec.record_id;
    if (!db->records_.emplace(id, std::move(rec)).second) {
      fail(ErrorCode::format, "snapshot: duplicate record");
    }
    db->order_.push_back(id);
  }
  if (columns.size() != d || active.size() != d) {
    fail(ErrorCode::format, "snapshot: dimension lists do not match d");
  }
  for (const auto& col : columns) {
    if (col.size() != db->records_.size()) {
      fail(ErrorCode::format, "snapshot: column view size mismatch");
    }
    for (std::uint64_t id : col) {
      if (!db->records_.contains(id)) {
        fail(ErrorCode::format, "snapshot: column names unknown record");
      }
    }
  }
  db->columns_ = std::move(columns);
  db->active_ = std::move(active);
  for (std::uint32_t j = 0; j < d; ++j) {
    for (auto& [ooc, tree] : db->forest_[j]) {
      bool known = std::find(db->active_[j].begin(), db->active_[j].end(),
                             ooc) != db->active_[j].end();
      if (!known) fail(ErrorCode::format, "snapshot: tree for inactive ooc");
      SumIndex& tree_ref = tree;
      std::vector<const SumNode*> nodes = tree_ref.nodes();
      for (const SumNode* node : nodes) {
        if (!db->records_.contains(node->lo_id) ||
            !db->records_.contains(node->hi_id) ||
            node->lo_id == node->hi_id) {
          fail(ErrorCode::format, "snapshot: sum names unknown record");
        }
        check_sum_ct(node->sum_ct, params);
        const_cast<SumNode*>(node)->ooc_id = ooc;
        if (!db->pair_index_[j]
                 .emplace(PairKey::of(node->lo_id, node->hi_id),
                          const_cast<SumNode*>(node))
                 .second) {
          fail(ErrorCode::format, "snapshot: duplicate sum");
        }
      }
    }
    std::size_t n = db->records_.size();
    if (db->pair_index_[j].size() != n * (n - 1) / 2) {
      fail(ErrorCode::format, "snapshot: pair population incomplete");
    }
  }
  return db;
}

const EncryptedRecord& CloudDatabase::record(std::uint64_t id) const {
  auto it = records_.find(id);
  if (it == records_.end()) {
    fail(ErrorCode::unknown_id, "unknown record " + std::to_string(id));
  }
  return it->second;
}

std::size_t CloudDatabase::total_pairs() const {
  std::size_t total = 0;
  for (const auto& idx : pair_index_) total += idx.size();
  return total;
}

const SumNode* CloudDatabase::find_sum(std::uint32_t dim, std::uint64_t id_a,
                                       std::uint64_t id_b) const {
  if (dim >= pair_index_.size()) return nullptr;
  const auto& idx = pair_index_[dim];
  auto it = idx.find(PairKey::of(id_a, id_b));
  return it == idx.end() ? nullptr : it->second;
}

SumRef CloudDatabase::lookup_sum(std::uint32_t dim, std::uint64_t id_a,
                                 std::uint64_t id_b) const {
  auto lock = read_lock();
  const SumNode* node = id_a == id_b ? nullptr : find_sum(dim, id_a, id_b);
  if (node == nullptr) {
    fail(ErrorCode::missing_sum, "no sum for pair (" + std::to_string(id_a) +
                                     ", " + std::to_string(id_b) +
                                     ") in dimension " + std::to_string(dim));
  }
  return SumRef{node->ooc_id, &node->sum_ct};
}

int CloudDatabase::element_compare(std::uint32_t dim, std::uint64_t x,
                                   std::uint64_t y,
                                   std::uint64_t* counter) const {
  if (x == y) return 0;
  const ore::OreCiphertext& cx = record(x).column_cts[dim];
  const ore::OreCiphertext& cy = record(y).column_cts[dim];
  if (counter != nullptr) ++*counter;
  int c = ore::compare(cx, cy);
  if (c != 0) return c;
  return x < y ? -1 : 1;
}

int CloudDatabase::node_compare(std::uint32_t dim, const SumNode& a,
                                const SumNode& b,
                                std::uint64_t* counter) const {
  int c = element_compare(dim, a.lo_id, b.lo_id, counter);
  if (c != 0) return c;
  return element_compare(dim, a.hi_id, b.hi_id, counter);
}

SumIndex& CloudDatabase::tree_for(std::uint32_t dim, std::uint32_t ooc_id) {
  auto& trees = forest_[dim];
  auto it = trees.find(ooc_id);
  if (it == trees.end()) {
    it = trees.emplace(ooc_id, SumIndex(variant_)).first;
  }
  return it->second;
}

void CloudDatabase::validate_insert(const InsertBundle& bundle) const {
  if (d_ == 0) {
    fail(ErrorCode::inconsistent_bundle, "insert: no database uploaded");
  }
  const EncryptedRecord& rec = bundle.record;
  if (records_.contains(rec.record_id)) {
    fail(ErrorCode::duplicate_id,
         "insert: record " + std::to_string(rec.record_id) + " exists");
  }
  check_record(rec, params_, d_);
  if (bundle.new_oocs.size() != d_) {
    fail(ErrorCode::inconsistent_bundle, "insert: new ooc lists != d");
  }
  std::vector<absl::flat_hash_set<std::uint32_t>> fresh(d_);
  for (std::uint32_t j = 0; j < d_; ++j) {
    for (std::uint32_t t : bundle.new_oocs[j]) {
      bool already = std::find(active_[j].begin(), active_[j].end(), t) !=
                     active_[j].end();
      if (t == 0 || already || !fresh[j].insert(t).second) {
        fail(ErrorCode::inconsistent_bundle,
             "insert: ooc " + std::to_string(t) + " declared new but exists");
      }
    }
  }
  const std::size_t n = records_.size();
  if (bundle.sums.size() != std::size_t{d_} * n) {
    fail(ErrorCode::inconsistent_bundle,
         "insert: " + std::to_string(bundle.sums.size()) +
             " sums, expected " + std::to_string(std::size_t{d_} * n));
  }
  std::vector<absl::flat_hash_set<std::uint64_t>> seen(d_);
  for (const SumEntry& e : bundle.sums) {
    if (e.dim >= d_ || e.id_a >= e.id_b) {
      fail(ErrorCode::inconsistent_bundle, "insert: malformed sum entry");
    }
    std::uint64_t other;
    if (e.id_a == rec.record_id) {
      other = e.id_b;
    } else if (e.id_b == rec.record_id) {
      other = e.id_a;
    } else {
      fail(ErrorCode::inconsistent_bundle, "insert: sum without new record");
    }
    if (!records_.contains(other) || !seen[e.dim].insert(other).second) {
      fail(ErrorCode::inconsistent_bundle,
           "insert: sum partner unknown or repeated");
    }
    bool known = std::find(active_[e.dim].begin(), active_[e.dim].end(),
                           e.ooc_id) != active_[e.dim].end();
    if (!known && !fresh[e.dim].contains(e.ooc_id)) {
      fail(ErrorCode::unknown_ooc, "insert: ooc " + std::to_string(e.ooc_id) +
                                       " neither active nor declared new");
    }
    check_sum_ct(e.sum_ct, params_);
  }
}

void CloudDatabase::add_record_to_columns(const EncryptedRecord& rec,
                                          MaintenanceStats& st) {
  for (std::uint32_t j = 0; j < d_; ++j) {
    auto& col = columns_[j];
    auto pos = std::lower_bound(
        col.begin(), col.end(), rec.record_id,
        [&](std::uint64_t x, std::uint64_t id) {
          return element_compare(j, x, id, &st.ore_compares) < 0;
        });
    col.insert(pos, rec.record_id);
  }
}

MaintenanceStats CloudDatabase::apply_insert(InsertBundle&& bundle) {
  std::unique_lock<std::shared_mutex> lock(mu_);
  validate_insert(bundle);
  MaintenanceStats st;
  const std::uint64_t id = bundle.record.record_id;
  records_.emplace(id, std::move(bundle.record));
  order_.push_back(id);
  for (std::uint32_t j = 0; j < d_; ++j) {
    for (std::uint32_t t : bundle.new_oocs[j]) active_[j].push_back(t);
  }
  add_record_to_columns(record(id), st);
  for (SumEntry& e : bundle.sums) {
    const std::uint64_t other = e.id_a == id ? e.id_b : e.id_a;
    auto node = std::make_unique<SumNode>();
    node->ooc_id = e.ooc_id;
    const bool new_low = element_compare(e.dim, id, other, &st.ore_compares) < 0;
    node->lo_id = new_low ? id : other;
    node->hi_id = new_low ? other : id;
    node->sum_ct = std::move(e.sum_ct);
    SumNode* raw = node.get();
    const std::uint32_t dim = e.dim;
    tree_for(dim, e.ooc_id).insert(node.release(),
                                   [&](const SumNode& a, const SumNode& b) {
                                     return node_compare(dim, a, b,
                                                         &st.ore_compares);
                                   });
    pair_index_[dim].emplace(PairKey{e.id_a, e.id_b}, raw);
  }
  return st;
}

MaintenanceStats CloudDatabase::apply_delete(const DeleteRequest& req) {
  std::unique_lock<std::shared_mutex> lock(mu_);
  const std::uint64_t id = req.record_id;
  if (!records_.contains(id)) {
    fail(ErrorCode::unknown_id, "delete: unknown record " + std::to_string(id));
  }
  for (std::uint32_t j = 0; j < d_; ++j) {
    for (std::uint64_t other : order_) {
      if (other != id && find_sum(j, id, other) == nullptr) {
        fail(ErrorCode::internal, "delete: pair index incomplete");
      }
    }
  }
  MaintenanceStats st;
  for (std::uint32_t j = 0; j < d_; ++j) {
    for (std::uint64_t other : order_) {
      if (other == id) continue;
      const PairKey key = PairKey::of(id, other);
      auto pit = pair_index_[j].find(key);
      SumNode* target = pit->second;
      auto tit = forest_[j].find(target->ooc_id);
      if (tit == forest_[j].end()) {
        fail(ErrorCode::internal, "delete: sum without tree");
      }
      SumIndex& tree = tit->second;
      const std::uint64_t lo = target->lo_id;
      const std::uint64_t hi = target->hi_id;
      SumNode* found = tree.find([&](const SumNode& x) {
        int c = element_compare(j, x.lo_id, lo, &st.ore_compares);
        if (c != 0) return c;
        return element_compare(j, x.hi_id, hi, &st.ore_compares);
      });
      if (found != target) fail(ErrorCode::internal, "delete: tree search missed");
      delete tree.erase(found);
      pair_index_[j].erase(pit);
      if (tree.empty()) forest_[j].erase(tit);
    }
    auto& col = columns_[j];
    col.erase(std::find(col.begin(), col.end(), id));
  }
  order_.erase(std::find(order_.begin(), order_.end(), id));
  records_.erase(id);
  return st;
}

}  // namespace scale
