#pragma once

// Key-minimal partition of pairwise sums into order-obvious classes (OOCs)
// and derivation of every column, class and payload key from one master key.
//
// Dimensions are 0-based. Ranks and OOC ids are 1-based.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scale/bytes.hpp"
#include "scale/ore.hpp"

namespace scale {

using MasterKey = std::array<std::uint8_t, 32>;
using PayloadKey = std::array<std::uint8_t, 32>;

// ceil((2n - 3) / 4). Throws ErrorCode::domain for n < 2.
std::uint32_t kappa(std::uint64_t n);

// min(rank_a, n + 1 - rank_b) for 1 <= rank_a < rank_b <= n.
std::uint32_t ooc_of_pair(std::uint64_t rank_a, std::uint64_t rank_b,
                          std::uint64_t n);

// Pairs class t holds in the initial partition of n values.
std::uint64_t initial_class_size(std::uint64_t n, std::uint32_t t);

MasterKey generate_master_key();

ore::OreKey derive_column_key(const MasterKey& mk, std::uint32_t dim,
                              const ore::OreParams& params);
ore::OreKey derive_ooc_key(const MasterKey& mk, std::uint32_t dim,
                           std::uint32_t ooc_id, const ore::OreParams& params);
PayloadKey derive_payload_key(const MasterKey& mk);

class KeySchedule {
 public:
  KeySchedule() = default;

  // Registry starts with ids 1..kappa(n) in every dimension.
  static KeySchedule create(const MasterKey& mk, const ore::OreParams& params,
                            std::uint32_t n, std::uint32_t d);

  const MasterKey& master_key() const { return mk_; }
  const ore::OreParams& params() const { return params_; }
  std::uint32_t n() const { return n_; }
  std::uint32_t d() const { return d_; }
  void set_n(std::uint32_t n) { n_ = n; }

  const ore::OreKey& column_key(std::uint32_t dim) const;
  // Throws ErrorCode::unknown_ooc if the id was never registered.
  const ore::OreKey& ooc_key(std::uint32_t dim, std::uint32_t ooc_id) const;
  const PayloadKey& payload_key() const { return payload_key_; }

  // Active ids of a dimension, in registration order.
  const std::vector<std::uint32_t>& active(std::uint32_t dim) const;
  bool is_active(std::uint32_t dim, std::uint32_t ooc_id) const;
  std::uint32_t next_ooc_id(std::uint32_t dim) const;
  // Appends ooc_id to the registry; ids only grow.
  void register_ooc(std::uint32_t dim, std::uint32_t ooc_id);
  std::size_t total_active() const;

  // mk, d, n, then per-dimension active id lists. Params are not stored.
  Bytes serialize() const;
  static KeySchedule parse(ByteView bytes, const ore::OreParams& params);

 private:
  void check_dim(std::uint32_t dim) const;

  MasterKey mk_{};
  ore::OreParams params_{};
  std::uint32_t n_ = 0;
  std::uint32_t d_ = 0;
  PayloadKey payload_key_{};
  std::vector<ore::OreKey> column_keys_;
  std::vector<std::vector<std::uint32_t>> registry_;
  // Indexed [dim][ooc_id]; empty optional for unregistered ids.
  std::vector<std::vector<std::optional<ore::OreKey>>> ooc_keys_;
};

}  // namespace scale
