#pragma once

// Block-wise order-revealing encryption with left/right ciphertexts.
//
// A plaintext is split into 32/block_bits blocks. The left part of a
// ciphertext carries, per block, a PRF tag of the block prefix and the
// permuted block value. The right part carries, per block, a table of
// 2^block_bits comparison trits masked by a hash of the matching tag and a
// per-ciphertext nonce. compare() needs one left part and one right part and
// no key.
//
// Ciphertexts may carry only one side. Left-only ciphertexts are small and
// cheap; right-only ciphertexts are what a left is compared against. A full
// ciphertext compares with anything under the same key.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "scale/bytes.hpp"

namespace scale::ore {

struct OreParams {
  std::uint8_t domain_bits = 32;
  std::uint8_t block_bits = 16;
  std::uint16_t key_bits = 256;

  // Throws ErrorCode::parameter.
  void validate() const;
  std::uint32_t num_blocks() const { return domain_bits / block_bits; }
  std::uint32_t block_domain() const { return 1u << block_bits; }
  std::size_t left_bytes() const;
  // Includes the 16-byte nonce.
  std::size_t right_bytes() const;

  friend bool operator==(const OreParams&, const OreParams&) = default;
};

inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kNonceBytes = 16;

enum class Parts : std::uint8_t { full = 0, left_only = 1, right_only = 2 };

class OreKey {
 public:
  // Fresh key from the system RNG, or a deterministic one from seed.
  static OreKey setup(const OreParams& params,
                      std::optional<std::uint64_t> seed = std::nullopt);
  // Wraps existing key bytes; prf_key must be key_bits/8 long.
  static OreKey from_bytes(const OreParams& params, ByteView prf_key);

  const OreParams& params() const;
  ByteView prf_key() const;

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  explicit OreKey(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

class OreCiphertext {
 public:
  OreCiphertext() = default;
  OreCiphertext(const OreParams& params, Parts parts, Bytes data);

  const OreParams& params() const { return params_; }
  Parts parts() const { return parts_; }
  bool has_left() const { return parts_ != Parts::right_only; }
  bool has_right() const { return parts_ != Parts::left_only; }
  bool empty() const { return data_.empty(); }

  ByteView left_part() const;
  // The nonce followed by the per-block tables.
  ByteView right_part() const;
  ByteView nonce() const;

  // Header, then u32-prefixed left and right byte arrays.
  void serialize(ByteWriter& out) const;
  Bytes serialize() const;
  static OreCiphertext parse(ByteReader& in);
  static OreCiphertext deserialize(ByteView bytes);
  std::size_t serialized_size() const { return 3 + 8 + data_.size(); }

  friend bool operator==(const OreCiphertext&, const OreCiphertext&) = default;

 private:
  OreParams params_{};
  Parts parts_ = Parts::full;
  Bytes data_;
};

using Nonce = std::array<std::uint8_t, kNonceBytes>;

OreCiphertext encrypt(const OreKey& key, std::uint32_t m,
                      Parts parts = Parts::full,
                      const std::optional<Nonce>& nonce = std::nullopt);

// Left-only encryption of many values, batched through the block cipher.
std::vector<OreCiphertext> encrypt_left_many(const OreKey& key,
                                             std::span<const std::uint32_t> ms);

// sign(m_a - m_b). Uses a.left with b.right, else b.left with a.right.
// Throws ErrorCode::format on mismatched params or when neither pairing is
// available.
int compare(const OreCiphertext& a, const OreCiphertext& b);

struct CompareTrace {
  int result = 0;
  // Index of the block that decided the result, -1 when equal.
  int deciding_block = -1;
};

// Diagnostic variant exposing the block index where the scan stopped.
CompareTrace compare_traced(const OreCiphertext& a, const OreCiphertext& b);

// First block (0 = most significant) where x and y differ, -1 when equal.
int first_differing_block(const OreParams& params, std::uint32_t x,
                          std::uint32_t y);

namespace detail {
// Right-part tables are filled by an AVX2 kernel when the CPU has one. Tests
// switch it off to check the portable path gives identical bytes.
void set_vector_kernel(bool enabled);
bool vector_kernel_available();
}  // namespace detail

}  // namespace scale::ore
