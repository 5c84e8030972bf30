#pragma once

// Thin wrappers over libcrypto. Private to the library.

#include <openssl/evp.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <vector>

#include "scale/bytes.hpp"

namespace scale::crypto {

// AES in ECB mode with a fixed key. EVP contexts are not safe to share
// across threads, so each call leases one from a small pool cloned from a
// prototype. Key size selects AES-128/192/256.
class AesEcb {
 public:
  explicit AesEcb(ByteView key);
  ~AesEcb();
  AesEcb(const AesEcb&) = delete;
  AesEcb& operator=(const AesEcb&) = delete;

  class Lease {
   public:
    explicit Lease(const AesEcb& owner);
    ~Lease();
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    void encrypt(const std::uint8_t* in, std::uint8_t* out,
                 std::size_t nblocks);

   private:
    const AesEcb& owner_;
    EVP_CIPHER_CTX* ctx_;
  };

  void encrypt(const std::uint8_t* in, std::uint8_t* out,
               std::size_t nblocks) const {
    Lease(*this).encrypt(in, out, nblocks);
  }

 private:
  EVP_CIPHER_CTX* acquire() const;
  void release(EVP_CIPHER_CTX* ctx) const;

  EVP_CIPHER_CTX* proto_;
  mutable std::mutex mu_;
  mutable std::vector<EVP_CIPHER_CTX*> free_;
};

using Block = std::array<std::uint8_t, 16>;

std::array<std::uint8_t, 32> hmac_sha256(ByteView key, ByteView msg);
std::array<std::uint8_t, 32> sha256(ByteView msg);
void random_bytes(std::uint8_t* out, std::size_t n);

// AES-256-GCM with a 12-byte nonce and 16-byte tag appended.
Bytes gcm_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plain);
// Returns false on authentication failure.
bool gcm_open(ByteView key, ByteView nonce, ByteView aad, ByteView sealed,
              Bytes& plain);

}  // namespace scale::crypto
