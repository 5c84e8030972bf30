#include "crypto.hpp"

#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <climits>
#include <memory>

#include "scale/error.hpp"

namespace scale::crypto {
namespace {

const EVP_CIPHER* ecb_for(std::size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_ecb();
    case 24: return EVP_aes_192_ecb();
    case 32: return EVP_aes_256_ecb();
    default: fail(ErrorCode::parameter, "AES key must be 16, 24 or 32 bytes");
  }
}

struct CtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxFree>;

}  // namespace

AesEcb::AesEcb(ByteView key) : proto_(EVP_CIPHER_CTX_new()) {
  if (proto_ == nullptr) fail(ErrorCode::internal, "EVP_CIPHER_CTX_new");
  const EVP_CIPHER* cipher = ecb_for(key.size());
  if (EVP_EncryptInit_ex(proto_, cipher, nullptr, key.data(), nullptr) != 1) {
    EVP_CIPHER_CTX_free(proto_);
    fail(ErrorCode::internal, "EVP_EncryptInit_ex");
  }
  EVP_CIPHER_CTX_set_padding(proto_, 0);
}

AesEcb::~AesEcb() {
  for (EVP_CIPHER_CTX* c : free_) EVP_CIPHER_CTX_free(c);
  EVP_CIPHER_CTX_free(proto_);
}

EVP_CIPHER_CTX* AesEcb::acquire() const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!free_.empty()) {
      EVP_CIPHER_CTX* c = free_.back();
      free_.pop_back();
      return c;
    }
  }
  CtxPtr c(EVP_CIPHER_CTX_new());
  if (!c || EVP_CIPHER_CTX_copy(c.get(), proto_) != 1) {
    fail(ErrorCode::internal, "EVP_CIPHER_CTX_copy");
  }
  return c.release();
}

void AesEcb::release(EVP_CIPHER_CTX* ctx) const {
  std::lock_guard<std::mutex> lock(mu_);
  free_.push_back(ctx);
}

AesEcb::Lease::Lease(const AesEcb& owner)
    : owner_(owner), ctx_(owner.acquire()) {}

AesEcb::Lease::~Lease() { owner_.release(ctx_); }

void AesEcb::Lease::encrypt(const std::uint8_t* in, std::uint8_t* out,
                            std::size_t nblocks) {
  // EVP takes an int length; chunk well below INT_MAX.
  constexpr std::size_t kChunk = std::size_t{1} << 20;
  while (nblocks > 0) {
    std::size_t n = nblocks < kChunk ? nblocks : kChunk;
    int outl = 0;
    if (EVP_EncryptUpdate(ctx_, out, &outl, in, static_cast<int>(n * 16)) !=
            1 ||
        outl != static_cast<int>(n * 16)) {
      fail(ErrorCode::internal, "EVP_EncryptUpdate");
    }
    in += n * 16;
    out += n * 16;
    nblocks -= n;
  }
}

std::array<std::uint8_t, 32> hmac_sha256(ByteView key, ByteView msg) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(),
           msg.size(), out.data(), &len) == nullptr ||
      len != out.size()) {
    fail(ErrorCode::internal, "HMAC-SHA256");
  }
  return out;
}

std::array<std::uint8_t, 32> sha256(ByteView msg) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(msg.data(), msg.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    fail(ErrorCode::internal, "SHA-256");
  }
  return out;
}

void random_bytes(std::uint8_t* out, std::size_t n) {
  if (n > INT_MAX || RAND_bytes(out, static_cast<int>(n)) != 1) {
    fail(ErrorCode::internal, "RAND_bytes");
  }
}

Bytes gcm_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plain) {
  CtxPtr ctx(EVP_CIPHER_CTX_new());
  Bytes out(plain.size() + 16);
  int len = 0;
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(nonce.size()), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(),
                         nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plain.data(),
                        static_cast<int>(plain.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16,
                          out.data() + plain.size()) != 1) {
    fail(ErrorCode::internal, "AES-GCM seal");
  }
  return out;
}

bool gcm_open(ByteView key, ByteView nonce, ByteView aad, ByteView sealed,
              Bytes& plain) {
  if (sealed.size() < 16) return false;
  std::size_t body = sealed.size() - 16;
  CtxPtr ctx(EVP_CIPHER_CTX_new());
  plain.assign(body, 0);
  int len = 0;
  Bytes tag(sealed.end() - 16, sealed.end());
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(nonce.size()), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(),
                         nonce.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) != 1 ||
      EVP_DecryptUpdate(ctx.get(), plain.data(), &len, sealed.data(),
                        static_cast<int>(body)) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) !=
          1) {
    return false;
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &fin) != 1) {
    plain.clear();
    return false;
  }
  return true;
}

}  // namespace scale::crypto
