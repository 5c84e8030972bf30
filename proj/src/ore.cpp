#include "scale/ore.hpp"

#include <openssl/evp.h>

#if defined(__x86_64__)
#include <immintrin.h>
#endif

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <string>

#include "crypto.hpp"
#include "scale/error.hpp"

namespace scale::ore {

using crypto::AesEcb;

// The bulk slot loops treat 16-byte blocks as host words.
static_assert(std::endian::native == std::endian::little);

namespace {

constexpr int kFeistelRounds = 6;
constexpr std::uint8_t kPrfDomain = 'F';
constexpr std::uint8_t kPrpDomain = 'P';

// Public fixed key for the correlation-robust hash H(x, r) = E(x^r)^x.
constexpr std::uint8_t kFixedKey[16] = {0x5c, 0xa1, 0xe0, 0x3d, 0x91, 0x27,
                                        0x4b, 0xf6, 0x08, 0xd3, 0x6e, 0xb2,
                                        0x17, 0xc9, 0x84, 0x2a};

// One context per thread for the fixed-key permutation; compare() is hot and
// should not contend on a lock.
class FixedCipher {
 public:
  FixedCipher() : ctx_(EVP_CIPHER_CTX_new()) {
    if (ctx_ == nullptr ||
        EVP_EncryptInit_ex(ctx_, EVP_aes_128_ecb(), nullptr, kFixedKey,
                           nullptr) != 1) {
      fail(ErrorCode::internal, "fixed-key AES init");
    }
    EVP_CIPHER_CTX_set_padding(ctx_, 0);
  }
  ~FixedCipher() { EVP_CIPHER_CTX_free(ctx_); }
  FixedCipher(const FixedCipher&) = delete;
  FixedCipher& operator=(const FixedCipher&) = delete;

  void encrypt(const std::uint8_t* in, std::uint8_t* out, std::size_t n) {
    int outl = 0;
    if (EVP_EncryptUpdate(ctx_, out, &outl, in, static_cast<int>(n * 16)) !=
        1) {
      fail(ErrorCode::internal, "fixed-key AES");
    }
  }

 private:
  EVP_CIPHER_CTX* ctx_;
};

FixedCipher& fixed_cipher() {
  thread_local FixedCipher cipher;
  return cipher;
}

// Reduces H output to a trit: first 8 bytes big-endian mod 3.
inline std::uint32_t trit_of(const std::uint8_t* h) {
  return static_cast<std::uint32_t>(get_be64(h) % 3);
}

// Prefix of m above block i, right-aligned. Block 0 has an empty prefix.
inline std::uint32_t prefix_of(std::uint32_t m, std::uint32_t block,
                               std::uint32_t bits) {
  std::uint32_t consumed = block * bits;
  if (consumed == 0) return 0;
  return m >> (32 - consumed);
}

inline std::uint32_t block_of(std::uint32_t m, std::uint32_t block,
                              std::uint32_t bits) {
  std::uint32_t shift = 32 - (block + 1) * bits;
  std::uint32_t mask = bits == 32 ? 0xffffffffu : ((1u << bits) - 1);
  return (m >> shift) & mask;
}

inline void prp_input(std::uint8_t* out, std::uint32_t block,
                      std::uint32_t prefix, int round, std::uint32_t chunk) {
  std::memset(out, 0, 16);
  out[0] = kPrpDomain;
  out[1] = static_cast<std::uint8_t>(block);
  put_be32(out + 2, prefix);
  out[6] = static_cast<std::uint8_t>(round);
  out[7] = static_cast<std::uint8_t>(chunk);
}

inline void prf_input(std::uint8_t* out, std::uint32_t block,
                      std::uint32_t prefix, std::uint32_t slot) {
  std::memset(out, 0, 16);
  out[0] = kPrfDomain;
  out[1] = static_cast<std::uint8_t>(block);
  put_be32(out + 2, prefix);
  out[6] = static_cast<std::uint8_t>(slot >> 8);
  out[7] = static_cast<std::uint8_t>(slot);
}

// Word-typed scratch so the slot loops can use 64-bit lanes without
// aliasing a byte buffer.
std::uint64_t* scratch_words(int which, std::size_t nwords) {
  thread_local std::vector<std::uint64_t> bufs[3];
  std::vector<std::uint64_t>& b = bufs[which];
  if (b.size() < nwords) b.resize(nwords);
  return b.data();
}

inline std::uint8_t* as_bytes(std::uint64_t* w) {
  return reinterpret_cast<std::uint8_t*>(w);
}

}  // namespace

using RoundTables = std::uint8_t[kFeistelRounds][256];

struct OreKey::Impl {
  OreParams params;
  Bytes prf_key;
  AesEcb prf;
  AesEcb prp;

  Impl(const OreParams& p, Bytes key, Bytes k1, Bytes k2)
      : params(p), prf_key(std::move(key)), prf(k1), prp(k2) {}

  // Round functions of the Feistel permutation of every block as lookup
  // tables over the half-block domain, from one batched AES call.
  void round_tables(const std::uint32_t* prefixes, RoundTables* f) const {
    const std::uint32_t half = params.block_bits / 2;
    const std::uint32_t mask = (1u << half) - 1;
    const std::uint32_t half_domain = 1u << half;
    const std::uint32_t chunks = (half_domain + 15) / 16;
    const std::uint32_t blocks = params.num_blocks();
    // At most 2 blocks of 16 chunks or 16 blocks of 1 chunk.
    std::uint8_t in[kFeistelRounds * 32 * 16];
    std::uint8_t out[kFeistelRounds * 32 * 16];
    const std::uint32_t per_block = kFeistelRounds * chunks;
    for (std::uint32_t i = 0; i < blocks; ++i) {
      for (int round = 0; round < kFeistelRounds; ++round) {
        for (std::uint32_t c = 0; c < chunks; ++c) {
          prp_input(in + (i * per_block + round * chunks + c) * 16, i,
                    prefixes[i], round, c);
        }
      }
    }
    prp.encrypt(in, out, blocks * per_block);
    for (std::uint32_t i = 0; i < blocks; ++i) {
      const std::uint8_t* o = out + i * per_block * 16;
      for (int round = 0; round < kFeistelRounds; ++round) {
        for (std::uint32_t v = 0; v < half_domain; ++v) {
          f[i][round][v] = o[(round * chunks + (v >> 4)) * 16 + (v & 15)] & mask;
        }
      }
    }
  }
};

void OreParams::validate() const {
  if (domain_bits != 32) {
    fail(ErrorCode::parameter, "domain_bits must be 32, got " +
                                   std::to_string(domain_bits));
  }
  if (block_bits != 2 && block_bits != 4 && block_bits != 8 &&
      block_bits != 16) {
    fail(ErrorCode::parameter,
         "block_bits must be one of 2, 4, 8, 16 and divide 32, got " +
             std::to_string(block_bits));
  }
  if (key_bits != 128 && key_bits != 192 && key_bits != 256) {
    fail(ErrorCode::parameter, "key_bits must be 128, 192 or 256, got " +
                                   std::to_string(key_bits));
  }
}

std::size_t OreParams::left_bytes() const {
  return num_blocks() * (kTagBytes + 2);
}

std::size_t OreParams::right_bytes() const {
  return kNonceBytes + num_blocks() * (block_domain() / 4);
}

OreKey OreKey::from_bytes(const OreParams& params, ByteView prf_key) {
  params.validate();
  const std::size_t kb = params.key_bits / 8;
  if (prf_key.size() != kb) {
    fail(ErrorCode::parameter, "ORE key must be " + std::to_string(kb) +
                                   " bytes, got " +
                                   std::to_string(prf_key.size()));
  }
  static constexpr char kPrfLabel[] = "scale/ore/prf";
  static constexpr char kPrpLabel[] = "scale/ore/prp";
  auto derive = [&](const char* label, std::size_t len) {
    auto mac = crypto::hmac_sha256(
        prf_key, ByteView(reinterpret_cast<const std::uint8_t*>(label), len));
    return Bytes(mac.begin(), mac.begin() + kb);
  };
  auto impl = std::make_shared<Impl>(
      params, Bytes(prf_key.begin(), prf_key.end()),
      derive(kPrfLabel, sizeof(kPrfLabel) - 1),
      derive(kPrpLabel, sizeof(kPrpLabel) - 1));
  return OreKey(std::move(impl));
}

OreKey OreKey::setup(const OreParams& params,
                     std::optional<std::uint64_t> seed) {
  params.validate();
  const std::size_t kb = params.key_bits / 8;
  Bytes key(kb);
  if (seed) {
    std::uint8_t msg[24] = {'s', 'c', 'a', 'l', 'e', '/', 'o', 'r',
                            'e', '/', 's', 'e', 'e', 'd'};
    put_be64(msg + 14, *seed);
    msg[22] = params.block_bits;
    msg[23] = static_cast<std::uint8_t>(params.key_bits / 8);
    auto digest = crypto::sha256(ByteView(msg, sizeof(msg)));
    std::memcpy(key.data(), digest.data(), kb);
  } else {
    crypto::random_bytes(key.data(), kb);
  }
  return from_bytes(params, key);
}

const OreParams& OreKey::params() const { return impl_->params; }
ByteView OreKey::prf_key() const { return impl_->prf_key; }

OreCiphertext::OreCiphertext(const OreParams& params, Parts parts, Bytes data)
    : params_(params), parts_(parts), data_(std::move(data)) {}

ByteView OreCiphertext::left_part() const {
  if (!has_left()) return {};
  return ByteView(data_).subspan(0, params_.left_bytes());
}

ByteView OreCiphertext::right_part() const {
  if (!has_right()) return {};
  std::size_t off = has_left() ? params_.left_bytes() : 0;
  return ByteView(data_).subspan(off, params_.right_bytes());
}

ByteView OreCiphertext::nonce() const {
  return right_part().subspan(0, has_right() ? kNonceBytes : 0);
}

void OreCiphertext::serialize(ByteWriter& out) const {
  out.u8(params_.domain_bits);
  out.u8(params_.block_bits);
  out.u8(static_cast<std::uint8_t>(params_.key_bits / 8));
  out.blob(left_part());
  out.blob(right_part());
}

Bytes OreCiphertext::serialize() const {
  ByteWriter w;
  w.reserve(serialized_size());
  serialize(w);
  return w.take();
}

OreCiphertext OreCiphertext::parse(ByteReader& in) {
  OreParams p;
  p.domain_bits = in.u8();
  p.block_bits = in.u8();
  p.key_bits = static_cast<std::uint16_t>(in.u8() * 8);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("ciphertext header: ") + e.what());
  }
  ByteView left = in.blob();
  ByteView right = in.blob();
  if (!left.empty() && left.size() != p.left_bytes()) {
    fail(ErrorCode::format, "left part length " + std::to_string(left.size()) +
                                " != " + std::to_string(p.left_bytes()));
  }
  if (!right.empty() && right.size() != p.right_bytes()) {
    fail(ErrorCode::format,
         "right part length " + std::to_string(right.size()) +
             " != " + std::to_string(p.right_bytes()));
  }
  if (left.empty() && right.empty()) {
    fail(ErrorCode::format, "ciphertext has neither part");
  }
  Parts parts = left.empty()    ? Parts::right_only
                : right.empty() ? Parts::left_only
                                : Parts::full;
  Bytes data;
  data.reserve(left.size() + right.size());
  data.insert(data.end(), left.begin(), left.end());
  data.insert(data.end(), right.begin(), right.end());
  return OreCiphertext(p, parts, std::move(data));
}

OreCiphertext OreCiphertext::deserialize(ByteView bytes) {
  ByteReader r(bytes);
  OreCiphertext ct = parse(r);
  r.expect_done("ciphertext");
  return ct;
}

namespace {

// Fills the packed trits of `count` consecutive slots of one block,
// starting at slot j0; count is a multiple of 4. h and t hold the hash and
// tag of each slot as 16-byte blocks.
void fill_run_scalar(const RoundTables& f, std::uint32_t y, std::uint32_t j0,
                     std::uint32_t count, std::uint32_t half,
                     const std::uint64_t* h, const std::uint64_t* t,
                     std::uint8_t* dst) {
  static constexpr std::uint8_t kAdd3[3][3] = {{0, 1, 2}, {1, 2, 0},
                                               {2, 0, 1}};
  const std::uint32_t half_mask = (1u << half) - 1;
  for (std::uint32_t c = 0; c < count; c += 4) {
    std::uint32_t byte = 0;
    for (std::uint32_t k = 0; k < 4; ++k) {
      const std::uint32_t j = j0 + c + k;
      std::uint32_t a = j >> half, b = j & half_mask;
      b ^= f[5][a];
      a ^= f[4][b];
      b ^= f[3][a];
      a ^= f[2][b];
      b ^= f[1][a];
      a ^= f[0][b];
      const std::uint32_t x = (a << half) | b;
      const std::uint32_t cmp = x < y ? 2 : (x == y ? 0 : 1);
      const std::uint32_t trit = static_cast<std::uint32_t>(
          __builtin_bswap64(h[2 * (c + k)] ^ t[2 * (c + k)]) % 3);
      byte |= std::uint32_t{kAdd3[cmp][trit]} << (2 * k);
    }
    *dst++ = static_cast<std::uint8_t>(byte);
  }
}

#if defined(__x86_64__)
#define SCALE_AVX2 __attribute__((target("avx2"), always_inline)) inline

SCALE_AVX2 __m256i lookup_avx2(const std::uint8_t* table, __m256i idx,
                               __m256i byte_mask) {
  return _mm256_and_si256(
      _mm256_i32gather_epi32(reinterpret_cast<const int*>(table), idx, 1),
      byte_mask);
}

// Byte sums of the low qword of H ^ tag for eight 16-byte slots, in slot
// order.
SCALE_AVX2 __m256i byte_sums_avx2(const std::uint64_t* h,
                                  const std::uint64_t* t, __m256i order) {
  const auto* hv = reinterpret_cast<const __m256i*>(h);
  const auto* tv = reinterpret_cast<const __m256i*>(t);
  const __m256i zero = _mm256_setzero_si256();
  __m256i s[4];
  for (int q = 0; q < 4; ++q) {
    s[q] = _mm256_sad_epu8(_mm256_xor_si256(_mm256_loadu_si256(hv + q),
                                            _mm256_loadu_si256(tv + q)),
                           zero);
  }
  __m256i s01 = _mm256_blend_epi32(s[0], _mm256_slli_epi64(s[1], 32), 0xaa);
  __m256i s23 = _mm256_blend_epi32(s[2], _mm256_slli_epi64(s[3], 32), 0xaa);
  return _mm256_permutevar8x32_epi32(_mm256_unpacklo_epi64(s01, s23), order);
}

// Eight slots per step. Round tables are read with 32-bit gathers, so the
// table array needs three bytes of slack past its last row. The trit uses
// 256 = 1 (mod 3): a big-endian word is congruent to its byte sum, which
// one SAD instruction computes. count is a multiple of 8.
__attribute__((target("avx2"))) void fill_run_avx2(
    const RoundTables& f, std::uint32_t y, std::uint32_t j0,
    std::uint32_t count, std::uint32_t half, const std::uint64_t* h,
    const std::uint64_t* t, std::uint8_t* dst) {
  const __m128i shift = _mm_cvtsi32_si128(static_cast<int>(half));
  const __m256i half_mask = _mm256_set1_epi32((1 << half) - 1);
  const __m256i byte_mask = _mm256_set1_epi32(0xff);
  const __m256i yv = _mm256_set1_epi32(static_cast<int>(y));
  const __m256i one = _mm256_set1_epi32(1);
  const __m256i two = _mm256_set1_epi32(2);
  const __m256i three = _mm256_set1_epi32(3);
  const __m256i lanes = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256i pack_shift = _mm256_setr_epi32(0, 2, 4, 6, 0, 2, 4, 6);
  const __m256i order = _mm256_setr_epi32(0, 4, 1, 5, 2, 6, 3, 7);
  for (std::uint32_t c = 0; c < count; c += 8) {
    __m256i j = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(j0 + c)),
                                 lanes);
    __m256i a = _mm256_srl_epi32(j, shift);
    __m256i b = _mm256_and_si256(j, half_mask);
    b = _mm256_xor_si256(b, lookup_avx2(f[5], a, byte_mask));
    a = _mm256_xor_si256(a, lookup_avx2(f[4], b, byte_mask));
    b = _mm256_xor_si256(b, lookup_avx2(f[3], a, byte_mask));
    a = _mm256_xor_si256(a, lookup_avx2(f[2], b, byte_mask));
    b = _mm256_xor_si256(b, lookup_avx2(f[1], a, byte_mask));
    a = _mm256_xor_si256(a, lookup_avx2(f[0], b, byte_mask));
    __m256i x = _mm256_or_si256(_mm256_sll_epi32(a, shift), b);
    __m256i cmp = _mm256_or_si256(
        _mm256_and_si256(_mm256_cmpgt_epi32(yv, x), two),
        _mm256_and_si256(_mm256_cmpgt_epi32(x, yv), one));
    // Byte sums are below 2041, where (s * 43691) >> 17 == s / 3.
    __m256i sum = byte_sums_avx2(h + 2 * c, t + 2 * c, order);
    __m256i q = _mm256_srli_epi32(
        _mm256_mullo_epi32(sum, _mm256_set1_epi32(43691)), 17);
    __m256i trit = _mm256_sub_epi32(sum, _mm256_mullo_epi32(q, three));
    __m256i z = _mm256_add_epi32(cmp, trit);
    z = _mm256_sub_epi32(z, _mm256_and_si256(_mm256_cmpgt_epi32(z, two), three));
    z = _mm256_sllv_epi32(z, pack_shift);
    z = _mm256_hadd_epi32(z, z);
    z = _mm256_hadd_epi32(z, z);
    dst[c / 4] = static_cast<std::uint8_t>(_mm256_extract_epi32(z, 0));
    dst[c / 4 + 1] = static_cast<std::uint8_t>(_mm256_extract_epi32(z, 4));
  }
}

bool avx2_supported() {
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
}
#else
bool avx2_supported() { return false; }
#endif

std::atomic<bool> vector_kernel_enabled{true};

// All blocks advance through the Feistel rounds together, so a ciphertext
// costs a fixed number of AES calls whatever the block size.
void write_left(const OreKey::Impl& k, AesEcb::Lease& prp,
                AesEcb::Lease& prf, std::uint32_t m, std::uint8_t* out) {
  const std::uint32_t bits = k.params.block_bits;
  const std::uint32_t blocks = k.params.num_blocks();
  const std::uint32_t half = bits / 2;
  const std::uint32_t mask = (1u << half) - 1;
  std::uint32_t prefix[16], l[16], r[16];
  std::uint8_t in[16 * 16], enc[16 * 16];
  for (std::uint32_t i = 0; i < blocks; ++i) {
    prefix[i] = prefix_of(m, i, bits);
    std::uint32_t x = block_of(m, i, bits);
    l[i] = x >> half;
    r[i] = x & mask;
  }
  for (int round = 0; round < kFeistelRounds; ++round) {
    for (std::uint32_t i = 0; i < blocks; ++i) {
      prp_input(in + i * 16, i, prefix[i], round, r[i] >> 4);
    }
    prp.encrypt(in, enc, blocks);
    for (std::uint32_t i = 0; i < blocks; ++i) {
      std::uint32_t f = enc[i * 16 + (r[i] & 15)] & mask;
      std::uint32_t nl = r[i];
      r[i] = l[i] ^ f;
      l[i] = nl;
    }
  }
  for (std::uint32_t i = 0; i < blocks; ++i) {
    prf_input(in + i * 16, i, prefix[i], (l[i] << half) | r[i]);
  }
  prf.encrypt(in, enc, blocks);
  for (std::uint32_t i = 0; i < blocks; ++i) {
    std::uint32_t pos = (l[i] << half) | r[i];
    std::uint8_t* cell = out + i * (kTagBytes + 2);
    std::memcpy(cell, enc + i * 16, kTagBytes);
    cell[16] = static_cast<std::uint8_t>(pos >> 8);
    cell[17] = static_cast<std::uint8_t>(pos);
  }
}

void write_right(const OreKey::Impl& k, std::uint32_t m, const Nonce& nonce,
                 std::uint8_t* out) {
  const std::uint32_t bits = k.params.block_bits;
  const std::uint32_t blocks = k.params.num_blocks();
  const std::uint32_t domain = k.params.block_domain();
  const std::uint32_t domain_shift = bits;
  std::memcpy(out, nonce.data(), kNonceBytes);
  // Every table byte is written below.
  std::uint8_t* tables = out + kNonceBytes;

  std::uint64_t* words = scratch_words(0, 2048 * 2);
  std::uint64_t* t = scratch_words(1, 2048 * 2);
  std::uint64_t* h = scratch_words(2, 2048 * 2);
  std::uint64_t r0, r1;
  std::memcpy(&r0, nonce.data(), 8);
  std::memcpy(&r1, nonce.data() + 8, 8);
  const std::uint32_t half = bits / 2;
  const bool vector = vector_kernel_enabled.load(std::memory_order_relaxed) &&
                      avx2_supported();
  static_assert(kFeistelRounds == 6);
  std::uint32_t prefix[16], y[16];
  std::uint64_t base[16];
  for (std::uint32_t i = 0; i < blocks; ++i) {
    prefix[i] = prefix_of(m, i, bits);
    y[i] = block_of(m, i, bits);
    std::uint8_t tmpl[16];
    prf_input(tmpl, i, prefix[i], 0);
    std::memcpy(&base[i], tmpl, 8);
  }
  // One spare row set: the vector kernel's gathers read past the end.
  RoundTables f[17];
  k.round_tables(prefix, f);

  // Slots of all blocks form one sequence g = block * domain + j, filled in
  // table order; tables are contiguous, so g also indexes the packed trits.
  // The value behind slot j is found by running the permutation backwards,
  // so all writes are sequential. Chunked so the three buffers stay cache
  // resident.
  AesEcb::Lease prf(k.prf);
  const std::uint32_t total = blocks * domain;
  constexpr std::uint32_t kChunk = 2048;
  for (std::uint32_t g0 = 0; g0 < total; g0 += kChunk) {
    const std::uint32_t n = std::min(kChunk, total - g0);
    for (std::uint32_t c = 0; c < n; ++c) {
      const std::uint32_t g = g0 + c;
      const std::uint32_t j = g & (domain - 1);
      // Bytes 6 and 7 carry the slot index, big-endian.
      words[2 * c] = base[g >> domain_shift] | (std::uint64_t{j >> 8} << 48) |
                     (std::uint64_t{j & 0xff} << 56);
      words[2 * c + 1] = 0;
    }
    prf.encrypt(as_bytes(words), as_bytes(t), n);
    // H(tag_j, r) = E0(tag_j ^ r) ^ tag_j
    for (std::uint32_t c = 0; c < n; ++c) {
      words[2 * c] = t[2 * c] ^ r0;
      words[2 * c + 1] = t[2 * c + 1] ^ r1;
    }
    fixed_cipher().encrypt(as_bytes(words), as_bytes(h), n);
    // Runs of slots from one block, four slots per table byte.
    for (std::uint32_t c0 = 0; c0 < n;) {
      const std::uint32_t g = g0 + c0;
      const std::uint32_t run = std::min(n - c0, domain - (g & (domain - 1)));
      const std::uint32_t i = g >> domain_shift;
#if defined(__x86_64__)
      if (vector && run % 8 == 0) {
        fill_run_avx2(f[i], y[i], g & (domain - 1), run, half, h + 2 * c0,
                      t + 2 * c0, tables + (g >> 2));
        c0 += run;
        continue;
      }
#endif
      fill_run_scalar(f[i], y[i], g & (domain - 1), run, half, h + 2 * c0,
                      t + 2 * c0, tables + (g >> 2));
      c0 += run;
    }
  }
}

CompareTrace compare_left_right(const OreParams& p, ByteView left,
                                ByteView right) {
  const std::uint32_t blocks = p.num_blocks();
  const std::size_t table_bytes = p.block_domain() / 4;
  const std::uint8_t* nonce = right.data();
  // Most compares end in the first few blocks, so hash in small batches
  // rather than all blocks up front.
  constexpr std::uint32_t kChunk = 8;
  std::uint8_t in[16 * kChunk];
  std::uint8_t out[16 * kChunk];
  for (std::uint32_t i = 0; i < blocks; ++i) {
    const std::uint32_t c = i % kChunk;
    if (c == 0) {
      const std::uint32_t count = std::min(kChunk, blocks - i);
      for (std::uint32_t j = 0; j < count; ++j) {
        const std::uint8_t* tag = left.data() + (i + j) * (kTagBytes + 2);
        for (int b = 0; b < 16; ++b) in[j * 16 + b] = tag[b] ^ nonce[b];
      }
      fixed_cipher().encrypt(in, out, count);
    }
    const std::uint8_t* cell = left.data() + i * (kTagBytes + 2);
    std::uint32_t pos = (std::uint32_t{cell[16]} << 8) | cell[17];
    if (pos >= p.block_domain()) {
      fail(ErrorCode::format, "left block position out of range");
    }
    std::uint8_t h[8];
    for (int b = 0; b < 8; ++b) h[b] = out[c * 16 + b] ^ cell[b];
    const std::uint8_t* table = right.data() + kNonceBytes + i * table_bytes;
    std::uint32_t z = (table[pos >> 2] >> ((pos & 3) * 2)) & 3;
    std::uint32_t v = (z + 3 - trit_of(h)) % 3;
    if (v != 0) {
      return CompareTrace{v == 1 ? 1 : -1, static_cast<int>(i)};
    }
  }
  return CompareTrace{0, -1};
}

}  // namespace

namespace detail {
void set_vector_kernel(bool enabled) { vector_kernel_enabled = enabled; }
bool vector_kernel_available() { return avx2_supported(); }
}  // namespace detail

OreCiphertext encrypt(const OreKey& key, std::uint32_t m, Parts parts,
                      const std::optional<Nonce>& nonce) {
  const OreKey::Impl& k = key.impl();
  const OreParams& p = k.params;
  const bool left = parts != Parts::right_only;
  const bool right = parts != Parts::left_only;
  Bytes data((left ? p.left_bytes() : 0) + (right ? p.right_bytes() : 0));
  if (left) {
    AesEcb::Lease prp(k.prp);
    AesEcb::Lease prf(k.prf);
    write_left(k, prp, prf, m, data.data());
  }
  if (right) {
    Nonce r;
    if (nonce) {
      r = *nonce;
    } else {
      crypto::random_bytes(r.data(), r.size());
    }
    write_right(k, m, r, data.data() + (left ? p.left_bytes() : 0));
  }
  return OreCiphertext(p, parts, std::move(data));
}

std::vector<OreCiphertext> encrypt_left_many(
    const OreKey& key, std::span<const std::uint32_t> ms) {
  const OreKey::Impl& k = key.impl();
  const OreParams& p = k.params;
  const std::uint32_t bits = p.block_bits;
  const std::uint32_t half = bits / 2;
  const std::uint32_t mask = (1u << half) - 1;
  const std::size_t cell = kTagBytes + 2;

  std::vector<OreCiphertext> out;
  out.reserve(ms.size());
  std::vector<Bytes> data(ms.size(), Bytes(p.left_bytes()));

  constexpr std::size_t kBatch = 4096;
  std::vector<std::uint8_t> in(kBatch * 16), enc(kBatch * 16);
  std::vector<std::uint32_t> l(kBatch), r(kBatch), prefix(kBatch);
  AesEcb::Lease prp(k.prp);
  AesEcb::Lease prf(k.prf);
  for (std::size_t base = 0; base < ms.size(); base += kBatch) {
    const std::size_t n = std::min(kBatch, ms.size() - base);
    for (std::uint32_t i = 0; i < p.num_blocks(); ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        std::uint32_t x = block_of(ms[base + t], i, bits);
        prefix[t] = prefix_of(ms[base + t], i, bits);
        l[t] = x >> half;
        r[t] = x & mask;
      }
      for (int round = 0; round < kFeistelRounds; ++round) {
        for (std::size_t t = 0; t < n; ++t) {
          prp_input(in.data() + t * 16, i, prefix[t], round, r[t] >> 4);
        }
        prp.encrypt(in.data(), enc.data(), n);
        for (std::size_t t = 0; t < n; ++t) {
          std::uint32_t f = enc[t * 16 + (r[t] & 15)] & mask;
          std::uint32_t nl = r[t];
          r[t] = l[t] ^ f;
          l[t] = nl;
        }
      }
      for (std::size_t t = 0; t < n; ++t) {
        std::uint32_t pos = (l[t] << half) | r[t];
        prf_input(in.data() + t * 16, i, prefix[t], pos);
        std::uint8_t* c = data[base + t].data() + i * cell;
        c[16] = static_cast<std::uint8_t>(pos >> 8);
        c[17] = static_cast<std::uint8_t>(pos);
      }
      prf.encrypt(in.data(), enc.data(), n);
      for (std::size_t t = 0; t < n; ++t) {
        std::memcpy(data[base + t].data() + i * cell, enc.data() + t * 16,
                    kTagBytes);
      }
    }
  }
  for (Bytes& d : data) out.emplace_back(p, Parts::left_only, std::move(d));
  return out;
}

CompareTrace compare_traced(const OreCiphertext& a, const OreCiphertext& b) {
  if (!(a.params() == b.params())) {
    fail(ErrorCode::format, "compare: ciphertext parameters differ");
  }
  if (a.empty() || b.empty()) {
    fail(ErrorCode::format, "compare: empty ciphertext");
  }
  if (a.has_left() && b.has_right()) {
    return compare_left_right(a.params(), a.left_part(), b.right_part());
  }
  if (b.has_left() && a.has_right()) {
    CompareTrace t = compare_left_right(a.params(), b.left_part(),
                                        a.right_part());
    t.result = -t.result;
    return t;
  }
  fail(ErrorCode::format, "compare: no left/right pairing available");
}

int compare(const OreCiphertext& a, const OreCiphertext& b) {
  return compare_traced(a, b).result;
}

int first_differing_block(const OreParams& params, std::uint32_t x,
                          std::uint32_t y) {
  for (std::uint32_t i = 0; i < params.num_blocks(); ++i) {
    if (block_of(x, i, params.block_bits) != block_of(y, i, params.block_bits)) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace scale::ore
