#pragma once

// Ciphertext-only dynamic skyline evaluation on the cloud.

#include <cstdint>
#include <vector>

#include "scale/cloud_store.hpp"
#include "scale/types.hpp"

namespace scale {

// flags[m] = sign(|alpha[m] - q[m]| - |beta[m] - q[m]|) for a candidate
// alpha and a window entry beta.
struct DominanceFlags {
  std::vector<std::int8_t> flags;

  // alpha dynamically dominates beta.
  bool candidate_dominates() const;
  // beta dynamically dominates alpha.
  bool candidate_dominated() const;
};

struct QueryStats {
  std::uint64_t secure_compares = 0;
  std::uint64_t ore_compares = 0;
  std::uint64_t dominance_checks = 0;
  std::size_t window_peak = 0;
};

// sign(|a - q| - |b - q|) from ciphertexts alone. a, b are full column
// ciphertexts, q is the query's column ciphertext, sum is the ooc ciphertext
// of a + b and two_q the ciphertext of 2q under the same ooc key. two_q may
// be null when the caller lacks it; the function then throws
// ErrorCode::incomplete_query if q lies inside [min(a,b), max(a,b)].
int secure_compare(const ore::OreCiphertext& a, const ore::OreCiphertext& b,
                   const ore::OreCiphertext& q, const ore::OreCiphertext& sum,
                   const ore::OreCiphertext* two_q,
                   std::uint64_t* ore_compares = nullptr);

// Flags of candidate alpha against window entry beta in every dimension.
// The caller holds the database's reader lock.
DominanceFlags dominance_flags(const CloudDatabase& db, const EncryptedQuery& eq,
                               std::uint64_t alpha, std::uint64_t beta,
                               QueryStats* stats = nullptr);

// Secure BNL over the whole database. Candidates are taken in insertion
// order; the result is sorted by record id. Holds the reader lock.
std::vector<ResultEntry> secure_skyline(const CloudDatabase& db,
                                        const EncryptedQuery& eq,
                                        QueryStats* stats = nullptr);

}  // namespace scale
