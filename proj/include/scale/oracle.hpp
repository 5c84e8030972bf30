#pragma once

// Plaintext reference skylines. Ground truth for every equivalence test.

#include <cstdint>
#include <vector>

namespace scale {

struct PlainRecord {
  std::uint64_t record_id = 0;
  std::vector<std::uint32_t> attrs;

  friend bool operator==(const PlainRecord&, const PlainRecord&) = default;
};

using DiffVector = std::vector<std::uint32_t>;

DiffVector diff_vector(const std::vector<std::uint32_t>& p,
                       const std::vector<std::uint32_t>& q);

// All t_a <= t_b with at least one strict. Throws ErrorCode::domain on
// dimension mismatch.
bool dominates(const DiffVector& t_a, const DiffVector& t_b);

// Window-based BNL over difference vectors. Returns ids sorted ascending.
std::vector<std::uint64_t> dynamic_skyline_bnl(
    const std::vector<PlainRecord>& records,
    const std::vector<std::uint32_t>& q);

// Keeps every record no other record dominates. Ids sorted ascending.
std::vector<std::uint64_t> dynamic_skyline_bruteforce(
    const std::vector<PlainRecord>& records,
    const std::vector<std::uint32_t>& q);

}  // namespace scale
