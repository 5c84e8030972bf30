#include "scale/oracle.hpp"

#include <algorithm>
#include <list>

#include "scale/error.hpp"

namespace scale {

DiffVector diff_vector(const std::vector<std::uint32_t>& p,
                       const std::vector<std::uint32_t>& q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::domain, "diff_vector: dimension mismatch");
  }
  DiffVector t(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    t[j] = p[j] > q[j] ? p[j] - q[j] : q[j] - p[j];
  }
  return t;
}

bool dominates(const DiffVector& t_a, const DiffVector& t_b) {
  if (t_a.size() != t_b.size()) {
    fail(ErrorCode::domain, "dominates: dimension mismatch");
  }
  bool strict = false;
  for (std::size_t j = 0; j < t_a.size(); ++j) {
    if (t_a[j] > t_b[j]) return false;
    if (t_a[j] < t_b[j]) strict = true;
  }
  return strict;
}

std::vector<std::uint64_t> dynamic_skyline_bnl(
    const std::vector<PlainRecord>& records,
    const std::vector<std::uint32_t>& q) {
  struct Entry {
    std::uint64_t id;
    DiffVector t;
  };
  std::list<Entry> window;
  for (const PlainRecord& p : records) {
    DiffVector t = diff_vector(p.attrs, q);
    bool dominated = false;
    for (auto it = window.begin(); it != window.end();) {
      if (dominates(it->t, t)) {
        dominated = true;
        break;
      }
      if (dominates(t, it->t)) {
        it = window.erase(it);
      } else {
        ++it;
      }
    }
    if (!dominated) window.push_back(Entry{p.record_id, std::move(t)});
  }
  std::vector<std::uint64_t> ids;
  for (const Entry& e : window) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::uint64_t> dynamic_skyline_bruteforce(
    const std::vector<PlainRecord>& records,
    const std::vector<std::uint32_t>& q) {
  std::vector<DiffVector> t;
  t.reserve(records.size());
  for (const PlainRecord& p : records) t.push_back(diff_vector(p.attrs, q));
  std::vector<std::uint64_t> ids;
  for (std::size_t a = 0; a < records.size(); ++a) {
    bool kept = true;
    for (std::size_t b = 0; b < records.size() && kept; ++b) {
      if (a != b && dominates(t[b], t[a])) kept = false;
    }
    if (kept) ids.push_back(records[a].record_id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace scale
