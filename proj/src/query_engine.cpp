#include "scale/query_engine.hpp"

#include <algorithm>
#include <string>

#include "scale/error.hpp"

namespace scale {

bool DominanceFlags::candidate_dominates() const {
  bool strict = false;
  for (std::int8_t f : flags) {
    if (f > 0) return false;
    strict |= f < 0;
  }
  return strict;
}

bool DominanceFlags::candidate_dominated() const {
  bool strict = false;
  for (std::int8_t f : flags) {
    if (f < 0) return false;
    strict |= f > 0;
  }
  return strict;
}

namespace {

int counted_compare(const ore::OreCiphertext& x, const ore::OreCiphertext& y,
                    std::uint64_t* counter) {
  if (counter != nullptr) ++*counter;
  return ore::compare(x, y);
}

// c_ab = compare(a, b) != 0, qa = compare(q, a), qb = compare(q, b).
// The interval [min, max] is closed: q on an endpoint goes through the
// 2q-versus-sum branch, which yields the right sign there.
int decide(int c_ab, int qa, int qb, const ore::OreCiphertext& sum,
           const ore::OreCiphertext* two_q, std::uint64_t* counter) {
  const int q_lo = c_ab < 0 ? qa : qb;  // q against min(a, b)
  const int q_hi = c_ab < 0 ? qb : qa;  // q against max(a, b)
  if (q_lo < 0 || q_hi > 0) {
    // Outside: the endpoint on q's side is the nearer one, so a is closer
    // exactly when q and b lie on opposite sides of a.
    return c_ab < 0 ? qa : -qb;
  }
  if (two_q == nullptr) {
    fail(ErrorCode::incomplete_query, "query lacks 2q for this pair's class");
  }
  // Inside: |a - q| - |b - q| = +-(2q - (a + b)).
  int c = counted_compare(*two_q, sum, counter);
  return c_ab < 0 ? c : -c;
}

struct QueryView {
  std::uint32_t d = 0;
  // [dim][ooc_id] -> 2q ciphertext, null where absent.
  std::vector<std::vector<const ore::OreCiphertext*>> two_q;
};

QueryView check_query(const CloudDatabase& db, const EncryptedQuery& eq) {
  const std::uint32_t d = db.d();
  if (eq.q_cts.size() != d || eq.dbl_cts.size() != d) {
    fail(ErrorCode::incomplete_query,
         "query has " + std::to_string(eq.q_cts.size()) +
             " dimensions, database has " + std::to_string(d));
  }
  QueryView v;
  v.d = d;
  v.two_q.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) {
    const ore::OreCiphertext& q = eq.q_cts[j];
    if (!(q.params() == db.params()) || !q.has_left()) {
      fail(ErrorCode::format, "query ciphertext has wrong parameters");
    }
    auto& slots = v.two_q[j];
    for (const DoubledQuery& dq : eq.dbl_cts[j]) {
      if (!(dq.ct.params() == db.params()) || !dq.ct.has_right()) {
        fail(ErrorCode::format, "2q ciphertext has wrong parameters");
      }
      if (dq.ooc_id >= slots.size()) slots.resize(dq.ooc_id + 1, nullptr);
      slots[dq.ooc_id] = &dq.ct;
    }
    for (std::uint32_t t : db.active(j)) {
      if (t >= slots.size() || slots[t] == nullptr) {
        fail(ErrorCode::incomplete_query,
             "query lacks 2q for class " + std::to_string(t) +
                 " of dimension " + std::to_string(j));
      }
    }
  }
  return v;
}

const SumNode& sum_node(const CloudDatabase& db, std::uint32_t dim,
                        std::uint64_t x, std::uint64_t y) {
  const SumNode* node = db.find_sum(dim, x, y);
  if (node == nullptr) {
    fail(ErrorCode::missing_sum, "no sum for pair (" + std::to_string(x) +
                                     ", " + std::to_string(y) + ")");
  }
  return *node;
}

const ore::OreCiphertext* two_q_for(const QueryView& v, std::uint32_t dim,
                                    std::uint32_t ooc_id) {
  const auto& slots = v.two_q[dim];
  return ooc_id < slots.size() ? slots[ooc_id] : nullptr;
}

// One record as seen by the engine: its column ciphertexts and the cached
// position of q against each of them.
struct Entry {
  std::uint64_t id;
  const EncryptedRecord* rec;
  std::vector<std::int8_t> q_vs;
};

// Fills flags until both signs have appeared; returns -1 when the
// candidate dominates, +1 when it is dominated, 0 otherwise.
int judge(const CloudDatabase& db, const QueryView& v, const Entry& alpha,
          const Entry& beta, QueryStats& st) {
  bool neg = false, pos = false;
  ++st.dominance_checks;
  for (std::uint32_t j = 0; j < v.d; ++j) {
    ++st.secure_compares;
    int c_ab = counted_compare(alpha.rec->column_cts[j],
                               beta.rec->column_cts[j], &st.ore_compares);
    int f = 0;
    if (c_ab != 0) {
      const SumNode& node = sum_node(db, j, alpha.id, beta.id);
      f = decide(c_ab, alpha.q_vs[j], beta.q_vs[j], node.sum_ct,
                 two_q_for(v, j, node.ooc_id), &st.ore_compares);
    }
    neg |= f < 0;
    pos |= f > 0;
    if (neg && pos) return 0;
  }
  if (neg) return -1;
  if (pos) return 1;
  return 0;
}

}  // namespace

int secure_compare(const ore::OreCiphertext& a, const ore::OreCiphertext& b,
                   const ore::OreCiphertext& q, const ore::OreCiphertext& sum,
                   const ore::OreCiphertext* two_q,
                   std::uint64_t* ore_compares) {
  int c_ab = counted_compare(a, b, ore_compares);
  if (c_ab == 0) return 0;
  int qa = counted_compare(q, a, ore_compares);
  int qb = counted_compare(q, b, ore_compares);
  return decide(c_ab, qa, qb, sum, two_q, ore_compares);
}

DominanceFlags dominance_flags(const CloudDatabase& db,
                               const EncryptedQuery& eq, std::uint64_t alpha,
                               std::uint64_t beta, QueryStats* stats) {
  QueryView v = check_query(db, eq);
  QueryStats local;
  QueryStats& st = stats != nullptr ? *stats : local;
  const EncryptedRecord& ra = db.record(alpha);
  const EncryptedRecord& rb = db.record(beta);
  DominanceFlags out;
  out.flags.resize(v.d);
  for (std::uint32_t j = 0; j < v.d; ++j) {
    ++st.secure_compares;
    const ore::OreCiphertext* two_q = nullptr;
    const ore::OreCiphertext* sum = nullptr;
    if (alpha != beta) {
      const SumNode& node = sum_node(db, j, alpha, beta);
      sum = &node.sum_ct;
      two_q = two_q_for(v, j, node.ooc_id);
    }
    int c_ab = counted_compare(ra.column_cts[j], rb.column_cts[j],
                               &st.ore_compares);
    if (c_ab == 0) continue;
    int qa = counted_compare(eq.q_cts[j], ra.column_cts[j], &st.ore_compares);
    int qb = counted_compare(eq.q_cts[j], rb.column_cts[j], &st.ore_compares);
    out.flags[j] = static_cast<std::int8_t>(
        decide(c_ab, qa, qb, *sum, two_q, &st.ore_compares));
  }
  return out;
}

std::vector<ResultEntry> secure_skyline(const CloudDatabase& db,
                                        const EncryptedQuery& eq,
                                        QueryStats* stats) {
  auto lock = db.read_lock();
  QueryStats local;
  QueryStats& st = stats != nullptr ? *stats : local;
  if (db.empty()) return {};
  const QueryView v = check_query(db, eq);

  // q's position against every column ciphertext is reused by every pair
  // the record takes part in.
  std::vector<Entry> entries;
  entries.reserve(db.n());
  for (std::uint64_t id : db.order()) {
    Entry e{id, &db.record(id), std::vector<std::int8_t>(v.d)};
    for (std::uint32_t j = 0; j < v.d; ++j) {
      e.q_vs[j] = static_cast<std::int8_t>(counted_compare(
          eq.q_cts[j], e.rec->column_cts[j], &st.ore_compares));
    }
    entries.push_back(std::move(e));
  }

  std::vector<const Entry*> window;
  for (const Entry& cand : entries) {
    bool dominated = false;
    std::size_t keep = 0;
    for (std::size_t w = 0; w < window.size(); ++w) {
      const Entry* other = window[w];
      int verdict = dominated ? 0 : judge(db, v, cand, *other, st);
      if (verdict > 0) dominated = true;
      if (verdict >= 0) window[keep++] = other;
    }
    window.resize(keep);
    if (!dominated) window.push_back(&cand);
    st.window_peak = std::max(st.window_peak, window.size());
  }

  std::vector<ResultEntry> out;
  out.reserve(window.size());
  for (const Entry* e : window) out.push_back({e->id, e->rec->payload_ct});
  std::sort(out.begin(), out.end(),
            [](const ResultEntry& x, const ResultEntry& y) {
              return x.record_id < y.record_id;
            });
  return out;
}

}  // namespace scale
