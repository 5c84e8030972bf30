#pragma once

// Independent reference computations shared by the test binaries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace scale::testing {

// Ceiling of (2n-3)/4 written out with an explicit remainder test.
inline std::uint64_t ceil_formula(std::uint64_t n) {
  std::uint64_t num = 2 * n - 3;
  return num / 4 + (num % 4 != 0 ? 1 : 0);
}

// Minimum chain cover of the pairs {(i, j) : 1 <= i < j <= n} under the
// component-wise order, via Dilworth: |P| minus a maximum matching in the
// bipartite graph of strict comparabilities.
inline std::size_t min_chain_cover(int n) {
  std::vector<std::pair<int, int>> pts;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) pts.emplace_back(i, j);
  }
  const std::size_t m = pts.size();
  std::vector<std::vector<int>> adj(m);
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      if (u != v && pts[u].first <= pts[v].first &&
          pts[u].second <= pts[v].second) {
        adj[u].push_back(static_cast<int>(v));
      }
    }
  }
  std::vector<int> match_right(m, -1);
  std::size_t matched = 0;
  for (std::size_t u = 0; u < m; ++u) {
    std::vector<char> seen(m, 0);
    std::function<bool(int)> augment = [&](int x) {
      for (int y : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        if (match_right[y] < 0 || augment(match_right[y])) {
          match_right[y] = x;
          return true;
        }
      }
      return false;
    };
    if (augment(static_cast<int>(u))) ++matched;
  }
  return m - matched;
}

}  // namespace scale::testing
