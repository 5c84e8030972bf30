#include "scale/ordered_index.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

namespace scale {
namespace {

struct IntNode {
  IntNode* left = nullptr;
  IntNode* right = nullptr;
  IntNode* parent = nullptr;
  std::int32_t aux = 0;
  int key = 0;
};

using Index = OrderedIndex<IntNode>;

int cmp(const IntNode& a, const IntNode& b) {
  return (a.key > b.key) - (a.key < b.key);
}

IntNode* find_key(const Index& idx, int k) {
  return idx.find([k](const IntNode& n) { return (n.key > k) - (n.key < k); });
}

std::vector<int> keys_of(const Index& idx) {
  std::vector<int> out;
  idx.for_each([&](const IntNode& n) { out.push_back(n.key); });
  return out;
}

class OrderedIndexTest : public ::testing::TestWithParam<IndexVariant> {};

TEST_P(OrderedIndexTest, InsertIntoEmptyBecomesRoot) {
  Index idx(GetParam());
  auto* n = new IntNode{.key = 5};
  idx.insert(n, cmp);
  EXPECT_EQ(idx.root(), n);
  EXPECT_EQ(idx.size(), 1u);
  EXPECT_TRUE(idx.audit());
  delete idx.erase(n);
  EXPECT_TRUE(idx.empty());
  EXPECT_EQ(idx.root(), nullptr);
  EXPECT_TRUE(idx.audit());
}

TEST_P(OrderedIndexTest, BuildSortedIsBalancedForEverySize) {
  for (int size = 0; size <= 130; ++size) {
    Index idx(GetParam());
    std::vector<IntNode*> nodes;
    for (int i = 0; i < size; ++i) nodes.push_back(new IntNode{.key = 3 * i});
    idx.build_sorted(nodes);
    std::string why;
    ASSERT_TRUE(idx.audit(&why)) << "size " << size << ": " << why;
    ASSERT_TRUE(idx.audit_order(cmp));
    ASSERT_EQ(idx.size(), static_cast<std::size_t>(size));
    if (GetParam() != IndexVariant::linked_list && size > 0) {
      EXPECT_LE(idx.height(),
                static_cast<int>(std::floor(std::log2(size))) + 1);
    }
    for (int i = 0; i < size; ++i) ASSERT_EQ(find_key(idx, 3 * i)->key, 3 * i);
    ASSERT_EQ(find_key(idx, 1), nullptr);
    // Mutations after a bulk build keep the invariants.
    idx.insert(new IntNode{.key = 1}, cmp);
    ASSERT_TRUE(idx.audit(&why)) << why;
    if (size > 0) {
      delete idx.erase(find_key(idx, 0));
      ASSERT_TRUE(idx.audit(&why)) << why;
    }
  }
}

TEST_P(OrderedIndexTest, FuzzTenThousandOperationsWithAudits) {
  std::mt19937 rng(static_cast<unsigned>(GetParam()) + 99);
  Index idx(GetParam());
  std::set<int> mirror;
  std::string why;
  for (int op = 0; op < 10'000; ++op) {
    int k = static_cast<int>(rng() % 1500);
    bool present = mirror.count(k) != 0;
    bool do_insert = mirror.empty() || (rng() % 100) < 55;
    if (do_insert && !present) {
      idx.insert(new IntNode{.key = k}, cmp);
      mirror.insert(k);
    } else if (!do_insert) {
      auto it = mirror.lower_bound(k);
      if (it == mirror.end()) it = mirror.begin();
      IntNode* n = find_key(idx, *it);
      ASSERT_NE(n, nullptr);
      delete idx.erase(n);
      mirror.erase(it);
    } else {
      ASSERT_NE(find_key(idx, k), nullptr);
    }
    ASSERT_TRUE(idx.audit(&why)) << "op " << op << ": " << why;
    ASSERT_TRUE(idx.audit_order(cmp)) << "op " << op;
    ASSERT_EQ(idx.size(), mirror.size());
  }
  EXPECT_EQ(keys_of(idx), std::vector<int>(mirror.begin(), mirror.end()));
}

TEST_P(OrderedIndexTest, HeightStaysLogarithmicUnderSortedInserts) {
  Index idx(GetParam());
  const int n = 4000;
  for (int i = 0; i < n; ++i) idx.insert(new IntNode{.key = i}, cmp);
  ASSERT_TRUE(idx.audit());
  double lg = std::log2(n + 1.0);
  switch (GetParam()) {
    case IndexVariant::linked_list:
      EXPECT_EQ(idx.height(), n);
      break;
    case IndexVariant::avl:
      EXPECT_LE(idx.height(), 1.45 * lg + 1);
      break;
    case IndexVariant::red_black:
      EXPECT_LE(idx.height(), 2 * lg);
      break;
  }
}

TEST_P(OrderedIndexTest, MoveTransfersOwnership) {
  Index a(GetParam());
  for (int i = 0; i < 10; ++i) a.insert(new IntNode{.key = i}, cmp);
  Index b(std::move(a));
  EXPECT_TRUE(a.empty());
  EXPECT_EQ(b.size(), 10u);
  Index c(GetParam());
  c.insert(new IntNode{.key = 100}, cmp);
  c = std::move(b);
  EXPECT_EQ(keys_of(c), (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST_P(OrderedIndexTest, DetectsCorruption) {
  Index idx(GetParam());
  std::vector<IntNode*> nodes;
  for (int i = 0; i < 7; ++i) nodes.push_back(new IntNode{.key = i});
  idx.build_sorted(nodes);
  IntNode* victim = nodes[3];
  IntNode* saved = victim->left;
  victim->left = nodes[0];  // bogus link
  if (GetParam() == IndexVariant::linked_list) {
    EXPECT_FALSE(idx.audit());
  } else {
    // Either the parent pointer or the size check catches it.
    EXPECT_FALSE(idx.audit() && idx.audit_order(cmp));
  }
  victim->left = saved;
  EXPECT_TRUE(idx.audit());
}

INSTANTIATE_TEST_SUITE_P(Variants, OrderedIndexTest,
                         ::testing::Values(IndexVariant::linked_list,
                                           IndexVariant::avl,
                                           IndexVariant::red_black),
                         [](const auto& info) {
                           return std::string(index_variant_name(info.param));
                         });

TEST(IndexVariantName, Names) {
  EXPECT_STREQ(index_variant_name(IndexVariant::linked_list), "list");
  EXPECT_STREQ(index_variant_name(IndexVariant::avl), "avl");
  EXPECT_STREQ(index_variant_name(IndexVariant::red_black), "rbtree");
}

}  // namespace
}  // namespace scale
