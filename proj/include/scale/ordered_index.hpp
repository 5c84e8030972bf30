#pragma once

// Intrusive ordered index with three interchangeable layouts: a sorted
// doubly linked list, an AVL tree and a red-black tree.
//
// Node must expose `Node* left, *right, *parent` and `std::int32_t aux`.
// aux holds the AVL height or the red-black colour. The index owns its nodes.
// Node addresses are stable across every mutation, so external maps may hold
// raw pointers.
//
// Comparators are three-way: cmp(a, b) < 0 when a sorts before b.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace scale {

enum class IndexVariant : std::uint8_t {
  linked_list = 0,
  avl = 1,
  red_black = 2,
};

const char* index_variant_name(IndexVariant v);

template <class Node>
class OrderedIndex {
 public:
  explicit OrderedIndex(IndexVariant variant) : variant_(variant) {}
  ~OrderedIndex() { clear(); }

  OrderedIndex(OrderedIndex&& o) noexcept
      : variant_(o.variant_), root_(o.root_), size_(o.size_) {
    o.root_ = nullptr;
    o.size_ = 0;
  }
  OrderedIndex& operator=(OrderedIndex&& o) noexcept {
    if (this != &o) {
      clear();
      variant_ = o.variant_;
      root_ = o.root_;
      size_ = o.size_;
      o.root_ = nullptr;
      o.size_ = 0;
    }
    return *this;
  }
  OrderedIndex(const OrderedIndex&) = delete;
  OrderedIndex& operator=(const OrderedIndex&) = delete;

  IndexVariant variant() const { return variant_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  // Tree root, or list head.
  const Node* root() const { return root_; }

  // Replaces the contents with already sorted nodes; trees come out
  // height-balanced.
  void build_sorted(const std::vector<Node*>& sorted) {
    clear();
    size_ = sorted.size();
    if (sorted.empty()) return;
    if (variant_ == IndexVariant::linked_list) {
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        Node* n = sorted[i];
        n->parent = nullptr;
        n->left = i > 0 ? sorted[i - 1] : nullptr;
        n->right = i + 1 < sorted.size() ? sorted[i + 1] : nullptr;
        n->aux = 0;
      }
      root_ = sorted.front();
      return;
    }
    // Midpoint recursion fills every level but the last.
    int full_depth = 0;
    while ((std::size_t{2} << full_depth) - 1 <= sorted.size()) ++full_depth;
    const bool perfect = ((sorted.size() + 1) & sorted.size()) == 0;
    root_ = build_range(sorted, 0, sorted.size(), nullptr, 0, full_depth,
                        perfect);
  }

  template <class Cmp>
  void insert(Node* n, Cmp&& cmp) {
    n->left = n->right = n->parent = nullptr;
    ++size_;
    if (variant_ == IndexVariant::linked_list) {
      list_insert(n, cmp);
      return;
    }
    if (root_ == nullptr) {
      root_ = n;
      n->aux = variant_ == IndexVariant::avl ? 1 : kBlack;
      return;
    }
    Node* cur = root_;
    for (;;) {
      Node*& next = cmp(*n, *cur) < 0 ? cur->left : cur->right;
      if (next == nullptr) {
        next = n;
        n->parent = cur;
        break;
      }
      cur = next;
    }
    if (variant_ == IndexVariant::avl) {
      n->aux = 1;
      avl_retrace(cur);
    } else {
      n->aux = kRed;
      rb_insert_fixup(n);
    }
  }

  // key(node) returns the sign of node - key.
  template <class KeyCmp>
  Node* find(KeyCmp&& key) const {
    Node* cur = root_;
    if (variant_ == IndexVariant::linked_list) {
      for (; cur != nullptr; cur = cur->right) {
        int c = key(*cur);
        if (c == 0) return cur;
        if (c > 0) return nullptr;
      }
      return nullptr;
    }
    while (cur != nullptr) {
      int c = key(*cur);
      if (c == 0) return cur;
      cur = c > 0 ? cur->left : cur->right;
    }
    return nullptr;
  }

  // Unlinks n and hands ownership back to the caller.
  Node* erase(Node* n) {
    --size_;
    switch (variant_) {
      case IndexVariant::linked_list: list_erase(n); break;
      case IndexVariant::avl: avl_erase(n); break;
      case IndexVariant::red_black: rb_erase(n); break;
    }
    n->left = n->right = n->parent = nullptr;
    return n;
  }

  template <class F>
  void for_each(F&& f) const {
    if (variant_ == IndexVariant::linked_list) {
      for (const Node* n = root_; n != nullptr; n = n->right) f(*n);
      return;
    }
    const Node* n = leftmost(root_);
    while (n != nullptr) {
      f(*n);
      n = successor(n);
    }
  }

  std::vector<const Node*> nodes() const {
    std::vector<const Node*> out;
    out.reserve(size_);
    for_each([&](const Node& n) { out.push_back(&n); });
    return out;
  }

  int height() const {
    if (variant_ == IndexVariant::linked_list) return static_cast<int>(size_);
    return depth(root_);
  }

  // Structural audit of links and the variant's balance rules. On failure
  // returns false and describes the first problem in *why.
  bool audit(std::string* why = nullptr) const {
    auto bad = [&](const std::string& msg) {
      if (why != nullptr) *why = msg;
      return false;
    };
    if (variant_ == IndexVariant::linked_list) {
      std::size_t count = 0;
      const Node* prev = nullptr;
      for (const Node* n = root_; n != nullptr; n = n->right) {
        if (n->left != prev) return bad("list back link broken");
        prev = n;
        if (++count > size_) return bad("list longer than size");
      }
      if (count != size_) return bad("list size mismatch");
      return true;
    }
    if (root_ != nullptr && root_->parent != nullptr) {
      return bad("root has a parent");
    }
    std::size_t count = 0;
    int black_height = 0;
    if (!audit_subtree(root_, count, black_height, bad)) return false;
    if (count != size_) return bad("tree size mismatch");
    if (variant_ == IndexVariant::red_black && root_ != nullptr &&
        root_->aux != kBlack) {
      return bad("red root");
    }
    return true;
  }

  // True when consecutive nodes are strictly increasing under cmp.
  template <class Cmp>
  bool audit_order(Cmp&& cmp) const {
    const Node* prev = nullptr;
    bool ok = true;
    for_each([&](const Node& n) {
      if (prev != nullptr && cmp(*prev, n) >= 0) ok = false;
      prev = &n;
    });
    return ok;
  }

  void clear() {
    if (variant_ == IndexVariant::linked_list) {
      Node* n = root_;
      while (n != nullptr) {
        Node* next = n->right;
        delete n;
        n = next;
      }
    } else {
      destroy(root_);
    }
    root_ = nullptr;
    size_ = 0;
  }

  static constexpr std::int32_t kBlack = 0;
  static constexpr std::int32_t kRed = 1;

 private:
  static int h(const Node* n) { return n == nullptr ? 0 : n->aux; }
  static bool is_red(const Node* n) { return n != nullptr && n->aux == kRed; }

  static int depth(const Node* n) {
    if (n == nullptr) return 0;
    int l = depth(n->left), r = depth(n->right);
    return 1 + (l > r ? l : r);
  }

  static void destroy(Node* n) {
    // Iterative post-order via parent links; avoids deep recursion.
    while (n != nullptr) {
      if (n->left != nullptr) {
        n = n->left;
      } else if (n->right != nullptr) {
        n = n->right;
      } else {
        Node* p = n->parent;
        if (p != nullptr) {
          (p->left == n ? p->left : p->right) = nullptr;
        }
        delete n;
        n = p;
      }
    }
  }

  static const Node* leftmost(const Node* n) {
    if (n == nullptr) return nullptr;
    while (n->left != nullptr) n = n->left;
    return n;
  }

  static const Node* successor(const Node* n) {
    if (n->right != nullptr) return leftmost(n->right);
    const Node* p = n->parent;
    while (p != nullptr && n == p->right) {
      n = p;
      p = p->parent;
    }
    return p;
  }

  Node* build_range(const std::vector<Node*>& s, std::size_t lo,
                    std::size_t hi, Node* parent, int d, int full_depth,
                    bool perfect) {
    if (lo >= hi) return nullptr;
    std::size_t mid = lo + (hi - lo - 1) / 2;
    Node* n = s[mid];
    n->parent = parent;
    n->left = build_range(s, lo, mid, n, d + 1, full_depth, perfect);
    n->right = build_range(s, mid + 1, hi, n, d + 1, full_depth, perfect);
    if (variant_ == IndexVariant::avl) {
      int l = h(n->left), r = h(n->right);
      n->aux = 1 + (l > r ? l : r);
    } else {
      // Nodes on the incomplete last level are red; all else black.
      n->aux = (!perfect && d == full_depth) ? kRed : kBlack;
    }
    return n;
  }

  void replace_child(Node* parent, Node* old_child, Node* new_child) {
    if (parent == nullptr) {
      root_ = new_child;
    } else if (parent->left == old_child) {
      parent->left = new_child;
    } else {
      parent->right = new_child;
    }
  }

  Node* rotate_left(Node* x) {
    Node* y = x->right;
    x->right = y->left;
    if (y->left != nullptr) y->left->parent = x;
    y->parent = x->parent;
    replace_child(x->parent, x, y);
    y->left = x;
    x->parent = y;
    return y;
  }

  Node* rotate_right(Node* x) {
    Node* y = x->left;
    x->left = y->right;
    if (y->right != nullptr) y->right->parent = x;
    y->parent = x->parent;
    replace_child(x->parent, x, y);
    y->right = x;
    x->parent = y;
    return y;
  }

  // Moves y (the in-order successor of z, with no left child) into z's
  // place and z into y's old place, exchanging aux as well.
  void swap_with_successor(Node* z, Node* y) {
    Node* zp = z->parent;
    Node* zl = z->left;
    Node* zr = z->right;
    Node* yp = y->parent;
    Node* yr = y->right;
    y->parent = zp;
    replace_child(zp, z, y);
    y->left = zl;
    if (zl != nullptr) zl->parent = y;
    if (yp == z) {
      y->right = z;
      z->parent = y;
    } else {
      y->right = zr;
      zr->parent = y;
      yp->left = z;
      z->parent = yp;
    }
    z->left = nullptr;
    z->right = yr;
    if (yr != nullptr) yr->parent = z;
    std::swap(z->aux, y->aux);
  }

  template <class Cmp>
  void list_insert(Node* n, Cmp& cmp) {
    Node* prev = nullptr;
    Node* cur = root_;
    while (cur != nullptr && cmp(*cur, *n) < 0) {
      prev = cur;
      cur = cur->right;
    }
    n->left = prev;
    n->right = cur;
    n->aux = 0;
    if (prev != nullptr) {
      prev->right = n;
    } else {
      root_ = n;
    }
    if (cur != nullptr) cur->left = n;
  }

  void list_erase(Node* n) {
    if (n->left != nullptr) {
      n->left->right = n->right;
    } else {
      root_ = n->right;
    }
    if (n->right != nullptr) n->right->left = n->left;
  }

  static void update_height(Node* n) {
    int l = h(n->left), r = h(n->right);
    n->aux = 1 + (l > r ? l : r);
  }

  Node* avl_rebalance(Node* n) {
    int bf = h(n->left) - h(n->right);
    if (bf > 1) {
      if (h(n->left->left) < h(n->left->right)) {
        Node* l = rotate_left(n->left);
        update_height(l->left);
        update_height(l);
      }
      n = rotate_right(n);
      update_height(n->right);
      update_height(n);
    } else if (bf < -1) {
      if (h(n->right->right) < h(n->right->left)) {
        Node* r = rotate_right(n->right);
        update_height(r->right);
        update_height(r);
      }
      n = rotate_left(n);
      update_height(n->left);
      update_height(n);
    }
    return n;
  }

  void avl_retrace(Node* n) {
    while (n != nullptr) {
      update_height(n);
      n = avl_rebalance(n);
      n = n->parent;
    }
  }

  void avl_erase(Node* z) {
    if (z->left != nullptr && z->right != nullptr) {
      Node* y = z->right;
      while (y->left != nullptr) y = y->left;
      swap_with_successor(z, y);
    }
    Node* child = z->left != nullptr ? z->left : z->right;
    Node* parent = z->parent;
    replace_child(parent, z, child);
    if (child != nullptr) child->parent = parent;
    avl_retrace(parent);
  }

  void rb_insert_fixup(Node* n) {
    while (is_red(n->parent)) {
      Node* p = n->parent;
      Node* g = p->parent;
      if (p == g->left) {
        Node* u = g->right;
        if (is_red(u)) {
          p->aux = kBlack;
          u->aux = kBlack;
          g->aux = kRed;
          n = g;
        } else {
          if (n == p->right) {
            n = p;
            rotate_left(n);
            p = n->parent;
          }
          p->aux = kBlack;
          g->aux = kRed;
          rotate_right(g);
        }
      } else {
        Node* u = g->left;
        if (is_red(u)) {
          p->aux = kBlack;
          u->aux = kBlack;
          g->aux = kRed;
          n = g;
        } else {
          if (n == p->left) {
            n = p;
            rotate_right(n);
            p = n->parent;
          }
          p->aux = kBlack;
          g->aux = kRed;
          rotate_left(g);
        }
      }
    }
    root_->aux = kBlack;
  }

  void rb_erase(Node* z) {
    if (z->left != nullptr && z->right != nullptr) {
      Node* y = z->right;
      while (y->left != nullptr) y = y->left;
      swap_with_successor(z, y);
    }
    Node* x = z->left != nullptr ? z->left : z->right;
    Node* xp = z->parent;
    replace_child(xp, z, x);
    if (x != nullptr) x->parent = xp;
    if (z->aux == kRed) return;
    if (is_red(x)) {
      x->aux = kBlack;
      return;
    }
    rb_erase_fixup(x, xp);
  }

  void rb_erase_fixup(Node* x, Node* xp) {
    while (x != root_ && !is_red(x)) {
      if (x == xp->left) {
        Node* w = xp->right;
        if (is_red(w)) {
          w->aux = kBlack;
          xp->aux = kRed;
          rotate_left(xp);
          w = xp->right;
        }
        if (!is_red(w->left) && !is_red(w->right)) {
          w->aux = kRed;
          x = xp;
          xp = x->parent;
        } else {
          if (!is_red(w->right)) {
            w->left->aux = kBlack;
            w->aux = kRed;
            rotate_right(w);
            w = xp->right;
          }
          w->aux = xp->aux;
          xp->aux = kBlack;
          w->right->aux = kBlack;
          rotate_left(xp);
          x = root_;
          break;
        }
      } else {
        Node* w = xp->left;
        if (is_red(w)) {
          w->aux = kBlack;
          xp->aux = kRed;
          rotate_right(xp);
          w = xp->left;
        }
        if (!is_red(w->left) && !is_red(w->right)) {
          w->aux = kRed;
          x = xp;
          xp = x->parent;
        } else {
          if (!is_red(w->left)) {
            w->right->aux = kBlack;
            w->aux = kRed;
            rotate_left(w);
            w = xp->left;
          }
          w->aux = xp->aux;
          xp->aux = kBlack;
          w->left->aux = kBlack;
          rotate_right(xp);
          x = root_;
          break;
        }
      }
    }
    if (x != nullptr) x->aux = kBlack;
  }

  template <class Bad>
  bool audit_subtree(const Node* n, std::size_t& count, int& black_height,
                     Bad& bad) const {
    if (n == nullptr) {
      black_height = 1;
      return true;
    }
    ++count;
    if (count > size_) return bad("tree larger than size");
    if (n->left != nullptr && n->left->parent != n) {
      return bad("left child parent link broken");
    }
    if (n->right != nullptr && n->right->parent != n) {
      return bad("right child parent link broken");
    }
    int lb = 0, rb = 0;
    if (!audit_subtree(n->left, count, lb, bad)) return false;
    if (!audit_subtree(n->right, count, rb, bad)) return false;
    if (variant_ == IndexVariant::avl) {
      int lh = h(n->left), rh = h(n->right);
      if (n->aux != 1 + (lh > rh ? lh : rh)) return bad("stale AVL height");
      if (lh - rh > 1 || rh - lh > 1) return bad("AVL balance factor out of range");
    } else {
      if (n->aux != kRed && n->aux != kBlack) return bad("invalid colour");
      if (n->aux == kRed && (is_red(n->left) || is_red(n->right))) {
        return bad("red node with red child");
      }
      if (lb != rb) return bad("unequal black height");
      black_height = lb + (n->aux == kBlack ? 1 : 0);
    }
    return true;
  }

  IndexVariant variant_;
  Node* root_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace scale
