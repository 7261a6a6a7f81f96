#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chronoarray/arena.hpp"
#include "chronoarray/layout.hpp"

namespace chronoarray {

// Node records occupy 12 consecutive words:
// [flags, x_lo, height, t_lo, t_hi, parent, left, right, upper,
//  point_version, point_label, base_value].
// A node covers columns [x_lo, x_lo + 2^height) and rows [t_lo, t_hi];
// t_hi == kOpenTop marks a still-open rectangle. Absent pointers and an
// absent point are kNullAddr. base_value kNullAddr encodes "cell had never
// been written when these rows began".
inline constexpr std::uint64_t kNodeWords = 12;

inline constexpr std::uint64_t kFlagsOff = 0;
inline constexpr std::uint64_t kXLoOff = 1;
inline constexpr std::uint64_t kHeightOff = 2;
inline constexpr std::uint64_t kTLoOff = 3;
inline constexpr std::uint64_t kTHiOff = 4;
inline constexpr std::uint64_t kParentOff = 5;
inline constexpr std::uint64_t kLeftOff = 6;
inline constexpr std::uint64_t kRightOff = 7;
inline constexpr std::uint64_t kUpperOff = 8;
inline constexpr std::uint64_t kPointVersionOff = 9;
inline constexpr std::uint64_t kPointLabelOff = 10;
inline constexpr std::uint64_t kBaseValueOff = 11;

inline constexpr Word kLeafFlag = 1;
inline constexpr Word kFullFlag = 2;

// A tree living in the reserved recursive layout of some region. `base` is
// the address of slot 0; slot k starts at base + k*kNodeWords. `live_slots`,
// when present, mirrors which slots hold nodes (allocator metadata, no arena
// traffic); the compression sweep and the pointer-fixup walk rely on it.
struct TreeStorage {
  Arena* arena = nullptr;
  Addr base = 0;
  LayoutParams layout;
  std::vector<std::uint8_t>* live_slots = nullptr;

  Addr slot_addr(std::uint64_t rank) const { return base + rank * kNodeWords; }
  std::uint64_t slot_rank(Addr a) const { return (a - base) / kNodeWords; }
  std::uint64_t columns() const {
    return std::uint64_t{1} << (layout.levels - 1);
  }
  void mark_live(std::uint64_t rank) const {
    if (live_slots) (*live_slots)[rank] = 1;
  }
};

// View of the per-cell array region: two words per column, value then the
// address of the leaf holding the column's most recent point.
struct CArrayView {
  Addr base = 0;
  Addr value_addr(std::uint64_t column) const { return base + 2 * column; }
  Addr leaf_addr(std::uint64_t column) const { return base + 2 * column + 1; }
};

// Version directory: one root address per closed-or-current tree, stored
// consecutively. Row block j (versions [j*rows+1, (j+1)*rows]) belongs to
// entry j.
struct DirectoryView {
  Arena* arena = nullptr;
  Addr entries_base = 0;
  std::uint64_t tree_count = 0;
  std::uint64_t rows_per_tree = 0;

  Addr root_for_version(std::uint64_t v, OpClass cls) const {
    std::uint64_t idx = (v - 1) / rows_per_tree;
    if (idx >= tree_count) {
      throw std::out_of_range("version outside directory rows");
    }
    return arena->load(entries_base + idx, cls);
  }
};

inline TreePath column_path(std::uint64_t column, std::uint32_t levels) {
  TreePath p(levels - 1);
  for (std::uint32_t k = 0; k + 1 < levels; ++k) {
    p[k] = static_cast<std::uint8_t>((column >> (levels - 2 - k)) & 1);
  }
  return p;
}

inline std::uint64_t column_of_path(const TreePath& path) {
  std::uint64_t c = 0;
  for (auto s : path) c = (c << 1) | s;
  return c;
}

// Address of the column's leaf slot in the initial (binary) tree.
inline Addr initial_leaf_addr(const TreeStorage& t, std::uint64_t column) {
  return t.slot_addr(veb_rank(column_path(column, t.layout.levels), t.layout));
}

namespace detail {

inline void write_node(const TreeStorage& t, Addr addr, Word flags, Word x_lo,
                       Word height, Word t_lo, Word t_hi, Word parent,
                       Word left, Word right, Word upper, Word point_version,
                       Word point_label, Word base_value, OpClass cls) {
  Arena& a = *t.arena;
  a.store(addr + kFlagsOff, flags, cls);
  a.store(addr + kXLoOff, x_lo, cls);
  a.store(addr + kHeightOff, height, cls);
  a.store(addr + kTLoOff, t_lo, cls);
  a.store(addr + kTHiOff, t_hi, cls);
  a.store(addr + kParentOff, parent, cls);
  a.store(addr + kLeftOff, left, cls);
  a.store(addr + kRightOff, right, cls);
  a.store(addr + kUpperOff, upper, cls);
  a.store(addr + kPointVersionOff, point_version, cls);
  a.store(addr + kPointLabelOff, point_label, cls);
  a.store(addr + kBaseValueOff, base_value, cls);
}

// Builds the complete binary tree whose root sits at `path`, covering
// columns [x_lo, x_lo + 2^height). Leaves take base values from the source.
inline Addr build_binary_subtree(const TreeStorage& t, TreePath& path,
                                 Addr parent, std::uint64_t x_lo,
                                 std::uint32_t height, std::uint64_t t_lo,
                                 const std::function<Word(std::uint64_t)>& base,
                                 OpClass cls) {
  std::uint64_t rank = veb_rank(path, t.layout);
  Addr addr = t.slot_addr(rank);
  t.mark_live(rank);
  if (height == 0) {
    write_node(t, addr, kLeafFlag, x_lo, 0, t_lo, kOpenTop, parent, kNullAddr,
               kNullAddr, kNullAddr, kNullAddr, 0, base(x_lo), cls);
    return addr;
  }
  std::uint64_t half = std::uint64_t{1} << (height - 1);
  path.push_back(0);
  Addr left = build_binary_subtree(t, path, addr, x_lo, height - 1, t_lo,
                                   base, cls);
  path.back() = 1;
  Addr right = build_binary_subtree(t, path, addr, x_lo + half, height - 1,
                                    t_lo, base, cls);
  path.pop_back();
  write_node(t, addr, 0, x_lo, height, t_lo, kOpenTop, parent, left, right,
             kNullAddr, kNullAddr, 0, 0, cls);
  return addr;
}

}  // namespace detail

// Lays out a fresh tree over all columns: a complete binary tree of
// layout.levels levels with every rectangle open from row `t_lo` up. Returns
// the root address (slot 0 of the region).
inline Addr init_complete_tree(const TreeStorage& t, std::uint64_t t_lo,
                               const std::function<Word(std::uint64_t)>& base,
                               OpClass cls) {
  if (t.live_slots) {
    t.live_slots->assign(ternary_slot_count(t.layout.levels), 0);
  }
  TreePath path;
  return detail::build_binary_subtree(t, path, kNullAddr, 0,
                                      t.layout.levels - 1, t_lo, base, cls);
}

struct LocateStats {
  std::uint64_t up_steps = 0;
  std::uint64_t down_steps = 0;
  bool directory_jump = false;
};

// Finds the leaf whose rectangle contains (column, v), starting anywhere in
// the forest: climbs from `start` to the first enclosing rectangle (or a
// root, then one directory jump), then descends. Children of a node tile its
// rectangle, so the descent is total.
inline Addr locate_leaf(Arena& arena, Addr start, const DirectoryView* dir,
                        std::uint64_t column, std::uint64_t v, OpClass cls,
                        LocateStats* stats = nullptr) {
  Addr cur = start;
  std::uint64_t x_lo = 0;
  std::uint32_t height = 0;
  // Climb until the current rectangle contains (column, v).
  for (;;) {
    Word t_hi = arena.load(cur + kTHiOff, cls);
    if (v <= t_hi) {  // kOpenTop compares as +infinity
      Word t_lo = arena.load(cur + kTLoOff, cls);
      if (v >= t_lo) {
        x_lo = arena.load(cur + kXLoOff, cls);
        height = static_cast<std::uint32_t>(arena.load(cur + kHeightOff, cls));
        std::uint64_t width = std::uint64_t{1} << height;
        if (column >= x_lo && column < x_lo + width) break;
      }
    }
    Word parent = arena.load(cur + kParentOff, cls);
    if (parent == kNullAddr) {
      if (dir == nullptr) {
        throw std::out_of_range("locate_leaf: point outside this tree");
      }
      cur = dir->root_for_version(v, cls);
      if (stats) stats->directory_jump = true;
      x_lo = arena.load(cur + kXLoOff, cls);
      height = static_cast<std::uint32_t>(arena.load(cur + kHeightOff, cls));
      Word t_lo = arena.load(cur + kTLoOff, cls);
      Word t_hi2 = arena.load(cur + kTHiOff, cls);
      std::uint64_t width = std::uint64_t{1} << height;
      if (column < x_lo || column >= x_lo + width || v < t_lo || v > t_hi2) {
        throw std::out_of_range("locate_leaf: directory tree misses point");
      }
      break;
    }
    cur = parent;
    if (stats) ++stats->up_steps;
  }
  // Descend. Side children inherit the parent's lower row bound, so only the
  // upper boundary decides between a side child and the upper child.
  while (height > 0) {
    std::uint64_t half = std::uint64_t{1} << (height - 1);
    bool go_right = column >= x_lo + half;
    Addr side = arena.load(cur + (go_right ? kRightOff : kLeftOff), cls);
    Word side_t_hi = arena.load(side + kTHiOff, cls);
    if (v <= side_t_hi) {
      cur = side;
    } else {
      cur = arena.load(cur + kUpperOff, cls);
      if (cur == kNullAddr) {
        throw std::logic_error("locate_leaf: children do not tile rectangle");
      }
    }
    if (go_right) x_lo += half;
    --height;
    if (stats) ++stats->down_steps;
  }
  return cur;
}

// Answer stored in `leaf` for row v: the point's label if the leaf has a
// point at a row <= v, otherwise the value the column carried when the
// leaf's rows began. The caller guarantees (leaf.column, v) is inside the
// leaf's rectangle.
inline Word leaf_answer(Arena& arena, Addr leaf, std::uint64_t v, OpClass cls) {
  Word point_version = arena.load(leaf + kPointVersionOff, cls);
  if (point_version != kNullAddr && point_version <= v) {
    return arena.load(leaf + kPointLabelOff, cls);
  }
  return arena.load(leaf + kBaseValueOff, cls);
}

namespace detail {

inline void close_rec(Arena& arena, Addr node, std::uint64_t V, OpClass cls) {
  arena.store(node + kTHiOff, V, cls);
  Word flags = arena.load(node + kFlagsOff, cls);
  if (flags & kLeafFlag) return;
  for (std::uint64_t off : {kLeftOff, kRightOff, kUpperOff}) {
    Word child = arena.load(node + off, cls);
    if (child == kNullAddr) continue;
    Word t_hi = arena.load(child + kTHiOff, cls);
    if (t_hi == kOpenTop) close_rec(arena, child, V, cls);
  }
}

}  // namespace detail

// Closes every open rectangle in the subtree of `node` at row V. Only open
// rectangles are visited (closed subtrees were closed wholesale earlier and
// never contain open descendants).
inline void close_open_rects(Arena& arena, Addr node, std::uint64_t V,
                             OpClass cls) {
  Word t_hi = arena.load(node + kTHiOff, cls);
  if (t_hi != kOpenTop) {
    throw std::logic_error("close_open_rects: rectangle already closed");
  }
  detail::close_rec(arena, node, V, cls);
}

namespace detail {

inline void unmark_subtree(const TreeStorage& t, Addr node) {
  (*t.live_slots)[t.slot_rank(node)] = 0;
  if (t.arena->peek(node + kFlagsOff) & kLeafFlag) return;
  for (std::uint64_t off : {kLeftOff, kRightOff, kUpperOff}) {
    Word child = t.arena->peek(node + off);
    if (child != kNullAddr) unmark_subtree(t, child);
  }
}

}  // namespace detail

// Detaches subtrees whose rows all lie beyond V. At most one exists: the
// third child hung by a write at the tree's final row starts at V+1 and can
// never receive a point once the tree closes at V. Its slots are unmarked so
// compression drops them; the node's remaining children still tile it, since
// the detached child sat above a sibling closed exactly at V.
inline void prune_rows_above(const TreeStorage& t, Addr node, std::uint64_t V,
                             OpClass cls) {
  Arena& arena = *t.arena;
  Word flags = arena.load(node + kFlagsOff, cls);
  if (flags & kLeafFlag) return;
  Word upper = arena.load(node + kUpperOff, cls);
  if (upper != kNullAddr) {
    Word upper_t_lo = arena.load(upper + kTLoOff, cls);
    if (upper_t_lo > V) {
      arena.store(node + kUpperOff, kNullAddr, cls);
      if (t.live_slots) detail::unmark_subtree(t, upper);
      upper = kNullAddr;
    }
  }
  prune_rows_above(t, arena.load(node + kLeftOff, cls), V, cls);
  prune_rows_above(t, arena.load(node + kRightOff, cls), V, cls);
  if (upper != kNullAddr) prune_rows_above(t, upper, V, cls);
}

// Hangs a fresh open subtree above `full_child`: a complete binary tree of
// the same height over the same columns, rows starting at V+1, leaf base
// values copied from the per-cell array (the state as of row V). Returns the
// new subtree's root, installed as `parent`'s third child.
inline Addr add_third_child(const TreeStorage& t, Addr parent, Addr full_child,
                            std::uint64_t V, const CArrayView& cells,
                            OpClass cls) {
  Arena& arena = *t.arena;
  Word existing = arena.load(parent + kUpperOff, cls);
  if (existing != kNullAddr) {
    throw std::logic_error("add_third_child: parent already has three children");
  }
  Word x_lo = arena.load(full_child + kXLoOff, cls);
  std::uint32_t height =
      static_cast<std::uint32_t>(arena.load(full_child + kHeightOff, cls));
  TreePath path = veb_inverse(t.slot_rank(parent), t.layout);
  path.push_back(2);
  auto base = [&](std::uint64_t column) {
    return arena.load(cells.value_addr(column), cls);
  };
  Addr root = detail::build_binary_subtree(t, path, parent, x_lo, height,
                                           V + 1, base, cls);
  arena.store(parent + kUpperOff, root, cls);
  return root;
}

// Write-time reconfiguration, run after a point lands in `leaf`: the leaf's
// rectangle fills; fullness propagates while the parent already has three
// children; at the first parent with two children the full subtree is closed
// and replaced upward by a fresh third child. A full root closes its whole
// tree; returns true in that case (the tree accepts no further points).
inline bool mark_full_and_reconfigure(const TreeStorage& t, Addr leaf,
                                      std::uint64_t V, const CArrayView& cells,
                                      OpClass cls,
                                      std::vector<std::uint64_t>* adds_by_height
                                      = nullptr) {
  Arena& arena = *t.arena;
  Word flags = arena.load(leaf + kFlagsOff, cls);
  arena.store(leaf + kFlagsOff, flags | kFullFlag, cls);
  Addr n = leaf;
  for (;;) {
    Word parent = arena.load(n + kParentOff, cls);
    if (parent == kNullAddr) {
      close_open_rects(arena, n, V, cls);
      return true;
    }
    Word upper = arena.load(parent + kUpperOff, cls);
    if (upper != kNullAddr) {
      // Third child already present: with n now full the parent has two full
      // children and fills as well.
      Word pf = arena.load(parent + kFlagsOff, cls);
      arena.store(parent + kFlagsOff, pf | kFullFlag, cls);
      n = parent;
      continue;
    }
    close_open_rects(arena, n, V, cls);
    Addr added = add_third_child(t, parent, n, V, cells, cls);
    if (adds_by_height) {
      std::uint32_t h =
          static_cast<std::uint32_t>(arena.peek(added + kHeightOff));
      if (h < adds_by_height->size()) (*adds_by_height)[h] += 1;
    }
    return false;
  }
}

// Test/census helper: number of points stored in the subtree. Untraced.
inline std::uint64_t count_points_in(const Arena& arena, Addr node) {
  Word flags = arena.peek(node + kFlagsOff);
  if (flags & kLeafFlag) {
    return arena.peek(node + kPointVersionOff) != kNullAddr ? 1 : 0;
  }
  std::uint64_t total = 0;
  for (std::uint64_t off : {kLeftOff, kRightOff, kUpperOff}) {
    Word child = arena.peek(node + off);
    if (child != kNullAddr) total += count_points_in(arena, child);
  }
  return total;
}

// Untraced DFS listing of all node addresses in a subtree.
inline void collect_tree_nodes(const Arena& arena, Addr node,
                               std::vector<Addr>& out) {
  out.push_back(node);
  Word flags = arena.peek(node + kFlagsOff);
  if (flags & kLeafFlag) return;
  for (std::uint64_t off : {kLeftOff, kRightOff, kUpperOff}) {
    Word child = arena.peek(node + off);
    if (child != kNullAddr) collect_tree_nodes(arena, child, out);
  }
}

struct InvariantReport {
  bool ok = true;
  std::string message;
  Addr node = kNullAddr;

  static InvariantReport violation(Addr addr, std::string msg) {
    return {false, std::move(msg), addr};
  }
};

namespace detail {

struct InvariantContext {
  const Arena* arena;
  InvariantReport report;

  bool fail(Addr node, const std::string& msg) {
    if (report.ok) report = InvariantReport::violation(node, msg);
    return false;
  }
};

// Validates the subtree rooted at `node` and returns its point count, or
// nullopt after recording the first violation.
inline std::optional<std::uint64_t> check_rec(InvariantContext& ctx,
                                              Addr node, Addr expected_parent) {
  const Arena& a = *ctx.arena;
  Word flags = a.peek(node + kFlagsOff);
  Word x_lo = a.peek(node + kXLoOff);
  Word height = a.peek(node + kHeightOff);
  Word t_lo = a.peek(node + kTLoOff);
  Word t_hi = a.peek(node + kTHiOff);
  Word parent = a.peek(node + kParentOff);
  Word left = a.peek(node + kLeftOff);
  Word right = a.peek(node + kRightOff);
  Word upper = a.peek(node + kUpperOff);
  Word point_version = a.peek(node + kPointVersionOff);
  bool leaf = flags & kLeafFlag;
  bool full = flags & kFullFlag;
  bool open = t_hi == kOpenTop;

  if (flags & ~(kLeafFlag | kFullFlag)) {
    ctx.fail(node, "unknown flag bits set");
    return std::nullopt;
  }
  if (parent != expected_parent) {
    ctx.fail(node, "parent pointer does not match actual parent");
    return std::nullopt;
  }
  if (height > 63) {
    ctx.fail(node, "implausible height");
    return std::nullopt;
  }
  std::uint64_t width = std::uint64_t{1} << height;
  if (x_lo % width != 0) {
    ctx.fail(node, "x_lo not aligned to rectangle width");
    return std::nullopt;
  }
  if (t_lo < 1) {
    ctx.fail(node, "rows start below 1");
    return std::nullopt;
  }
  if (!open && t_hi < t_lo) {
    ctx.fail(node, "closed rectangle with empty row range");
    return std::nullopt;
  }
  if (open && full) {
    ctx.fail(node, "open rectangle marked full");
    return std::nullopt;
  }
  if (leaf != (height == 0)) {
    ctx.fail(node, "leaf flag disagrees with height");
    return std::nullopt;
  }

  if (leaf) {
    if (left != kNullAddr || right != kNullAddr || upper != kNullAddr) {
      ctx.fail(node, "leaf with children");
      return std::nullopt;
    }
    bool has_point = point_version != kNullAddr;
    if (has_point != full) {
      ctx.fail(node, "leaf fullness disagrees with point presence");
      return std::nullopt;
    }
    if (has_point) {
      if (point_version < t_lo || (!open && point_version > t_hi)) {
        ctx.fail(node, "point row outside leaf rectangle");
        return std::nullopt;
      }
      if (a.peek(node + kPointLabelOff) >= kOpenTop) {
        ctx.fail(node, "point label is a reserved word");
        return std::nullopt;
      }
    }
    return has_point ? 1 : 0;
  }

  if (left == kNullAddr || right == kNullAddr) {
    ctx.fail(node, "internal node missing a side child");
    return std::nullopt;
  }
  struct ChildGeom {
    Addr addr;
    Word x_lo, t_lo, t_hi, flags;
  };
  auto read_child = [&](Addr c) {
    return ChildGeom{c, a.peek(c + kXLoOff), a.peek(c + kTLoOff),
                     a.peek(c + kTHiOff), a.peek(c + kFlagsOff)};
  };
  ChildGeom L = read_child(left), R = read_child(right);
  std::uint64_t half = width / 2;
  auto check_side = [&](const ChildGeom& S, Word want_x) {
    if (S.x_lo != want_x) return ctx.fail(node, "side child column misaligned");
    if (a.peek(S.addr + kHeightOff) != height - 1) {
      return ctx.fail(node, "child height is not parent height - 1");
    }
    if (S.t_lo != t_lo) return ctx.fail(node, "side child rows start late");
    return true;
  };
  if (!check_side(L, x_lo) || !check_side(R, x_lo + half)) return std::nullopt;

  int full_children = (L.flags & kFullFlag ? 1 : 0) +
                      (R.flags & kFullFlag ? 1 : 0);
  if (upper != kNullAddr) {
    ChildGeom Up = read_child(upper);
    if (Up.flags & kFullFlag) ++full_children;
    if (a.peek(upper + kHeightOff) != height - 1) {
      ctx.fail(node, "upper child height mismatch");
      return std::nullopt;
    }
    if (Up.x_lo != x_lo && Up.x_lo != x_lo + half) {
      ctx.fail(node, "upper child sits over neither side");
      return std::nullopt;
    }
    const ChildGeom& below = (Up.x_lo == x_lo) ? L : R;
    const ChildGeom& other = (Up.x_lo == x_lo) ? R : L;
    if (!(below.flags & kFullFlag)) {
      ctx.fail(node, "upper child not above a full child");
      return std::nullopt;
    }
    if (below.t_hi == kOpenTop || Up.t_lo != below.t_hi + 1) {
      ctx.fail(node, "upper rows do not continue the full child's rows");
      return std::nullopt;
    }
    // Tiling: the stacked side ends where the upper begins; the upper and
    // the other side end with the parent.
    if (Up.t_hi != t_hi) {
      ctx.fail(node, "upper child does not reach parent's last row");
      return std::nullopt;
    }
    if (other.t_hi != t_hi) {
      ctx.fail(node, "side child does not reach parent's last row");
      return std::nullopt;
    }
    if (full_children < 1) {
      ctx.fail(node, "three children but none full");
      return std::nullopt;
    }
  } else {
    if (L.t_hi != t_hi || R.t_hi != t_hi) {
      ctx.fail(node, "children do not tile parent rows");
      return std::nullopt;
    }
  }
  if (full_children > 2) {
    ctx.fail(node, "more than two full children");
    return std::nullopt;
  }
  if (full != (full_children == 2)) {
    ctx.fail(node, "fullness disagrees with full-children count");
    return std::nullopt;
  }

  std::uint64_t points = 0;
  for (Addr c : {static_cast<Addr>(left), static_cast<Addr>(right)}) {
    auto sub = check_rec(ctx, c, node);
    if (!sub) return std::nullopt;
    points += *sub;
  }
  if (upper != kNullAddr) {
    auto sub = check_rec(ctx, upper, node);
    if (!sub) return std::nullopt;
    points += *sub;
  }
  // A full rectangle of height h intersects at least 2^h points.
  if (full && points < width) {
    ctx.fail(node, "full rectangle with fewer points than its width");
    return std::nullopt;
  }
  return points;
}

}  // namespace detail

// Structural validation of one tree (untraced). Checks record sanity, the
// 2-or-3 child shape, row tiling, fullness bookkeeping, upper-child
// placement, and the width-many-points property of full rectangles.
inline InvariantReport check_tree_invariants(const Arena& arena, Addr root) {
  detail::InvariantContext ctx{&arena, {}};
  detail::check_rec(ctx, root, kNullAddr);
  return ctx.report;
}

}  // namespace chronoarray
