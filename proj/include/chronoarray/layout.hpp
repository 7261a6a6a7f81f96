#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "chronoarray/common.hpp"

namespace chronoarray {

// Path from the root of a ternary tree: 0 = left, 1 = right, 2 = upper.
// The root is the empty path.
using TreePath = std::vector<std::uint8_t>;

// 3^n with overflow guard.
inline std::uint64_t pow3(std::uint32_t n) {
  if (n > 40) throw std::length_error("3^n overflows 64 bits");
  std::uint64_t r = 1;
  for (std::uint32_t i = 0; i < n; ++i) r *= 3;
  return r;
}

// Slots reserved for a complete ternary tree of `levels` levels:
// (3^levels - 1) / 2.
inline std::uint64_t ternary_slot_count(std::uint32_t levels) {
  return (pow3(levels) - 1) / 2;
}

struct LayoutParams {
  Fraction epsilon;
  std::uint32_t levels = 1;

  LayoutParams() = default;
  LayoutParams(Fraction eps, std::uint32_t lv) : epsilon(eps), levels(lv) {
    if (lv == 0) throw std::invalid_argument("layout needs at least 1 level");
    (void)ternary_slot_count(lv);  // overflow guard
  }
};

// Levels claimed by the top recursion piece of a tree with `levels` levels.
inline std::uint32_t top_piece_levels(const Fraction& eps,
                                      std::uint32_t levels) {
  std::uint64_t t = eps.ceil_mul(levels - 1);
  if (t == 0) t = 1;
  return static_cast<std::uint32_t>(t);  // < levels because eps < 1
}

namespace detail {

inline void check_path(const TreePath& path, std::uint32_t levels) {
  if (path.size() >= levels) {
    throw std::invalid_argument("path deeper than layout levels");
  }
  for (auto step : path) {
    if (step > 2) throw std::invalid_argument("path step out of range");
  }
}

}  // namespace detail

// Slot index of the node at `path` in the recursive layout of a complete
// ternary tree. The tree of L levels splits into a top piece of
// top_piece_levels(eps, L) levels and 3^top bottom pieces of L - top levels;
// slots are handed out to the top piece first, then to the bottom pieces in
// the base-3 order of their length-`top` root paths. Within a piece the same
// rule applies recursively; a single level is one slot.
inline std::uint64_t veb_rank(const TreePath& path, const LayoutParams& p) {
  detail::check_path(path, p.levels);
  std::uint64_t offset = 0;
  std::size_t pos = 0;
  std::uint32_t levels = p.levels;
  while (levels > 1) {
    std::uint32_t top = top_piece_levels(p.epsilon, levels);
    std::size_t remaining = path.size() - pos;
    if (remaining < top) {
      levels = top;
      continue;
    }
    std::uint64_t piece = 0;
    for (std::uint32_t k = 0; k < top; ++k) piece = piece * 3 + path[pos + k];
    pos += top;
    offset += ternary_slot_count(top) +
              piece * ternary_slot_count(levels - top);
    levels -= top;
  }
  return offset;
}

// Inverse of veb_rank over [0, ternary_slot_count(levels)).
inline TreePath veb_inverse(std::uint64_t rank, const LayoutParams& p) {
  if (rank >= ternary_slot_count(p.levels)) {
    throw std::out_of_range("slot rank outside layout");
  }
  TreePath path;
  std::uint32_t levels = p.levels;
  while (levels > 1) {
    std::uint32_t top = top_piece_levels(p.epsilon, levels);
    std::uint64_t top_slots = ternary_slot_count(top);
    if (rank < top_slots) {
      levels = top;
      continue;
    }
    rank -= top_slots;
    std::uint64_t bottom_slots = ternary_slot_count(levels - top);
    std::uint64_t piece = rank / bottom_slots;
    rank %= bottom_slots;
    TreePath digits(top);
    for (std::uint32_t k = top; k-- > 0;) {
      digits[k] = static_cast<std::uint8_t>(piece % 3);
      piece /= 3;
    }
    path.insert(path.end(), digits.begin(), digits.end());
    levels -= top;
  }
  return path;
}

// Paths of the present nodes sorted by slot rank. `present` must be closed
// under parents; closure is verified by full enumeration while the tree is
// small enough to afford it.
inline std::vector<TreePath> compressed_order(
    const std::function<bool(const TreePath&)>& present,
    const LayoutParams& p) {
  if (!present({})) return {};
  std::vector<std::pair<std::uint64_t, TreePath>> found;
  TreePath path;
  auto dfs = [&](auto&& self) -> void {
    found.emplace_back(veb_rank(path, p), path);
    if (path.size() + 1 >= p.levels) return;
    for (std::uint8_t step = 0; step < 3; ++step) {
      path.push_back(step);
      if (present(path)) self(self);
      path.pop_back();
    }
  };
  dfs(dfs);

  if (ternary_slot_count(p.levels) <= (std::uint64_t{1} << 24)) {
    std::uint64_t reachable = found.size();
    std::uint64_t claimed = 0;
    TreePath probe;
    auto count_all = [&](auto&& self) -> void {
      if (present(probe)) ++claimed;
      if (probe.size() + 1 >= p.levels) return;
      for (std::uint8_t step = 0; step < 3; ++step) {
        probe.push_back(step);
        self(self);
        probe.pop_back();
      }
    };
    count_all(count_all);
    if (claimed != reachable) {
      throw std::invalid_argument("present set not closed under parents");
    }
  }

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<TreePath> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

// Number of distinct blocks of `block_words` words touched by `addresses`.
inline std::uint64_t distinct_blocks(const std::vector<Addr>& addresses,
                                     std::uint64_t block_words) {
  if (block_words == 0) throw std::invalid_argument("block size must be > 0");
  std::unordered_set<Addr> blocks;
  blocks.reserve(addresses.size());
  for (Addr a : addresses) blocks.insert(a / block_words);
  return blocks.size();
}

// Slot ranks of every left/right-only path of length <= height. This is the
// complete binary subtree hanging from the root, the shape a column range
// of the space-time grid induces.
inline std::vector<Addr> binary_prefix_ranks(const LayoutParams& p,
                                             std::uint32_t height) {
  if (height >= p.levels) {
    throw std::invalid_argument("binary subtree deeper than layout");
  }
  std::vector<Addr> ranks;
  TreePath path;
  auto dfs = [&](auto&& self) -> void {
    ranks.push_back(veb_rank(path, p));
    if (path.size() >= height) return;
    for (std::uint8_t step = 0; step < 2; ++step) {
      path.push_back(step);
      self(self);
      path.pop_back();
    }
  };
  dfs(dfs);
  return ranks;
}

}  // namespace chronoarray
