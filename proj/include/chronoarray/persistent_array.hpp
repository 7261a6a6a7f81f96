#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chronoarray/arena.hpp"
#include "chronoarray/common.hpp"
#include "chronoarray/layout.hpp"
#include "chronoarray/st_tree.hpp"

namespace chronoarray {

// Fixed word offsets inside the GLOBALS region (which always starts at
// arena address 0). The directory of per-tree root addresses follows the
// scalar slots; its capacity grows with the region.
namespace globals {
inline constexpr Addr kU = 0;
inline constexpr Addr kV = 1;
inline constexpr Addr kFinger = 2;
inline constexpr Addr kTopFinished = 3;
inline constexpr Addr kTreeCount = 4;
inline constexpr Addr kBottomUsed = 5;
inline constexpr Addr kDirectory = 8;
}  // namespace globals

struct SpaceReport {
  std::vector<std::pair<std::string, std::uint64_t>> regions;
  std::uint64_t total_words = 0;
};

struct PersistStats {
  std::uint64_t rollovers = 0;  // excludes rollovers replayed during rebuilds
  std::uint64_t rebuilds = 0;
  // Third children hung per full-child height; suspended during replay so a
  // rebuild does not double-count the workload's own reconfigurations.
  std::vector<std::uint64_t> third_child_by_height;
  // Live node count of each compressed tree, in directory order.
  std::vector<std::uint64_t> bottom_tree_nodes;
  LocateStats last_locate;
};

// A flat array of 64-bit cells whose entire write history stays queryable.
// Present-time reads come straight from the cell array; historical reads
// navigate the version-indexed tree forest. Every structural memory access
// goes through the arena so its block behavior can be replayed offline.
class PersistentArray {
 public:
  explicit PersistentArray(std::uint64_t u0 = 2,
                           Fraction epsilon = Fraction(1, 2),
                           std::uint64_t max_words = Arena::kDefaultMaxWords)
      : epsilon_(epsilon), max_words_(max_words), u_(u0) {
    if (u0 < 2 || !std::has_single_bit(u0)) {
      throw std::invalid_argument(
          "initial capacity must be a power of two >= 2");
    }
    dir_cap_ = kInitialDirCap;
    log_cap_ = min_log_records(u0);
    arena_ = std::make_unique<Arena>(make_plan(u0, dir_cap_, log_cap_, 0),
                                     max_words);
    top_live_ = std::make_unique<std::vector<std::uint8_t>>();
    storage_ = TreeStorage{arena_.get(), arena_->region("TOP_TREE").base,
                           LayoutParams(epsilon_, levels_for(u0)),
                           top_live_.get()};
    cells_ = CArrayView{arena_->region("C_ARRAY").base};
    log_base_ = arena_->region("LOG").base;
    stats_.third_child_by_height.assign(levels_for(u0), 0);
    init_fresh(OpClass::kMaintenance);
  }

  PersistentArray(PersistentArray&&) = default;
  PersistentArray& operator=(PersistentArray&&) = default;

  // Present value of a cell. Touches only the cell array; addresses at or
  // beyond the capacity are unwritten by definition and cost nothing.
  Answer read(std::uint64_t column) {
    if (column >= u_) return std::nullopt;
    Word v = arena_->load(cells_.value_addr(column), OpClass::kRead);
    if (v == kNullAddr) return std::nullopt;
    return v;
  }

  // Sets cell `column` to `value`; returns the new version number. Growth
  // (capacity doubling) and tree rollover run first when due.
  std::uint64_t write(std::uint64_t column, Word value) {
    if (value >= kOpenTop) {
      throw std::invalid_argument(
          "payload collides with a reserved marker value");
    }
    return write_impl(column, value, OpClass::kWrite);
  }

  // Value of cell `column` as of version v (v=0 is the initial, empty state).
  Answer persistent_read(std::uint64_t v, std::uint64_t column) {
    if (v > v_) {
      throw std::out_of_range("version " + std::to_string(v) +
                              " does not exist yet (V=" + std::to_string(v_) +
                              ")");
    }
    if (v == 0 || column >= u_) return std::nullopt;
    DirectoryView dir{arena_.get(), globals::kDirectory, tree_count_, u_};
    LocateStats st;
    Addr leaf = locate_leaf(*arena_, finger_, &dir, column, v,
                            OpClass::kPersistentRead, &st);
    stats_.last_locate = st;
    finger_ = leaf;
    arena_->store(globals::kFinger, finger_, OpClass::kPersistentRead);
    Word ans = leaf_answer(*arena_, leaf, v, OpClass::kPersistentRead);
    if (ans == kNullAddr) return std::nullopt;
    return ans;
  }

  // Compresses the exhausted top tree into the bottom-tree region and starts
  // a fresh one seeded from the current cell values. write() calls this on
  // its own; the public form exists for tests and tooling.
  void roll_top_tree() {
    if (!finished_ && rows_used() != u_) {
      throw std::logic_error("top tree still has rows to spend");
    }
    roll_impl();
  }

  // Doubles capacity (at least) so `trigger_column` fits, then replays the
  // whole write log under the new geometry. The structure is untouched if
  // the new footprint cannot be allocated.
  void rebuild(std::uint64_t trigger_column) {
    if (trigger_column < u_) {
      throw std::logic_error("rebuild requires a column beyond the capacity");
    }
    std::uint64_t new_u = std::max(u_ * 2, std::bit_ceil(trigger_column + 1));
    std::uint64_t new_log_cap = std::max(log_cap_, min_log_records(new_u));
    while (new_log_cap < v_ + 1) new_log_cap *= 4;
    std::uint64_t trees_after = v_ / new_u + 1;
    std::uint64_t new_dir_cap =
        std::max<std::uint64_t>(kInitialDirCap, 2 * trees_after);
    auto plan = make_plan(new_u, new_dir_cap, new_log_cap, 0);
    std::uint64_t total = 0;
    for (const auto& spec : plan) total += spec.length;
    if (total > max_words_) {
      throw std::length_error("rebuild would exceed the arena word budget");
    }
    std::vector<std::array<std::uint64_t, 3>> records(v_);
    for (std::uint64_t r = 0; r < v_; ++r) {
      Addr rec = log_base_ + 3 * r;
      records[r] = {arena_->load(rec, OpClass::kMaintenance),
                    arena_->load(rec + 1, OpClass::kMaintenance),
                    arena_->load(rec + 2, OpClass::kMaintenance)};
    }
    arena_->reset_regions(plan);
    u_ = new_u;
    log_cap_ = new_log_cap;
    dir_cap_ = new_dir_cap;
    storage_ = TreeStorage{arena_.get(), arena_->region("TOP_TREE").base,
                           LayoutParams(epsilon_, levels_for(new_u)),
                           top_live_.get()};
    cells_ = CArrayView{arena_->region("C_ARRAY").base};
    log_base_ = arena_->region("LOG").base;
    stats_.third_child_by_height.resize(levels_for(new_u), 0);
    stats_.bottom_tree_nodes.clear();
    init_fresh(OpClass::kMaintenance);
    replaying_ = true;
    try {
      for (const auto& rec : records) {
        std::uint64_t got = write_impl(rec[1], rec[2], OpClass::kMaintenance);
        if (got != rec[0]) {
          throw std::runtime_error("log replay produced mismatched versions");
        }
      }
    } catch (...) {
      replaying_ = false;
      throw;
    }
    replaying_ = false;
    ++stats_.rebuilds;
  }

  SpaceReport space_report() const {
    SpaceReport rep;
    for (const auto& r : arena_->regions()) {
      rep.regions.push_back({r.label, r.length});
      rep.total_words += r.length;
    }
    return rep;
  }

  // Full structural audit: every tree's geometry, the directory, the log,
  // the cell array, and the mirrored scalars. Untraced.
  InvariantReport validate() const {
    auto fail = [](std::string msg, Addr node = kNullAddr) {
      return InvariantReport{false, std::move(msg), node};
    };
    for (std::uint64_t j = 0; j < tree_count_; ++j) {
      auto rep = check_tree_invariants(*arena_, dir_[j]);
      if (!rep.ok) return rep;
    }
    if (top_t_lo_ != (tree_count_ - 1) * u_ + 1) {
      return fail("directory size disagrees with the top tree's row origin");
    }
    if (v_ + 1 < top_t_lo_ || v_ > top_t_lo_ + u_ - 1) {
      return fail("version count lies outside the top tree's rows");
    }
    if (arena_->peek(globals::kU) != u_ || arena_->peek(globals::kV) != v_ ||
        arena_->peek(globals::kFinger) != finger_ ||
        arena_->peek(globals::kTreeCount) != tree_count_ ||
        arena_->peek(globals::kBottomUsed) != bottom_used_) {
      return fail("global scalars out of sync with their arena words");
    }
    for (std::uint64_t j = 0; j < tree_count_; ++j) {
      if (arena_->peek(globals::kDirectory + j) != dir_[j]) {
        return fail("directory entry out of sync", globals::kDirectory + j);
      }
      std::uint64_t t_lo = arena_->peek(dir_[j] + kTLoOff);
      if (t_lo != j * u_ + 1) {
        return fail("tree row origin misaligned with directory slot", dir_[j]);
      }
      Word t_hi = arena_->peek(dir_[j] + kTHiOff);
      bool is_top = j + 1 == tree_count_;
      if (!is_top && t_hi != (j + 1) * u_) {
        return fail("retired tree does not cover its version block", dir_[j]);
      }
    }
    for (std::uint64_t r = 0; r < v_; ++r) {
      if (arena_->peek(log_base_ + 3 * r) != r + 1) {
        return fail("log version sequence broken", log_base_ + 3 * r);
      }
    }
    const Region& top = arena_->region("TOP_TREE");
    for (std::uint64_t c = 0; c < u_; ++c) {
      Word leaf = arena_->peek(cells_.leaf_addr(c));
      if (!top.contains(leaf)) {
        return fail("cell leaf pointer outside the top tree",
                    cells_.leaf_addr(c));
      }
      if (!(arena_->peek(leaf + kFlagsOff) & kLeafFlag) ||
          arena_->peek(leaf + kXLoOff) != c) {
        return fail("cell leaf pointer does not name a leaf of its column",
                    leaf);
      }
      Word value = arena_->peek(cells_.value_addr(c));
      Word truth = v_ == 0 ? kNullAddr : probe_answer(v_, c);
      if (value != truth) {
        return fail("cell value disagrees with the latest version",
                    cells_.value_addr(c));
      }
    }
    return InvariantReport{};
  }

  // Serializes the write log, one "<version> <column> <value>" per line.
  void save_log(std::ostream& os) const {
    for (std::uint64_t r = 0; r < v_; ++r) {
      Addr rec = log_base_ + 3 * r;
      os << arena_->peek(rec) << ' ' << arena_->peek(rec + 1) << ' '
         << arena_->peek(rec + 2) << '\n';
    }
  }

  void save_log(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot open log for writing: " + path);
    }
    save_log(out);
  }

  // Rebuilds a structure by replaying a saved log. With the same starting
  // capacity the replay follows the identical growth trajectory, so the
  // arena contents come out bit-identical to the original's.
  static PersistentArray load_log(std::istream& is, std::uint64_t u0 = 2,
                                  Fraction epsilon = Fraction(1, 2),
                                  std::uint64_t max_words =
                                      Arena::kDefaultMaxWords) {
    PersistentArray out(u0, epsilon, max_words);
    std::uint64_t ver = 0, col = 0, val = 0;
    std::uint64_t expect = 1;
    while (is >> ver >> col >> val) {
      if (ver != expect) {
        throw std::runtime_error("log corrupt: expected version " +
                                 std::to_string(expect) + ", found " +
                                 std::to_string(ver));
      }
      out.write(col, val);
      ++expect;
    }
    if (is.fail() && !is.eof()) {
      throw std::runtime_error("log corrupt: malformed record");
    }
    return out;
  }

  static PersistentArray load_log(const std::string& path,
                                  std::uint64_t u0 = 2,
                                  Fraction epsilon = Fraction(1, 2),
                                  std::uint64_t max_words =
                                      Arena::kDefaultMaxWords) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open log for reading: " + path);
    }
    return load_log(in, u0, epsilon, max_words);
  }

  std::uint64_t capacity() const { return u_; }
  std::uint64_t version_count() const { return v_; }
  std::uint64_t tree_count() const { return tree_count_; }
  std::uint64_t rows_used() const { return v_ + 1 - top_t_lo_; }
  Fraction epsilon() const { return epsilon_; }
  const PersistStats& stats() const { return stats_; }
  const Arena& arena() const { return *arena_; }
  AccessTrace take_trace() { return arena_->take_trace(); }

 private:
  static constexpr std::uint64_t kInitialDirCap = 8;

  static std::uint32_t levels_for(std::uint64_t u) {
    return static_cast<std::uint32_t>(std::countr_zero(u)) + 1;
  }

  static std::uint64_t min_log_records(std::uint64_t u) {
    return std::max<std::uint64_t>(1024, 8 * u);
  }

  std::vector<RegionSpec> make_plan(std::uint64_t u, std::uint64_t dir_cap,
                                    std::uint64_t log_records,
                                    std::uint64_t bottom_words) const {
    std::uint64_t slots = ternary_slot_count(levels_for(u));
    if (slots > max_words_ / kNodeWords) {
      throw std::length_error("tree region would exceed the arena budget");
    }
    return {{"GLOBALS", globals::kDirectory + dir_cap},
            {"C_ARRAY", 2 * u},
            {"LOG", 3 * log_records},
            {"TOP_TREE", slots * kNodeWords},
            {"BOTTOM_TREES", bottom_words}};
  }

  void init_fresh(OpClass cls) {
    arena_->store(globals::kU, u_, cls);
    v_ = 0;
    arena_->store(globals::kV, 0, cls);
    finished_ = false;
    arena_->store(globals::kTopFinished, 0, cls);
    bottom_used_ = 0;
    arena_->store(globals::kBottomUsed, 0, cls);
    top_t_lo_ = 1;
    top_root_ = init_complete_tree(
        storage_, 1, [](std::uint64_t) { return kNullAddr; }, cls);
    tree_count_ = 1;
    arena_->store(globals::kTreeCount, 1, cls);
    dir_.assign(1, top_root_);
    arena_->store(globals::kDirectory, top_root_, cls);
    for (std::uint64_t c = 0; c < u_; ++c) {
      arena_->store(cells_.value_addr(c), kNullAddr, cls);
      arena_->store(cells_.leaf_addr(c), initial_leaf_addr(storage_, c), cls);
    }
    finger_ = top_root_;
    arena_->store(globals::kFinger, finger_, cls);
  }

  std::uint64_t write_impl(std::uint64_t column, Word value, OpClass cls) {
    if (column >= u_) rebuild(column);
    if (finished_ || rows_used() == u_) roll_impl();
    if (v_ == log_cap_) grow_log();
    Addr rec = log_base_ + 3 * v_;
    arena_->store(rec, v_ + 1, cls);
    arena_->store(rec + 1, column, cls);
    arena_->store(rec + 2, value, cls);
    ++v_;
    arena_->store(globals::kV, v_, cls);
    arena_->store(cells_.value_addr(column), value, cls);
    Addr start = arena_->load(cells_.leaf_addr(column), cls);
    Addr leaf = locate_leaf(*arena_, start, nullptr, column, v_, cls);
    arena_->store(leaf + kPointVersionOff, v_, cls);
    arena_->store(leaf + kPointLabelOff, value, cls);
    arena_->store(cells_.leaf_addr(column), leaf, cls);
    bool fin = mark_full_and_reconfigure(
        storage_, leaf, v_, cells_, cls,
        replaying_ ? nullptr : &stats_.third_child_by_height);
    if (fin) {
      finished_ = true;
      arena_->store(globals::kTopFinished, 1, cls);
    }
    return v_;
  }

  void roll_impl() {
    const OpClass cls = OpClass::kMaintenance;
    if (!finished_) {
      prune_rows_above(storage_, top_root_, v_, cls);
      close_open_rects(*arena_, top_root_, v_, cls);
    }
    if (tree_count_ + 1 > dir_cap_) grow_directory();
    const auto& live = *top_live_;
    std::uint64_t live_count = 0;
    std::vector<std::uint64_t> compact(live.size(), 0);
    for (std::size_t r = 0; r < live.size(); ++r) {
      compact[r] = live_count;
      live_count += live[r];
    }
    std::uint64_t need = live_count * kNodeWords;
    const Region& bottom = arena_->region("BOTTOM_TREES");
    if (bottom_used_ + need > bottom.length) {
      std::uint64_t target = std::max(bottom.length * 2, bottom_used_ + need);
      apply_relocations(arena_->grow_region("BOTTOM_TREES", target));
    }
    // Single ascending sweep: emission order is layout rank order, and all
    // in-tree pointers are slot starts, so the rank prefix sums give every
    // node's landing address up front.
    Addr dst0 = arena_->region("BOTTOM_TREES").base + bottom_used_;
    Addr old_base = storage_.base;
    auto translate = [&](Word a) -> Word {
      if (a == kNullAddr) return a;
      return dst0 + compact[(a - old_base) / kNodeWords] * kNodeWords;
    };
    for (std::size_t r = 0; r < live.size(); ++r) {
      if (!live[r]) continue;
      Addr src = storage_.slot_addr(r);
      Addr dst = dst0 + compact[r] * kNodeWords;
      for (std::uint64_t f = 0; f < kNodeWords; ++f) {
        Word w = arena_->load(src + f, cls);
        if (f == kParentOff || f == kLeftOff || f == kRightOff ||
            f == kUpperOff) {
          w = translate(w);
        }
        arena_->store(dst + f, w, cls);
      }
    }
    bottom_used_ += need;
    arena_->store(globals::kBottomUsed, bottom_used_, cls);
    stats_.bottom_tree_nodes.push_back(live_count);
    dir_.back() = translate(top_root_);
    arena_->store(globals::kDirectory + (tree_count_ - 1), dir_.back(), cls);
    top_t_lo_ = v_ + 1;
    top_root_ = init_complete_tree(
        storage_, top_t_lo_,
        [&](std::uint64_t c) {
          return arena_->load(cells_.value_addr(c), cls);
        },
        cls);
    dir_.push_back(top_root_);
    arena_->store(globals::kDirectory + tree_count_, top_root_, cls);
    ++tree_count_;
    arena_->store(globals::kTreeCount, tree_count_, cls);
    for (std::uint64_t c = 0; c < u_; ++c) {
      arena_->store(cells_.leaf_addr(c), initial_leaf_addr(storage_, c), cls);
    }
    finger_ = top_root_;
    arena_->store(globals::kFinger, finger_, cls);
    if (finished_) {
      finished_ = false;
      arena_->store(globals::kTopFinished, 0, cls);
    }
    if (!replaying_) ++stats_.rollovers;
  }

  void grow_log() {
    log_cap_ *= 4;
    apply_relocations(arena_->grow_region("LOG", 3 * log_cap_));
  }

  void grow_directory() {
    dir_cap_ *= 2;
    apply_relocations(
        arena_->grow_region("GLOBALS", globals::kDirectory + dir_cap_));
  }

  // After a region grows, everything behind it shifts. The arena has already
  // moved the bytes; this rewrites every stored address (tree pointers, cell
  // leaf pointers, directory, finger) through the relocation map.
  void apply_relocations(const std::vector<Relocation>& moves) {
    if (moves.empty()) return;
    const OpClass cls = OpClass::kMaintenance;
    auto translate = [&moves](Word a) -> Word {
      if (a == kNullAddr) return a;
      for (const auto& m : moves) {
        if (a >= m.old_base && a < m.old_base + m.length) {
          return a - m.old_base + m.new_base;
        }
      }
      return a;
    };
    storage_.base = arena_->region("TOP_TREE").base;
    cells_ = CArrayView{arena_->region("C_ARRAY").base};
    log_base_ = arena_->region("LOG").base;
    top_root_ = translate(top_root_);
    finger_ = translate(finger_);
    arena_->store(globals::kFinger, finger_, cls);
    for (std::uint64_t j = 0; j < tree_count_; ++j) {
      dir_[j] = translate(dir_[j]);
      arena_->store(globals::kDirectory + j, dir_[j], cls);
    }
    for (std::uint64_t c = 0; c < u_; ++c) {
      Word leaf = arena_->load(cells_.leaf_addr(c), cls);
      Word moved = translate(leaf);
      if (moved != leaf) arena_->store(cells_.leaf_addr(c), moved, cls);
    }
    for (std::uint64_t j = 0; j < tree_count_; ++j) {
      std::vector<Addr> stack{dir_[j]};
      while (!stack.empty()) {
        Addr n = stack.back();
        stack.pop_back();
        for (std::uint64_t off :
             {kParentOff, kLeftOff, kRightOff, kUpperOff}) {
          Word p = arena_->load(n + off, cls);
          Word moved = translate(p);
          if (moved != p) arena_->store(n + off, moved, cls);
          if (off != kParentOff && moved != kNullAddr) stack.push_back(moved);
        }
      }
    }
  }

  // Untraced answer probe used by the validator: descends the tree that owns
  // version v exactly the way a historical read would.
  Word probe_answer(std::uint64_t v, std::uint64_t column) const {
    Addr cur = dir_[(v - 1) / u_];
    std::uint64_t x_lo = 0;
    auto h = static_cast<std::uint32_t>(arena_->peek(cur + kHeightOff));
    while (h > 0) {
      std::uint64_t half = std::uint64_t{1} << (h - 1);
      bool right = column >= x_lo + half;
      Addr side = arena_->peek(cur + (right ? kRightOff : kLeftOff));
      if (v <= arena_->peek(side + kTHiOff)) {
        cur = side;
      } else {
        cur = arena_->peek(cur + kUpperOff);
      }
      if (right) x_lo += half;
      --h;
    }
    Word pv = arena_->peek(cur + kPointVersionOff);
    if (pv != kNullAddr && pv <= v) {
      return arena_->peek(cur + kPointLabelOff);
    }
    return arena_->peek(cur + kBaseValueOff);
  }

  Fraction epsilon_;
  std::uint64_t max_words_;
  std::uint64_t u_;
  std::uint64_t v_ = 0;
  std::uint64_t dir_cap_ = kInitialDirCap;
  std::uint64_t log_cap_ = 0;
  std::uint64_t tree_count_ = 1;
  std::uint64_t bottom_used_ = 0;
  std::uint64_t top_t_lo_ = 1;
  bool finished_ = false;
  bool replaying_ = false;
  Addr top_root_ = kNullAddr;
  Addr finger_ = kNullAddr;
  Addr log_base_ = 0;
  std::vector<Addr> dir_;
  std::unique_ptr<Arena> arena_;
  std::unique_ptr<std::vector<std::uint8_t>> top_live_;
  TreeStorage storage_;
  CArrayView cells_;
  PersistStats stats_;
};

}  // namespace chronoarray
