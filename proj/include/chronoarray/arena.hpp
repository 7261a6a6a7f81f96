#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chronoarray/common.hpp"

namespace chronoarray {

struct RegionSpec {
  std::string label;
  std::uint64_t length = 0;  // words, may be zero
};

struct Region {
  std::string label;
  Addr base = 0;
  std::uint64_t length = 0;

  bool contains(Addr a) const { return a >= base && a < base + length; }
};

struct AccessEvent {
  Addr address = 0;
  AccessKind kind = AccessKind::kLoad;
  OpClass op_class = OpClass::kRead;
};

using AccessTrace = std::vector<AccessEvent>;

// Span [old_base, old_base+length) moved to new_base by a region grow.
struct Relocation {
  Addr old_base = 0;
  Addr new_base = 0;
  std::uint64_t length = 0;
};

// Flat word-addressed memory carved into labeled regions, recording every
// load and store together with its cost class. The trace is the ground truth
// consumed by the cache simulators; bookkeeping reads done through peek()
// stay invisible to it.
class Arena {
 public:
  static constexpr std::uint64_t kDefaultMaxWords = std::uint64_t{1} << 28;

  explicit Arena(const std::vector<RegionSpec>& plan,
                 std::uint64_t max_words = kDefaultMaxWords)
      : max_words_(max_words) {
    plan_regions(plan);
  }

  Word load(Addr a, OpClass cls) {
    check_addr(a);
    trace_.push_back({a, AccessKind::kLoad, cls});
    return mem_[a];
  }

  void store(Addr a, Word w, OpClass cls) {
    check_addr(a);
    trace_.push_back({a, AccessKind::kStore, cls});
    mem_[a] = w;
  }

  // Untraced accessors for validators, censuses and tests.
  Word peek(Addr a) const {
    check_addr(a);
    return mem_[a];
  }

  void poke(Addr a, Word w) {
    check_addr(a);
    mem_[a] = w;
  }

  // Drains the accumulated trace; afterwards the internal buffer is empty.
  AccessTrace take_trace() {
    AccessTrace out;
    out.swap(trace_);
    return out;
  }

  std::uint64_t trace_size() const { return trace_.size(); }

  // Extends one region in place. Regions after it keep their plan order and
  // shift upward; every moved word costs one maintenance load and one
  // maintenance store. Fresh words are zero.
  std::vector<Relocation> grow_region(const std::string& label,
                                      std::uint64_t new_length) {
    std::size_t idx = index_of(label);
    Region& r = regions_[idx];
    if (new_length < r.length) {
      throw std::invalid_argument("grow_region cannot shrink region " + label);
    }
    std::uint64_t delta = new_length - r.length;
    if (delta == 0) return {};
    std::uint64_t old_total = total_words();
    std::uint64_t new_total = old_total + delta;
    if (new_total > max_words_) {
      throw std::length_error("arena budget exceeded");
    }
    mem_.resize(new_total, 0);

    std::vector<Relocation> moves;
    Addr moved_base = r.base + r.length;       // first word after grown region
    std::uint64_t moved_len = old_total - moved_base;
    if (moved_len > 0) {
      // Copy back-to-front: destination overlaps source when delta < length.
      for (std::uint64_t k = moved_len; k-- > 0;) {
        Word w = load(moved_base + k, OpClass::kMaintenance);
        store(moved_base + k + delta, w, OpClass::kMaintenance);
      }
      for (std::size_t j = idx + 1; j < regions_.size(); ++j) {
        if (regions_[j].length > 0) {
          moves.push_back({regions_[j].base, regions_[j].base + delta,
                           regions_[j].length});
        }
        regions_[j].base += delta;
      }
    }
    // The vacated gap becomes the region's new tail; clear it so fresh words
    // read as zero regardless of what the shifted copy left behind.
    for (std::uint64_t k = 0; k < delta; ++k) mem_[r.base + r.length + k] = 0;
    r.length = new_length;
    return moves;
  }

  // Throws away all contents and re-plans regions from scratch (zeroed).
  // The pending trace is kept. Used by the rebuild path, which re-creates
  // every live word anyway.
  void reset_regions(const std::vector<RegionSpec>& plan) {
    regions_.clear();
    mem_.clear();
    plan_regions(plan);
  }

  const Region& region(const std::string& label) const {
    return regions_[index_of(label)];
  }

  const std::vector<Region>& regions() const { return regions_; }

  std::uint64_t total_words() const { return mem_.size(); }

  std::uint64_t max_words() const { return max_words_; }

  std::vector<Word> snapshot() const { return mem_; }

 private:
  void plan_regions(const std::vector<RegionSpec>& plan) {
    std::uint64_t total = 0;
    for (const auto& spec : plan) {
      for (const auto& existing : regions_) {
        if (existing.label == spec.label) {
          throw std::invalid_argument("duplicate region label " + spec.label);
        }
      }
      regions_.push_back({spec.label, total, spec.length});
      total += spec.length;
      if (total > max_words_) {
        throw std::length_error("arena budget exceeded");
      }
    }
    mem_.assign(total, 0);
  }

  void check_addr(Addr a) const {
    if (a >= mem_.size()) {
      throw std::out_of_range("arena address out of range: " +
                              std::to_string(a));
    }
  }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (regions_[i].label == label) return i;
    }
    throw std::invalid_argument("unknown region label " + label);
  }

  std::uint64_t max_words_;
  std::vector<Region> regions_;
  std::vector<Word> mem_;
  AccessTrace trace_;
};

// Binary trace dump, little-endian, 10 bytes per event:
// 1 byte op_class (0=read 1=pread 2=write 3=maint), 1 byte kind
// (0=load 1=store), 8 bytes word address.
inline void write_trace_dump(const AccessTrace& trace, std::ostream& out) {
  for (const auto& ev : trace) {
    unsigned char rec[10];
    rec[0] = static_cast<unsigned char>(ev.op_class);
    rec[1] = static_cast<unsigned char>(ev.kind);
    for (int i = 0; i < 8; ++i) {
      rec[2 + i] = static_cast<unsigned char>((ev.address >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
}

inline AccessTrace read_trace_dump(std::istream& in) {
  AccessTrace trace;
  unsigned char rec[10];
  while (in.read(reinterpret_cast<char*>(rec), sizeof rec)) {
    if (rec[0] > 3 || rec[1] > 1) {
      throw std::runtime_error("corrupt trace dump record");
    }
    Addr a = 0;
    for (int i = 0; i < 8; ++i) a |= Addr{rec[2 + i]} << (8 * i);
    trace.push_back({a, static_cast<AccessKind>(rec[1]),
                     static_cast<OpClass>(rec[0])});
  }
  if (in.gcount() != 0) {
    throw std::runtime_error("truncated trace dump");
  }
  return trace;
}

}  // namespace chronoarray
