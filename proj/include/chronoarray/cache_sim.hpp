#pragma once

#include <array>
#include <cstdint>
#include <list>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "chronoarray/arena.hpp"
#include "chronoarray/common.hpp"

namespace chronoarray {

enum class Policy : std::uint8_t { kLru, kOpt };

struct CacheConfig {
  std::uint64_t memory_words = 0;  // M
  std::uint64_t block_words = 0;   // B
  Policy policy = Policy::kLru;

  std::uint64_t line_count() const { return memory_words / block_words; }

  void check() const {
    if (block_words < 1) throw std::invalid_argument("block size must be >= 1");
    if (memory_words < block_words) {
      throw std::invalid_argument("cache must hold at least one block");
    }
  }
};

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
  std::array<std::uint64_t, 4> accesses_by_class{};
  std::array<std::uint64_t, 4> misses_by_class{};

  std::uint64_t accesses_for(OpClass c) const {
    return accesses_by_class[static_cast<std::size_t>(c)];
  }
  std::uint64_t misses_for(OpClass c) const {
    return misses_by_class[static_cast<std::size_t>(c)];
  }
};

// Online least-recently-used cache over B-word blocks. Feed it accesses in
// any number of chunks; the stats accumulate, so long traces can be drained
// into it piecewise without ever materializing them whole.
class LruCache {
 public:
  explicit LruCache(CacheConfig config) : config_(config) {
    config_.check();
    if (config_.policy != Policy::kLru) {
      throw std::invalid_argument("LruCache is only for the LRU policy");
    }
  }

  void access(Addr address, OpClass cls) {
    std::uint64_t block = address / config_.block_words;
    ++stats_.accesses;
    ++stats_.accesses_by_class[static_cast<std::size_t>(cls)];
    auto it = where_.find(block);
    if (it != where_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    ++stats_.misses;
    ++stats_.misses_by_class[static_cast<std::size_t>(cls)];
    if (where_.size() == config_.line_count()) {
      where_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(block);
    where_[block] = order_.begin();
  }

  void consume(const AccessTrace& trace) {
    for (const auto& e : trace) access(e.address, e.op_class);
  }

  const CacheStats& stats() const { return stats_; }

 private:
  CacheConfig config_;
  CacheStats stats_;
  std::list<std::uint64_t> order_;  // front = most recent
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> where_;
};

inline CacheStats sim_lru(const AccessTrace& trace, CacheConfig config) {
  config.policy = Policy::kLru;
  LruCache cache(config);
  cache.consume(trace);
  return cache.stats();
}

// Offline optimal replacement: evict the resident block whose next use lies
// furthest ahead, preferring blocks never used again, ties to the lowest
// block id. Needs the whole trace up front. `evicted`, when given, receives
// the victim block ids in eviction order.
inline CacheStats sim_opt(const AccessTrace& trace, CacheConfig config,
                          std::vector<std::uint64_t>* evicted = nullptr) {
  config.check();
  const std::uint64_t kNever = ~std::uint64_t{0};
  std::size_t n = trace.size();
  std::vector<std::uint64_t> blocks(n);
  std::vector<std::uint64_t> next_use(n);
  {
    std::unordered_map<std::uint64_t, std::uint64_t> seen_at;
    for (std::size_t i = n; i-- > 0;) {
      std::uint64_t block = trace[i].address / config.block_words;
      blocks[i] = block;
      auto it = seen_at.find(block);
      next_use[i] = it == seen_at.end() ? kNever : it->second;
      seen_at[block] = i;
    }
  }
  CacheStats stats;
  // Resident set keyed for the eviction rule: furthest next use first,
  // never-used (kNever) naturally sorting furthest, ties by lowest block id.
  std::set<std::pair<std::uint64_t, std::uint64_t>,
           std::greater<std::pair<std::uint64_t, std::uint64_t>>>
      eviction_order;  // (next_use, ~block) so greater<> breaks ties low-first
  std::unordered_map<std::uint64_t, std::uint64_t> resident;  // block -> next
  std::uint64_t lines = config.line_count();
  for (std::size_t i = 0; i < n; ++i) {
    OpClass cls = trace[i].op_class;
    ++stats.accesses;
    ++stats.accesses_by_class[static_cast<std::size_t>(cls)];
    std::uint64_t block = blocks[i];
    auto it = resident.find(block);
    if (it != resident.end()) {
      eviction_order.erase({it->second, ~block});
      it->second = next_use[i];
      eviction_order.insert({next_use[i], ~block});
      continue;
    }
    ++stats.misses;
    ++stats.misses_by_class[static_cast<std::size_t>(cls)];
    if (resident.size() == lines) {
      auto victim = *eviction_order.begin();
      eviction_order.erase(eviction_order.begin());
      resident.erase(~victim.second);
      if (evicted) evicted->push_back(~victim.second);
    }
    resident[block] = next_use[i];
    eviction_order.insert({next_use[i], ~block});
  }
  return stats;
}

inline CacheStats simulate(const AccessTrace& trace, CacheConfig config) {
  return config.policy == Policy::kLru ? sim_lru(trace, config)
                                       : sim_opt(trace, config);
}

inline const char* policy_name(Policy p) {
  return p == Policy::kLru ? "lru" : "opt";
}

inline Policy parse_policy(const std::string& s) {
  if (s == "lru") return Policy::kLru;
  if (s == "opt") return Policy::kOpt;
  throw std::invalid_argument("unknown policy: " + s);
}

}  // namespace chronoarray
