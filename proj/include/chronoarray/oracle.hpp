#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "chronoarray/common.hpp"

namespace chronoarray {

// Ground-truth versioned array: every write appended to its column's history,
// historical reads by predecessor search. No cost model, no memory layout;
// nothing here touches an arena.
class ReferenceArray {
 public:
  std::uint64_t write(std::uint64_t column, Word value) {
    ++version_;
    columns_[column].push_back({version_, value});
    return version_;
  }

  Answer read(std::uint64_t column) const {
    auto it = columns_.find(column);
    if (it == columns_.end() || it->second.empty()) return std::nullopt;
    return it->second.back().value;
  }

  Answer persistent_read(std::uint64_t v, std::uint64_t column) const {
    if (v > version_) {
      throw std::out_of_range("version " + std::to_string(v) +
                              " not yet written (V=" +
                              std::to_string(version_) + ")");
    }
    auto it = columns_.find(column);
    if (it == columns_.end()) return std::nullopt;
    const auto& recs = it->second;
    // Last record with version <= v.
    auto pos = std::upper_bound(
        recs.begin(), recs.end(), v,
        [](std::uint64_t lhs, const Record& r) { return lhs < r.version; });
    if (pos == recs.begin()) return std::nullopt;
    return std::prev(pos)->value;
  }

  std::uint64_t version_count() const { return version_; }

 private:
  struct Record {
    std::uint64_t version;
    Word value;
  };

  std::unordered_map<std::uint64_t, std::vector<Record>> columns_;
  std::uint64_t version_ = 0;
};

}  // namespace chronoarray
