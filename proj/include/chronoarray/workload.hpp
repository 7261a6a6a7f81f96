#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chronoarray/common.hpp"
#include "chronoarray/persistent_array.hpp"

namespace chronoarray {

enum class OpKind : std::uint8_t { kWrite, kRead, kPersistentRead };

struct Op {
  OpKind kind = OpKind::kWrite;
  std::uint64_t column = 0;
  Word value = 0;          // writes
  std::uint64_t version = 0;  // persistent reads
};

// Everything a generator needs to emit a deterministic operation sequence.
// target_version is the fixed version for pscan and the upper version bound
// for pread-rand; callers resolve it against a built structure first.
struct WorkloadSpec {
  std::string kind = "rand-write";
  std::uint64_t ops = 0;      // 0 = let the experiment choose
  std::uint64_t u0 = 0;       // 0 = let the experiment choose
  std::uint64_t seed = 0;
  std::uint64_t scan_width = 0;     // pscan: w, defaults to ops
  std::uint64_t scan_start = 0;     // pscan: first column
  std::uint64_t target_version = 0;
  std::uint64_t column_span = 0;    // write kinds: columns in [0, span), 0 -> u0
};

inline const std::vector<std::string>& workload_kinds() {
  static const std::vector<std::string> kinds = {
      "seq-write", "rand-write", "unique-write",
      "pscan",     "pread-rand", "mixed"};
  return kinds;
}

namespace detail {

// Payloads must stay below the reserved words; one shift is enough.
inline Word draw_value(std::mt19937_64& rng) { return rng() >> 1; }

}  // namespace detail

inline std::vector<Op> gen_workload(const WorkloadSpec& spec) {
  if (spec.ops < 1) throw std::invalid_argument("workload needs ops >= 1");
  std::mt19937_64 rng(spec.seed);
  std::uint64_t span = spec.column_span ? spec.column_span : spec.u0;
  bool needs_span = spec.kind == "seq-write" || spec.kind == "rand-write" ||
                    spec.kind == "mixed";
  if (needs_span && span == 0) {
    throw std::invalid_argument("workload needs a column span (u0 or span)");
  }
  bool reads_cells = spec.kind == "pread-rand" || spec.kind == "mixed";
  if (reads_cells && spec.u0 == 0) {
    throw std::invalid_argument("workload needs u0 to draw read columns");
  }
  std::vector<Op> ops;
  ops.reserve(spec.ops);

  if (spec.kind == "seq-write") {
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      ops.push_back({OpKind::kWrite, i % span, detail::draw_value(rng), 0});
    }
  } else if (spec.kind == "rand-write") {
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      ops.push_back({OpKind::kWrite, rng() % span, detail::draw_value(rng), 0});
    }
  } else if (spec.kind == "unique-write") {
    std::uint64_t pool = spec.column_span ? spec.column_span : spec.ops;
    if (pool < spec.ops) {
      throw std::invalid_argument(
          "unique-write needs a column span of at least ops");
    }
    std::vector<std::uint64_t> columns(pool);
    std::iota(columns.begin(), columns.end(), 0);
    std::shuffle(columns.begin(), columns.end(), rng);
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      ops.push_back({OpKind::kWrite, columns[i], detail::draw_value(rng), 0});
    }
  } else if (spec.kind == "pscan") {
    std::uint64_t w = spec.scan_width ? spec.scan_width : spec.ops;
    if (spec.scan_start + w > spec.u0) {
      throw std::invalid_argument("pscan width exceeds the array capacity");
    }
    if (spec.target_version == 0) {
      throw std::invalid_argument("pscan needs a fixed target version");
    }
    for (std::uint64_t i = 0; i < w; ++i) {
      ops.push_back({OpKind::kPersistentRead, spec.scan_start + i, 0,
                     spec.target_version});
    }
  } else if (spec.kind == "pread-rand") {
    if (spec.target_version == 0) {
      throw std::invalid_argument("pread-rand needs a version upper bound");
    }
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      ops.push_back({OpKind::kPersistentRead, rng() % spec.u0, 0,
                     1 + rng() % spec.target_version});
    }
  } else if (spec.kind == "mixed") {
    std::uint64_t versions = 0;
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      std::uint64_t pick = rng() % 4;
      if (pick == 2) {
        ops.push_back({OpKind::kRead, rng() % spec.u0, 0, 0});
      } else if (pick == 3 && versions > 0) {
        ops.push_back({OpKind::kPersistentRead, rng() % spec.u0, 0,
                       1 + rng() % versions});
      } else {
        ops.push_back({OpKind::kWrite, rng() % span, detail::draw_value(rng),
                       0});
        ++versions;
      }
    }
  } else {
    throw std::invalid_argument("unknown workload kind: " + spec.kind);
  }
  return ops;
}

inline void apply_op(PersistentArray& pa, const Op& op) {
  switch (op.kind) {
    case OpKind::kWrite: pa.write(op.column, op.value); break;
    case OpKind::kRead: pa.read(op.column); break;
    case OpKind::kPersistentRead: pa.persistent_read(op.version, op.column);
      break;
  }
}

enum class CheckMode : std::uint8_t { kOff, kFinal, kEveryOp };

inline CheckMode parse_check_mode(const std::string& s) {
  if (s == "off") return CheckMode::kOff;
  if (s == "final") return CheckMode::kFinal;
  if (s == "every-op") return CheckMode::kEveryOp;
  throw std::invalid_argument("unknown check mode: " + s);
}

// Applies the sequence, validating per the mode. Returns the first violation,
// or an ok report; `failed_at`, when given, receives the index of the op
// after which validation failed.
inline InvariantReport run_ops(PersistentArray& pa, const std::vector<Op>& ops,
                               CheckMode check,
                               std::uint64_t* failed_at = nullptr) {
  for (std::uint64_t i = 0; i < ops.size(); ++i) {
    apply_op(pa, ops[i]);
    if (check == CheckMode::kEveryOp) {
      auto rep = pa.validate();
      if (!rep.ok) {
        if (failed_at) *failed_at = i;
        return rep;
      }
    }
  }
  if (check == CheckMode::kFinal) {
    auto rep = pa.validate();
    if (!rep.ok) {
      if (failed_at) *failed_at = ops.empty() ? 0 : ops.size() - 1;
      return rep;
    }
  }
  return InvariantReport{};
}

}  // namespace chronoarray
