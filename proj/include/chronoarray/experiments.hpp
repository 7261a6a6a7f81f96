#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "chronoarray/cache_sim.hpp"
#include "chronoarray/persistent_array.hpp"
#include "chronoarray/workload.hpp"

namespace chronoarray {

// One output cell of an experiment. Census rows (structural counts with no
// cache simulation) use policy "none", op_class "census", M = 0.
struct ExperimentRow {
  std::string experiment;
  std::uint64_t u = 0;
  std::uint64_t v = 0;
  std::string epsilon;
  std::uint64_t block = 0;
  std::uint64_t memory = 0;
  std::string policy;
  std::string op_class;
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
  std::uint64_t arena_words = 0;
  std::string extra;
  std::uint64_t wallclock_ms = 0;
};

struct ExperimentConfig {
  std::string name;
  WorkloadSpec workload;                      // zero fields = experiment default
  std::vector<std::uint64_t> blocks{16, 64, 256};
  std::vector<std::uint64_t> memories;        // empty = 64*B per block
  Policy policy = Policy::kLru;
  Fraction epsilon{1, 2};
  CheckMode check = CheckMode::kOff;
  bool timings = false;                       // fills wallclock_ms; breaks
                                              // byte-identical reruns
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "exp_read_scan",    "exp_pscan",        "exp_layout_blocks",
      "exp_write_random", "exp_write_unique", "exp_space",
      "exp_rebuild_counts", "exp_roll_cost"};
  return names;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline auto row_key(const ExperimentRow& r) {
  return std::tie(r.experiment, r.u, r.block, r.memory, r.policy, r.op_class,
                  r.v, r.extra, r.accesses, r.misses, r.arena_words);
}

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace detail

inline void emit_csv(std::vector<ExperimentRow> rows, std::ostream& os) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return detail::row_key(a) < detail::row_key(b);
  });
  os << "experiment,U,V,epsilon,B,M,policy,op_class,accesses,misses,"
        "arena_words,extra,wallclock_ms\n";
  for (const auto& r : rows) {
    os << detail::csv_field(r.experiment) << ',' << r.u << ',' << r.v << ','
       << detail::csv_field(r.epsilon) << ',' << r.block << ',' << r.memory
       << ',' << detail::csv_field(r.policy) << ','
       << detail::csv_field(r.op_class) << ',' << r.accesses << ','
       << r.misses << ',' << r.arena_words << ','
       << detail::csv_field(r.extra) << ',' << r.wallclock_ms << '\n';
  }
}

inline void write_csv(const std::vector<ExperimentRow>& rows,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open csv for writing: " + path);
  emit_csv(rows, out);
}

// ---------------------------------------------------------------------------
// Structural censuses

// Block-size exponent of the locality bounds: (1 - epsilon) / log2 3.
inline double locality_exponent(const Fraction& eps) {
  return (1.0 - static_cast<double>(eps.num) / static_cast<double>(eps.den)) /
         std::log2(3.0);
}

struct LayoutCensusPoint {
  std::uint32_t height = 0;
  std::uint64_t blocks = 0;   // distinct block-of-slots count
  double bound_units = 0.0;   // 2^h / B^omega + 1
  double fit = 0.0;           // blocks / bound_units
};

// Distinct `block_slots`-sized blocks covering the root-anchored complete
// binary subtree of each height in the reserved layout for capacity `u`.
inline std::vector<LayoutCensusPoint> layout_block_census(
    std::uint64_t u, Fraction eps, std::uint64_t block_slots) {
  if (u < 2 || !std::has_single_bit(u)) {
    throw std::invalid_argument("capacity must be a power of two >= 2");
  }
  auto levels = static_cast<std::uint32_t>(std::countr_zero(u)) + 1;
  LayoutParams params(eps, levels);
  double b_omega = std::pow(static_cast<double>(block_slots),
                            locality_exponent(eps));
  std::vector<LayoutCensusPoint> out;
  for (std::uint32_t h = 0; h < levels; ++h) {
    auto ranks = binary_prefix_ranks(params, h);
    std::uint64_t blocks = distinct_blocks(ranks, block_slots);
    double bound = static_cast<double>(std::uint64_t{1} << h) / b_omega + 1.0;
    out.push_back({h, blocks, bound, static_cast<double>(blocks) / bound});
  }
  return out;
}

namespace detail {

// Root-to-leaf walk for (column, v), collecting every node on the way.
// Mirrors the traced navigation exactly but through peeks.
inline void collect_version_path(const PersistentArray& pa, std::uint64_t v,
                                 std::uint64_t column,
                                 std::vector<Addr>& out) {
  const Arena& a = pa.arena();
  Addr cur = a.peek(globals::kDirectory + (v - 1) / pa.capacity());
  std::uint64_t x_lo = 0;
  auto h = static_cast<std::uint32_t>(a.peek(cur + kHeightOff));
  out.push_back(cur);
  while (h > 0) {
    std::uint64_t half = std::uint64_t{1} << (h - 1);
    bool right = column >= x_lo + half;
    Addr side = a.peek(cur + (right ? kRightOff : kLeftOff));
    if (v <= a.peek(side + kTHiOff)) {
      cur = side;
    } else {
      cur = a.peek(cur + kUpperOff);
    }
    out.push_back(cur);
    if (right) x_lo += half;
    --h;
  }
}

}  // namespace detail

// Deduped addresses of the leaves answering columns [lo, lo+w) at version v,
// together with all their ancestors.
inline std::vector<Addr> query_window_nodes(const PersistentArray& pa,
                                            std::uint64_t v, std::uint64_t lo,
                                            std::uint64_t w) {
  if (v == 0 || v > pa.version_count()) {
    throw std::out_of_range("window census: no such version");
  }
  if (w == 0 || lo + w > pa.capacity()) {
    throw std::invalid_argument("window census: columns out of range");
  }
  std::vector<Addr> nodes;
  for (std::uint64_t c = lo; c < lo + w; ++c) {
    detail::collect_version_path(pa, v, c, nodes);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// Distinct B-word blocks covering whole node records.
inline std::uint64_t node_block_count(const std::vector<Addr>& nodes,
                                      std::uint64_t block_words) {
  if (block_words == 0) throw std::invalid_argument("block size must be > 0");
  std::unordered_set<std::uint64_t> blocks;
  for (Addr a : nodes) {
    for (std::uint64_t b = a / block_words;
         b <= (a + kNodeWords - 1) / block_words; ++b) {
      blocks.insert(b);
    }
  }
  return blocks.size();
}

// ---------------------------------------------------------------------------
// Trace plumbing

// Fans one access stream out to every cache of a sweep. LRU caches run
// online so traces can be drained in chunks; OPT needs the full trace.
class TraceSink {
 public:
  struct Cell {
    std::uint64_t block = 0;
    std::uint64_t memory = 0;
    CacheStats stats;
  };

  TraceSink(std::vector<std::pair<std::uint64_t, std::uint64_t>> sweep,
            Policy policy)
      : sweep_(std::move(sweep)), policy_(policy) {
    if (policy_ == Policy::kLru) {
      caches_.reserve(sweep_.size());
      for (auto [b, m] : sweep_) {
        caches_.emplace_back(CacheConfig{m, b, Policy::kLru});
      }
    }
  }

  void drain(AccessTrace&& chunk) {
    if (policy_ == Policy::kLru) {
      for (auto& c : caches_) c.consume(chunk);
    } else {
      full_.insert(full_.end(), chunk.begin(), chunk.end());
    }
  }

  std::vector<Cell> finish() {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < sweep_.size(); ++i) {
      auto [b, m] = sweep_[i];
      if (policy_ == Policy::kLru) {
        out.push_back({b, m, caches_[i].stats()});
      } else {
        out.push_back({b, m, sim_opt(full_, CacheConfig{m, b, Policy::kOpt})});
      }
    }
    return out;
  }

 private:
  std::vector<std::pair<std::uint64_t, std::uint64_t>> sweep_;
  Policy policy_;
  std::vector<LruCache> caches_;
  AccessTrace full_;
};

inline std::vector<std::pair<std::uint64_t, std::uint64_t>> resolve_sweep(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint64_t b : cfg.blocks) {
    if (cfg.memories.empty()) {
      out.push_back({b, 64 * b});
    } else {
      for (std::uint64_t m : cfg.memories) {
        if (m >= b) out.push_back({b, m});
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) {
    throw std::invalid_argument("cache sweep is empty (every M below B?)");
  }
  return out;
}

namespace detail {

[[noreturn]] inline void throw_violation(const InvariantReport& rep,
                                         std::uint64_t op_index) {
  throw std::runtime_error("invariant violation after operation " +
                           std::to_string(op_index) + ": " + rep.message +
                           " (node " + std::to_string(rep.node) + ")");
}

// Applies ops under the given check mode, draining the trace into `sink`
// (or discarding it when sink is null) every `chunk` operations.
inline void run_streamed(PersistentArray& pa, const std::vector<Op>& ops,
                         CheckMode check, TraceSink* sink,
                         std::uint64_t chunk = 8192) {
  for (std::uint64_t i = 0; i < ops.size(); ++i) {
    apply_op(pa, ops[i]);
    if (check == CheckMode::kEveryOp) {
      auto rep = pa.validate();
      if (!rep.ok) throw_violation(rep, i);
    }
    if ((i + 1) % chunk == 0) {
      auto t = pa.take_trace();
      if (sink) sink->drain(std::move(t));
    }
  }
  auto t = pa.take_trace();
  if (sink) sink->drain(std::move(t));
  if (check == CheckMode::kFinal) {
    auto rep = pa.validate();
    if (!rep.ok) throw_violation(rep, ops.empty() ? 0 : ops.size() - 1);
  }
}

inline std::uint64_t pick(std::uint64_t value, std::uint64_t fallback) {
  return value ? value : fallback;
}

// Five rows per simulated cell: the four op classes plus their union.
inline void append_cell_rows(std::vector<ExperimentRow>& rows,
                             const std::string& name, std::uint64_t u,
                             std::uint64_t v, const std::string& eps,
                             Policy policy, const TraceSink::Cell& cell,
                             std::uint64_t arena_words,
                             const std::string& extra) {
  ExperimentRow base{name,  u,
                     v,     eps,
                     cell.block, cell.memory,
                     policy_name(policy), "all",
                     cell.stats.accesses, cell.stats.misses,
                     arena_words, extra,
                     0};
  rows.push_back(base);
  for (int c = 0; c < 4; ++c) {
    auto cls = static_cast<OpClass>(c);
    ExperimentRow r = base;
    r.op_class = op_class_name(cls);
    r.accesses = cell.stats.accesses_for(cls);
    r.misses = cell.stats.misses_for(cls);
    rows.push_back(r);
  }
}

inline ExperimentRow census_row(const std::string& name, std::uint64_t u,
                                std::uint64_t v, const std::string& eps,
                                std::uint64_t block, std::uint64_t arena_words,
                                std::string extra) {
  return ExperimentRow{name, u,      v, eps,         block, 0, "none",
                       "census", 0,  0, arena_words, std::move(extra), 0};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

// Sequential present-time scan: write every cell once, then read all of
// them in column order and simulate the read-class traffic.
inline std::vector<ExperimentRow> exp_read_scan(const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 4096);
  std::uint64_t ops = detail::pick(cfg.workload.ops, u0);
  PersistentArray pa(u0, cfg.epsilon);
  WorkloadSpec setup{"seq-write", ops, u0, cfg.workload.seed, 0, 0, 0, 0};
  detail::run_streamed(pa, gen_workload(setup), cfg.check, nullptr);
  pa.take_trace();

  TraceSink sink(resolve_sweep(cfg), cfg.policy);
  for (std::uint64_t i = 0; i < u0; ++i) pa.read(i);
  sink.drain(pa.take_trace());

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  for (const auto& cell : sink.finish()) {
    detail::append_cell_rows(rows, "exp_read_scan", pa.capacity(),
                             pa.version_count(), eps, cfg.policy, cell,
                             pa.space_report().total_words, "");
  }
  return rows;
}

// Same-version scan over a column window, plus the census of blocks covering
// the queried leaves and their ancestors.
inline std::vector<ExperimentRow> exp_pscan(const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 4096);
  std::uint64_t setup_ops = detail::pick(cfg.workload.ops, 8 * u0);
  std::uint64_t span = detail::pick(cfg.workload.column_span, u0);
  PersistentArray pa(u0, cfg.epsilon);
  WorkloadSpec setup{"rand-write", setup_ops, u0, cfg.workload.seed,
                     0,            0,         0,  span};
  detail::run_streamed(pa, gen_workload(setup), cfg.check, nullptr);
  pa.take_trace();

  std::uint64_t v = detail::pick(cfg.workload.target_version,
                                 std::max<std::uint64_t>(1,
                                     pa.version_count() / 2));
  std::uint64_t w = detail::pick(cfg.workload.scan_width,
                                 std::min<std::uint64_t>(u0, 4096));
  std::uint64_t lo = cfg.workload.scan_start;
  WorkloadSpec scan{"pscan", w, pa.capacity(), cfg.workload.seed, w, lo, v, 0};
  auto scan_ops = gen_workload(scan);

  TraceSink sink(resolve_sweep(cfg), cfg.policy);
  detail::run_streamed(pa, scan_ops, cfg.check, &sink);

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  std::uint64_t arena_words = pa.space_report().total_words;
  std::string tag = "w=" + std::to_string(w) + ";v=" + std::to_string(v);
  for (const auto& cell : sink.finish()) {
    detail::append_cell_rows(rows, "exp_pscan", pa.capacity(),
                             pa.version_count(), eps, cfg.policy, cell,
                             arena_words, tag);
  }

  auto nodes = query_window_nodes(pa, v, lo, w);
  double omega = locality_exponent(cfg.epsilon);
  for (std::uint64_t b : cfg.blocks) {
    std::uint64_t blocks = node_block_count(nodes, b);
    double units =
        static_cast<double>(w) / std::pow(static_cast<double>(b), omega) +
        std::log2(static_cast<double>(pa.capacity())) /
            std::log2(static_cast<double>(b)) +
        1.0;
    rows.push_back(detail::census_row(
        "exp_pscan", pa.capacity(), pa.version_count(), eps, b, arena_words,
        tag + ";nodes=" + std::to_string(nodes.size()) +
            ";blocks=" + std::to_string(blocks) +
            ";bound_units=" + detail::fmt_double(units) +
            ";fit=" + detail::fmt_double(blocks / units)));
  }
  return rows;
}

// Static layout census: distinct blocks (in node-slots) covering the
// root-anchored complete binary subtree of every height.
inline std::vector<ExperimentRow> exp_layout_blocks(
    const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 256);
  std::string eps = format_fraction(cfg.epsilon);
  std::vector<ExperimentRow> rows;
  for (std::uint64_t b : cfg.blocks) {
    auto census = layout_block_census(u0, cfg.epsilon, b);
    double worst = 0.0;
    for (const auto& pt : census) {
      worst = std::max(worst, pt.fit);
      rows.push_back(detail::census_row(
          "exp_layout_blocks", u0, 0, eps, b, 0,
          "h=" + std::to_string(pt.height) +
              ";blocks=" + std::to_string(pt.blocks) +
              ";bound_units=" + detail::fmt_double(pt.bound_units) +
              ";fit=" + detail::fmt_double(pt.fit)));
    }
    rows.push_back(detail::census_row("exp_layout_blocks", u0, 0, eps, b, 0,
                                      "C=" + detail::fmt_double(worst)));
  }
  return rows;
}

namespace detail {

inline std::vector<ExperimentRow> write_experiment(const ExperimentConfig& cfg,
                                                   const std::string& name,
                                                   const WorkloadSpec& spec,
                                                   std::uint64_t u0) {
  PersistentArray pa(u0, cfg.epsilon);
  pa.take_trace();  // construction is not part of the measured sequence
  auto ops = gen_workload(spec);
  TraceSink sink(resolve_sweep(cfg), cfg.policy);
  run_streamed(pa, ops, cfg.check, &sink);

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  std::uint64_t arena_words = pa.space_report().total_words;
  for (const auto& cell : sink.finish()) {
    std::uint64_t wm =
        cell.stats.misses_for(OpClass::kWrite) +
        cell.stats.misses_for(OpClass::kMaintenance);
    std::string extra =
        "ops=" + std::to_string(ops.size()) +
        ";wm_misses_per_op=" + fmt_double(static_cast<double>(wm) /
                                          static_cast<double>(ops.size())) +
        ";rollovers=" + std::to_string(pa.stats().rollovers) +
        ";rebuilds=" + std::to_string(pa.stats().rebuilds);
    append_cell_rows(rows, name, pa.capacity(), pa.version_count(), eps,
                     cfg.policy, cell, arena_words, extra);
  }
  return rows;
}

}  // namespace detail

// Random-column write stream; the amortized write cost experiment.
inline std::vector<ExperimentRow> exp_write_random(
    const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 4096);
  std::uint64_t ops = detail::pick(cfg.workload.ops, 100000);
  WorkloadSpec spec{"rand-write", ops, u0, cfg.workload.seed, 0, 0, 0,
                    detail::pick(cfg.workload.column_span, u0)};
  return detail::write_experiment(cfg, "exp_write_random", spec, u0);
}

// Each column written exactly once, in shuffled order.
inline std::vector<ExperimentRow> exp_write_unique(
    const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 4096);
  std::uint64_t ops = detail::pick(cfg.workload.ops, u0);
  WorkloadSpec spec{"unique-write", ops, u0, cfg.workload.seed, 0, 0, 0,
                    cfg.workload.column_span};
  return detail::write_experiment(cfg, "exp_write_unique", spec, u0);
}

// Arena footprint along a version sweep, with the two-term linear fit.
inline std::vector<ExperimentRow> exp_space(const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 256);
  std::uint64_t target = detail::pick(cfg.workload.ops,
                                      std::uint64_t{1} << 17);
  std::uint64_t span = detail::pick(cfg.workload.column_span, u0);
  PersistentArray pa(u0, cfg.epsilon);
  WorkloadSpec spec{"rand-write", target, u0, cfg.workload.seed, 0, 0, 0,
                    span};
  auto ops = gen_workload(spec);

  std::vector<std::uint64_t> checkpoints;
  for (std::uint64_t d = 128; d >= 1; d /= 2) {
    std::uint64_t v = target / d;
    if (v >= 1 && (checkpoints.empty() || checkpoints.back() != v)) {
      checkpoints.push_back(v);
    }
  }

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  double log_u = std::log2(static_cast<double>(u0));
  std::vector<std::pair<double, double>> samples;  // (V*log2 U, words)
  std::size_t next_cp = 0;
  std::uint64_t node_max = 0;
  for (std::uint64_t i = 0; i < ops.size(); ++i) {
    apply_op(pa, ops[i]);
    if (cfg.check == CheckMode::kEveryOp) {
      auto rep = pa.validate();
      if (!rep.ok) detail::throw_violation(rep, i);
    }
    if ((i + 1) % 4096 == 0) pa.take_trace();
    if (next_cp < checkpoints.size() && i + 1 == checkpoints[next_cp]) {
      std::uint64_t words = pa.space_report().total_words;
      for (std::uint64_t n : pa.stats().bottom_tree_nodes) {
        node_max = std::max(node_max, n);
      }
      samples.push_back({static_cast<double>(pa.version_count()) * log_u,
                         static_cast<double>(words)});
      rows.push_back(detail::census_row(
          "exp_space", pa.capacity(), pa.version_count(), eps, 0, words,
          "bottom_trees=" + std::to_string(pa.stats().bottom_tree_nodes.size()) +
              ";bottom_nodes_max=" + std::to_string(node_max)));
      ++next_cp;
    }
  }
  pa.take_trace();
  if (cfg.check == CheckMode::kFinal) {
    auto rep = pa.validate();
    if (!rep.ok) detail::throw_violation(rep, ops.size() - 1);
  }

  // Least-squares line words ~ intercept + slope * (V log2 U); the intercept
  // is charged to the U^{log2 3} tree term, the slope to the history term.
  double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : samples) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  double slope = denom == 0 ? 0 : (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double tree_term = std::pow(static_cast<double>(u0), std::log2(3.0)) *
                     static_cast<double>(kNodeWords);
  double c1 = std::max(0.0, intercept) / tree_term;
  double c2 = std::max(0.0, slope);
  rows.push_back(detail::census_row(
      "exp_space", pa.capacity(), pa.version_count(), eps, 0,
      pa.space_report().total_words,
      "c1=" + detail::fmt_double(c1) + ";c2=" + detail::fmt_double(c2) +
          ";node_cap=" + std::to_string(8 * u0 * (1 + static_cast<std::uint64_t>(
                                                      log_u))) +
          ";node_max=" + std::to_string(node_max)));
  return rows;
}

// Third-child counts per height against the amortized reconfiguration bound.
inline std::vector<ExperimentRow> exp_rebuild_counts(
    const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 2);
  std::uint64_t ops = detail::pick(cfg.workload.ops, 20000);
  std::uint64_t span = detail::pick(cfg.workload.column_span, 2048);
  PersistentArray pa(u0, cfg.epsilon);
  WorkloadSpec spec{"rand-write", ops, u0, cfg.workload.seed, 0, 0, 0, span};
  detail::run_streamed(pa, gen_workload(spec), cfg.check, nullptr);
  pa.take_trace();

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  double log_u = std::log2(static_cast<double>(pa.capacity()));
  std::uint64_t arena_words = pa.space_report().total_words;
  std::uint64_t violations = 0;
  const auto& hist = pa.stats().third_child_by_height;
  for (std::uint64_t h = 0; h < hist.size(); ++h) {
    double bound = 4.0 * static_cast<double>(ops) /
                       static_cast<double>(std::uint64_t{1} << h) +
                   log_u;
    if (static_cast<double>(hist[h]) > bound) ++violations;
    rows.push_back(detail::census_row(
        "exp_rebuild_counts", pa.capacity(), pa.version_count(), eps, 0,
        arena_words,
        "h=" + std::to_string(h) + ";count=" + std::to_string(hist[h]) +
            ";bound=" + detail::fmt_double(bound)));
  }
  rows.push_back(detail::census_row(
      "exp_rebuild_counts", pa.capacity(), pa.version_count(), eps, 0,
      arena_words,
      "violations=" + std::to_string(violations) +
          ";rebuilds=" + std::to_string(pa.stats().rebuilds) +
          ";rollovers=" + std::to_string(pa.stats().rollovers)));
  return rows;
}

// Write stream sized to trigger many rollovers; reports the maintenance
// share of the traffic.
inline std::vector<ExperimentRow> exp_roll_cost(const ExperimentConfig& cfg) {
  std::uint64_t u0 = detail::pick(cfg.workload.u0, 256);
  std::uint64_t ops = detail::pick(cfg.workload.ops, 16 * u0);
  PersistentArray pa(u0, cfg.epsilon);
  pa.take_trace();
  WorkloadSpec spec{"rand-write", ops, u0, cfg.workload.seed, 0, 0, 0,
                    detail::pick(cfg.workload.column_span, u0)};
  TraceSink sink(resolve_sweep(cfg), cfg.policy);
  detail::run_streamed(pa, gen_workload(spec), cfg.check, &sink);

  std::vector<ExperimentRow> rows;
  std::string eps = format_fraction(cfg.epsilon);
  std::uint64_t arena_words = pa.space_report().total_words;
  std::uint64_t rolls = std::max<std::uint64_t>(1, pa.stats().rollovers);
  for (const auto& cell : sink.finish()) {
    std::string extra =
        "rollovers=" + std::to_string(pa.stats().rollovers) +
        ";rebuilds=" + std::to_string(pa.stats().rebuilds) +
        ";maint_misses_per_roll=" +
        detail::fmt_double(
            static_cast<double>(cell.stats.misses_for(OpClass::kMaintenance)) /
            static_cast<double>(rolls));
    detail::append_cell_rows(rows, "exp_roll_cost", pa.capacity(),
                             pa.version_count(), eps, cfg.policy, cell,
                             arena_words, extra);
  }
  return rows;
}

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  std::vector<ExperimentRow> rows;
  if (cfg.name == "exp_read_scan") rows = exp_read_scan(cfg);
  else if (cfg.name == "exp_pscan") rows = exp_pscan(cfg);
  else if (cfg.name == "exp_layout_blocks") rows = exp_layout_blocks(cfg);
  else if (cfg.name == "exp_write_random") rows = exp_write_random(cfg);
  else if (cfg.name == "exp_write_unique") rows = exp_write_unique(cfg);
  else if (cfg.name == "exp_space") rows = exp_space(cfg);
  else if (cfg.name == "exp_rebuild_counts") rows = exp_rebuild_counts(cfg);
  else if (cfg.name == "exp_roll_cost") rows = exp_roll_cost(cfg);
  else throw std::invalid_argument("unknown experiment: " + cfg.name);
  if (cfg.timings) {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    for (auto& r : rows) r.wallclock_ms = static_cast<std::uint64_t>(ms);
  }
  return rows;
}

}  // namespace chronoarray
