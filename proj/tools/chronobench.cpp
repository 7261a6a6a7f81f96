// Experiment harness for the persistent array: builds workloads, runs them
// against the structure, replays the memory traces through the cache
// simulators, and emits CSV.
//
// Two modes:
//   --experiment <name>   canned experiment drivers (see --help for names);
//                         workload flags refine their defaults.
//   --workload <kind>     free-form run: applies the generated sequence to
//                         one structure, optionally replaying/persisting its
//                         write log, checking invariants, and simulating the
//                         trace.
// Exit code 0 iff every in-run assertion (invariant checks, argument
// validation) passes.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chronoarray/experiments.hpp"

namespace ca = chronoarray;

namespace {

int run_experiment_mode(const ca::ExperimentConfig& cfg,
                        const std::string& csv_path) {
  auto rows = ca::run_experiment(cfg);
  if (csv_path.empty()) {
    ca::emit_csv(rows, std::cout);
  } else {
    ca::write_csv(rows, csv_path);
    std::cerr << "wrote " << rows.size() << " rows to " << csv_path << "\n";
  }
  return 0;
}

int run_workload_mode(ca::ExperimentConfig cfg, const std::string& csv_path,
                      const std::string& log_path) {
  std::uint64_t u0 = cfg.workload.u0 ? cfg.workload.u0 : 2;
  ca::PersistentArray pa(u0, cfg.epsilon);
  if (!log_path.empty() && std::filesystem::exists(log_path)) {
    pa = ca::PersistentArray::load_log(log_path, u0, cfg.epsilon);
    std::cerr << "replayed " << pa.version_count() << " writes from "
              << log_path << "\n";
  }

  ca::WorkloadSpec spec = cfg.workload;
  spec.ops = spec.ops ? spec.ops : 1000;
  spec.u0 = pa.capacity();
  if (spec.target_version == 0 &&
      (spec.kind == "pscan" || spec.kind == "pread-rand")) {
    if (pa.version_count() == 0) {
      throw std::invalid_argument(
          spec.kind + " needs history: replay a log or write first");
    }
    spec.target_version = spec.kind == "pscan"
                              ? std::max<std::uint64_t>(1,
                                    pa.version_count() / 2)
                              : pa.version_count();
  }
  auto ops = ca::gen_workload(spec);

  pa.take_trace();  // construction/replay traffic is not the workload's
  ca::TraceSink sink(ca::resolve_sweep(cfg), cfg.policy);
  ca::detail::run_streamed(pa, ops, cfg.check, &sink);

  if (!log_path.empty()) pa.save_log(log_path);

  std::vector<ca::ExperimentRow> rows;
  std::string eps = ca::format_fraction(cfg.epsilon);
  std::string extra = "ops=" + std::to_string(ops.size()) +
                      ";rollovers=" + std::to_string(pa.stats().rollovers) +
                      ";rebuilds=" + std::to_string(pa.stats().rebuilds);
  for (const auto& cell : sink.finish()) {
    ca::detail::append_cell_rows(rows, "workload:" + spec.kind, pa.capacity(),
                                 pa.version_count(), eps, cfg.policy, cell,
                                 pa.space_report().total_words, extra);
  }
  if (csv_path.empty()) {
    ca::emit_csv(rows, std::cout);
  } else {
    ca::write_csv(rows, csv_path);
  }
  std::cerr << "ok: U=" << pa.capacity() << " V=" << pa.version_count()
            << " rollovers=" << pa.stats().rollovers
            << " rebuilds=" << pa.stats().rebuilds << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chronobench: persistent-array workload and cache-cost experiments"};

  std::string experiment, workload = "rand-write", policy = "lru";
  std::string epsilon = "1/2", check = "off", csv_path, log_path;
  std::uint64_t ops = 0, u0 = 0, seed = 0;
  std::vector<std::uint64_t> blocks{16, 64, 256};
  std::vector<std::uint64_t> memories;
  bool timings = false;

  app.add_option("--experiment", experiment,
                 "experiment driver: " + [] {
                   std::string all;
                   for (const auto& n : ca::experiment_names()) {
                     if (!all.empty()) all += "|";
                     all += n;
                   }
                   return all;
                 }());
  app.add_option("--workload", workload,
                 "workload kind: seq-write|rand-write|unique-write|pscan|"
                 "pread-rand|mixed");
  app.add_option("--ops", ops, "operation count (0 = kind/experiment default)");
  app.add_option("--u0", u0, "initial capacity, power of two >= 2");
  app.add_option("--epsilon", epsilon, "layout split, p/q or decimal in (0,1)");
  app.add_option("--block", blocks, "block sizes B in words")
      ->delimiter(',');
  app.add_option("--memory", memories,
                 "cache sizes M in words (default 64*B per block)")
      ->delimiter(',');
  app.add_option("--policy", policy, "replacement policy: lru|opt");
  app.add_option("--seed", seed, "workload RNG seed");
  app.add_option("--csv", csv_path, "CSV output path (default: stdout)");
  app.add_option("--check-invariants", check,
                 "structural validation: off|final|every-op");
  app.add_option("--log", log_path,
                 "write-log path: replayed if it exists, then rewritten "
                 "(workload mode only)");
  app.add_flag("--timings", timings,
               "fill wallclock_ms (breaks byte-identical reruns)");

  CLI11_PARSE(app, argc, argv);

  try {
    ca::ExperimentConfig cfg;
    cfg.name = experiment;
    cfg.workload.kind = workload;
    cfg.workload.ops = ops;
    cfg.workload.u0 = u0;
    cfg.workload.seed = seed;
    cfg.blocks = blocks;
    cfg.memories = memories;
    cfg.policy = ca::parse_policy(policy);
    cfg.epsilon = ca::parse_fraction(epsilon);
    cfg.check = ca::parse_check_mode(check);
    cfg.timings = timings;

    if (!experiment.empty()) {
      if (!log_path.empty()) {
        throw std::invalid_argument(
            "--log applies to workload mode; experiments manage their own "
            "structures");
      }
      return run_experiment_mode(cfg, csv_path);
    }
    return run_workload_mode(cfg, csv_path, log_path);
  } catch (const std::exception& e) {
    std::cerr << "chronobench: " << e.what() << "\n";
    return 1;
  }
}
