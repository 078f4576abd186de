#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "patsim/algorithms.hpp"
#include "patsim/oracle.hpp"
#include "patsim/serialize.hpp"
#include "patsim/simulate.hpp"

namespace {

using namespace patsim;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Algorithm parse_algorithm(const std::string& tag) {
  if (tag == "ring") return Algorithm::Ring;
  if (tag == "bruck" || tag == "bruck-nearest") return Algorithm::BruckNearest;
  if (tag == "bruck-ff" || tag == "bruck-farthest") return Algorithm::BruckFarthest;
  if (tag == "rd" || tag == "recursive-doubling") return Algorithm::RecursiveDoubling;
  if (tag == "pat") return Algorithm::Pat;
  throw UsageError("unknown algorithm \"" + tag + "\" (ring, bruck, bruck-ff, rd, pat)");
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, Parse parse, const char* what) {
  std::vector<T> values;
  for (const std::string& part : split_commas(text)) {
    try {
      values.push_back(parse(part));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " value \"" + part + "\"");
    }
  }
  if (values.empty()) throw UsageError(std::string("empty ") + what + " list");
  return values;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << content;
}

RelativeSchedule generate(Algorithm algo, CollectiveKind kind, int n_ranks, int trees) {
  RelativeSchedule sched;
  switch (algo) {
    case Algorithm::Ring: sched = ring_allgather(n_ranks); break;
    case Algorithm::BruckNearest: sched = bruck_nearest(n_ranks); break;
    case Algorithm::BruckFarthest: sched = bruck_farthest(n_ranks); break;
    case Algorithm::RecursiveDoubling: sched = recursive_doubling(n_ranks); break;
    case Algorithm::Pat: sched = pat_allgather(n_ranks, trees); break;
  }
  if (kind == CollectiveKind::ReduceScatter) sched = mirror_schedule(sched);
  return sched;
}

Topology load_topology(const std::string& path, int n_ranks) {
  if (path.empty()) return uniform_topology(n_ranks);
  return topology_from_json(read_file(path));
}

// ---- schedule ----------------------------------------------------------

struct ScheduleArgs {
  std::string algo;
  std::string op = "allgather";
  int n_ranks = 0;
  int trees = 0;
  std::int64_t buffer_bytes = 0;
  std::int64_t chunk_bytes = 0;
  std::string format = "json";
  int origin = 0;
  std::int64_t bytes_per_rank = 1024;
  std::string output;
};

int cmd_schedule(const ScheduleArgs& args) {
  const Algorithm algo = parse_algorithm(args.algo);
  const CollectiveKind kind =
      args.op == "reducescatter" ? CollectiveKind::ReduceScatter : CollectiveKind::AllGather;
  if (args.op != "allgather" && args.op != "reducescatter") {
    throw UsageError("--op must be allgather or reducescatter");
  }

  int trees = args.trees;
  const bool has_buffer = args.buffer_bytes > 0 || args.chunk_bytes > 0;
  if (algo == Algorithm::Pat) {
    if ((trees > 0) == has_buffer) {
      throw UsageError("pat needs exactly one of --trees or --buffer-bytes with --chunk-bytes");
    }
    if (has_buffer) {
      if (args.buffer_bytes <= 0 || args.chunk_bytes <= 0) {
        throw UsageError("--buffer-bytes and --chunk-bytes must both be positive");
      }
      trees = trees_from_buffer(args.buffer_bytes, args.chunk_bytes, args.n_ranks);
    }
  } else if (trees > 0 || has_buffer) {
    throw UsageError("--trees/--buffer-bytes only apply to --algo pat");
  }

  const RelativeSchedule sched = generate(algo, kind, args.n_ranks, trees);
  if (args.format == "json") {
    write_output(args.output, schedule_to_json(sched));
  } else if (args.format == "dot") {
    write_output(args.output, schedule_to_dot(sched, args.origin));
  } else if (args.format == "trace") {
    if (args.bytes_per_rank < 1) throw UsageError("--bytes-per-rank must be >= 1");
    std::ostringstream trace;
    write_trace_csv(trace, sched, args.bytes_per_rank);
    write_output(args.output, trace.str());
  } else {
    throw UsageError("--format must be json, dot or trace");
  }
  return kExitOk;
}

// ---- verify ------------------------------------------------------------

struct VerifyArgs {
  std::string algo;
  std::string op = "both";
  int n_ranks = 0;
  int trees = 0;
  bool all_trees = false;
  std::string seeds = "0,1,2";
  int elements = 4;
  int buffer_slots = 0;
  std::string from_file;
};

int report_verify(const std::vector<SweepMismatch>& mismatches) {
  if (mismatches.empty()) {
    std::cout << "verify: OK\n";
    return kExitOk;
  }
  for (const SweepMismatch& m : mismatches) std::cout << "FAIL " << describe(m) << "\n";
  std::cout << "verify: FAILED (" << mismatches.size() << " mismatch(es))\n";
  return kExitVerifyFailed;
}

int verify_from_file(const VerifyArgs& args, const std::vector<std::uint64_t>& seeds) {
  const RelativeSchedule sched = schedule_from_json(read_file(args.from_file));
  const std::vector<Violation> violations = validate(sched);
  if (!violations.empty()) {
    for (const Violation& v : violations) {
      std::cout << "violation (round " << v.round_index << "): " << v.message << "\n";
    }
    std::cout << "verify: FAILED (" << violations.size() << " violation(s))\n";
    return kExitVerifyFailed;
  }

  std::vector<SweepMismatch> mismatches;
  for (std::uint64_t seed : seeds) {
    ExecStats stats;
    if (sched.kind == CollectiveKind::AllGather) {
      const auto payload = random_allgather_payload(sched.n_ranks, args.elements, seed);
      const auto result = run_allgather(sched, payload);
      stats = result.stats;
      if (result.outputs != oracle_allgather(payload)) {
        mismatches.push_back({sched.algorithm, sched.kind, sched.n_ranks,
                              sched.params ? sched.params->trees : 0, seed, -1, -1,
                              "output differs from oracle"});
      }
    } else {
      const auto payload = random_reduce_scatter_payload(sched.n_ranks, args.elements, seed);
      const auto result = run_reduce_scatter(sched, payload, ReduceOp::WrappingIntSum);
      stats = result.stats;
      if (result.outputs != oracle_reduce_scatter(payload, ReduceOp::WrappingIntSum)) {
        mismatches.push_back({sched.algorithm, sched.kind, sched.n_ranks,
                              sched.params ? sched.params->trees : 0, seed, -1, -1,
                              "output differs from oracle"});
      }
    }
    if (args.buffer_slots > 0 && stats.peak_intermediate_slots > args.buffer_slots) {
      std::ostringstream detail;
      detail << "peak slots " << stats.peak_intermediate_slots << " exceed bound "
             << args.buffer_slots;
      mismatches.push_back({sched.algorithm, sched.kind, sched.n_ranks,
                            sched.params ? sched.params->trees : 0, seed, -1, -1, detail.str()});
    }
  }
  return report_verify(mismatches);
}

int cmd_verify(const VerifyArgs& args) {
  const auto seeds = parse_list<std::uint64_t>(
      args.seeds, [](const std::string& s) { return std::stoull(s); }, "seed");
  if (!args.from_file.empty()) return verify_from_file(args, seeds);
  if (args.algo.empty() || args.n_ranks < 1) {
    throw UsageError("verify needs --from-file, or --algo and -n");
  }
  if (args.op != "both" && args.op != "allgather" && args.op != "reducescatter") {
    throw UsageError("--op must be allgather, reducescatter or both");
  }

  const Algorithm algo = parse_algorithm(args.algo);
  if (algo == Algorithm::RecursiveDoubling && !is_power_of_two(args.n_ranks)) {
    throw UsageError("NonPowerOfTwo: recursive doubling requires a power-of-two rank count");
  }

  SweepOptions options;
  options.n_min = options.n_max = args.n_ranks;
  options.algorithms = {algo};
  options.seeds = seeds;
  options.elements_per_chunk = args.elements;
  options.check_allgather = args.op != "reducescatter";
  options.check_reduce_scatter = args.op != "allgather";
  options.occupancy_bound = args.buffer_slots;
  options.trees = args.all_trees ? 0 : args.trees;  // 0 expands to every valid T
  options.progress = &std::cout;
  return report_verify(oracle_sweep(options));
}

// ---- cost / sweep ------------------------------------------------------

struct CostArgs {
  std::string algos = "ring,bruck,bruck-ff,rd,pat";
  std::string op = "allgather";
  std::string n_list;
  int n_ranks = 0;
  std::string trees_list;
  int trees = 0;
  std::string bytes_list;
  std::int64_t bytes_per_rank = 1024;
  std::string topology_path;
  std::string output;
};

CollectiveKind parse_cost_kind(const std::string& op) {
  if (op == "allgather") return CollectiveKind::AllGather;
  if (op == "reducescatter") return CollectiveKind::ReduceScatter;
  throw UsageError("--op must be allgather or reducescatter");
}

void cost_rows(std::ostringstream& out, Algorithm algo, CollectiveKind kind, int n,
               const std::vector<int>& trees_list, std::int64_t bytes, const Topology& topo) {
  if (algo == Algorithm::RecursiveDoubling && !is_power_of_two(n)) {
    std::cerr << "note: skipping recursive-doubling for n=" << n << " (not a power of two)\n";
    return;
  }
  std::vector<int> trees{0};
  if (algo == Algorithm::Pat) {
    trees.clear();
    for (int t : trees_list) {
      if (t <= max_trees(n)) trees.push_back(t);
    }
    if (trees.empty()) {
      std::cerr << "note: no valid tree count for pat n=" << n << "\n";
      return;
    }
  }
  for (int t : trees) {
    const RelativeSchedule sched = generate(algo, kind, n, t);
    out << cost_csv_row(schedule_cost(sched, topo, bytes)) << "\n";
  }
}

int cmd_cost(const CostArgs& args, bool is_sweep) {
  const CollectiveKind kind = parse_cost_kind(args.op);
  const auto algos = parse_list<Algorithm>(args.algos, parse_algorithm, "algorithm");

  std::vector<int> n_values;
  if (is_sweep) {
    if (args.n_list.empty()) throw UsageError("sweep needs --n-list");
    n_values =
        parse_list<int>(args.n_list, [](const std::string& s) { return std::stoi(s); }, "n");
  } else {
    if (args.n_ranks < 1) throw UsageError("cost needs -n");
    n_values = {args.n_ranks};
  }

  std::vector<std::int64_t> bytes_values;
  if (is_sweep && !args.bytes_list.empty()) {
    bytes_values = parse_list<std::int64_t>(
        args.bytes_list, [](const std::string& s) { return std::stoll(s); }, "bytes");
  } else {
    bytes_values = {args.bytes_per_rank};
  }

  int max_n = 2;
  for (int n : n_values) {
    if (n < 1) throw UsageError("rank counts must be >= 1");
    max_n = std::max(max_n, n);
  }
  const Topology topo = load_topology(args.topology_path, max_n);

  std::ostringstream out;
  out << cost_csv_header() << "\n";
  for (int n : n_values) {
    // defaults: one pat row per valid tree count for sweep, full aggregation for cost
    std::vector<int> trees_list;
    if (!args.trees_list.empty()) {
      trees_list = parse_list<int>(
          args.trees_list, [](const std::string& s) { return std::stoi(s); }, "trees");
    } else if (args.trees > 0) {
      trees_list = {args.trees};
    } else if (is_sweep) {
      trees_list = valid_tree_counts(n);
    } else {
      trees_list = {max_trees(n)};
    }
    for (std::int64_t bytes : bytes_values) {
      if (bytes < 1) throw UsageError("bytes per rank must be >= 1");
      for (Algorithm algo : algos) {
        cost_rows(out, algo, kind, n, trees_list, bytes, topo);
      }
    }
  }
  write_output(args.output, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schedule generation, verification and cost analysis for all-gather and "
               "reduce-scatter collectives"};
  app.require_subcommand(1);

  ScheduleArgs sched_args;
  CLI::App* sched_cmd = app.add_subcommand("schedule", "Generate a schedule (JSON or DOT)");
  sched_cmd->add_option("--algo", sched_args.algo, "ring | bruck | bruck-ff | rd | pat")
      ->required();
  sched_cmd->add_option("--op", sched_args.op, "allgather | reducescatter");
  sched_cmd->add_option("-n,--ranks", sched_args.n_ranks, "rank count")->required();
  sched_cmd->add_option("--trees", sched_args.trees, "pat tree count (power of two)");
  sched_cmd->add_option("--buffer-bytes", sched_args.buffer_bytes, "intermediate buffer size");
  sched_cmd->add_option("--chunk-bytes", sched_args.chunk_bytes, "chunk size for --buffer-bytes");
  sched_cmd->add_option("--format", sched_args.format, "json | dot | trace");
  sched_cmd->add_option("--origin", sched_args.origin, "origin rank for dot output");
  sched_cmd->add_option("--bytes-per-rank", sched_args.bytes_per_rank,
                        "chunk bytes for trace output");
  sched_cmd->add_option("-o,--output", sched_args.output, "output file (default stdout)");

  VerifyArgs verify_args;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Validate schedules and compare runs against the oracles");
  verify_cmd->add_option("--algo", verify_args.algo, "algorithm to verify");
  verify_cmd->add_option("--op", verify_args.op, "allgather | reducescatter | both");
  verify_cmd->add_option("-n,--ranks", verify_args.n_ranks, "rank count");
  verify_cmd->add_option("--trees", verify_args.trees, "pat tree count");
  verify_cmd->add_flag("--all-t", verify_args.all_trees, "verify every valid tree count");
  verify_cmd->add_option("--seed,--seeds", verify_args.seeds, "comma-separated payload seeds");
  verify_cmd->add_option("--elems", verify_args.elements, "elements per chunk");
  verify_cmd->add_option("--buffer-slots", verify_args.buffer_slots,
                         "also require peak intermediate slots <= this bound");
  verify_cmd->add_option("--from-file", verify_args.from_file, "verify a schedule JSON file");

  CostArgs cost_args;
  CLI::App* cost_cmd = app.add_subcommand("cost", "Alpha-beta cost of schedules (CSV)");
  cost_cmd->add_option("--algos", cost_args.algos, "comma-separated algorithms");
  cost_cmd->add_option("--op", cost_args.op, "allgather | reducescatter");
  cost_cmd->add_option("-n,--ranks", cost_args.n_ranks, "rank count");
  cost_cmd->add_option("--trees", cost_args.trees, "pat tree count (default: full aggregation)");
  cost_cmd->add_option("--bytes-per-rank", cost_args.bytes_per_rank, "chunk bytes per rank");
  cost_cmd->add_option("--topo", cost_args.topology_path,
                       "topology JSON (default: uniform single level)");
  cost_cmd->add_option("-o,--output", cost_args.output, "output file (default stdout)");

  CostArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Cost cross-product over n/bytes/trees (CSV)");
  sweep_cmd->add_option("--algos", sweep_args.algos, "comma-separated algorithms");
  sweep_cmd->add_option("--op", sweep_args.op, "allgather | reducescatter");
  sweep_cmd->add_option("--n-list", sweep_args.n_list, "comma-separated rank counts")->required();
  sweep_cmd->add_option("--trees-list", sweep_args.trees_list,
                        "comma-separated pat tree counts (default: every valid count)");
  sweep_cmd->add_option("--bytes-list", sweep_args.bytes_list,
                        "comma-separated chunk sizes (default: 1024)");
  sweep_cmd->add_option("--topo", sweep_args.topology_path, "topology JSON");
  sweep_cmd->add_option("-o,--output", sweep_args.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (sched_cmd->parsed()) return cmd_schedule(sched_args);
    if (verify_cmd->parsed()) return cmd_verify(verify_args);
    if (cost_cmd->parsed()) return cmd_cost(cost_args, false);
    if (sweep_cmd->parsed()) return cmd_cost(sweep_args, true);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ScheduleError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const TopologyError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const SimulationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitVerifyFailed;
  }
  return kExitUsage;
}
