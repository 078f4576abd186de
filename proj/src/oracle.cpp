#include "patsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "patsim/algorithms.hpp"

namespace patsim {

namespace {

template <class T>
std::vector<std::vector<T>> oracle_allgather_impl(const Payload<T>& payload) {
  const int n = payload.n_ranks;
  std::vector<T> gathered;
  gathered.reserve(static_cast<size_t>(n) * payload.elements_per_chunk);
  for (int r = 0; r < n; r++) {
    gathered.insert(gathered.end(), payload.chunks[r].begin(), payload.chunks[r].end());
  }
  return std::vector<std::vector<T>>(n, gathered);
}

template <class T, class Fold>
std::vector<std::vector<T>> oracle_reduce_scatter_impl(const Payload<T>& payload, Fold fold) {
  const int n = payload.n_ranks;
  std::vector<std::vector<T>> outputs;
  outputs.reserve(n);
  for (int dest = 0; dest < n; dest++) {
    std::vector<T> sum = payload.chunks[dest];  // sender 0's contribution
    for (int sender = 1; sender < n; sender++) {
      const std::vector<T>& chunk = payload.chunks[static_cast<size_t>(sender) * n + dest];
      for (size_t i = 0; i < sum.size(); i++) sum[i] = fold(sum[i], chunk[i]);
    }
    outputs.push_back(std::move(sum));
  }
  return outputs;
}

std::int64_t next_i64(std::mt19937_64& gen) { return static_cast<std::int64_t>(gen()); }

double next_unit_f64(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
}

template <class T, class Next>
Payload<T> random_payload(int n_chunks, int n_ranks, int elements, std::uint64_t seed,
                          Next next) {
  Payload<T> payload;
  payload.n_ranks = n_ranks;
  payload.elements_per_chunk = elements;
  payload.chunks.reserve(n_chunks);
  std::mt19937_64 gen(seed);
  for (int c = 0; c < n_chunks; c++) {
    std::vector<T> chunk(elements);
    for (T& v : chunk) v = next(gen);
    payload.chunks.push_back(std::move(chunk));
  }
  return payload;
}

}  // namespace

template <class T>
std::vector<std::vector<T>> oracle_allgather(const Payload<T>& payload) {
  return oracle_allgather_impl(payload);
}
template std::vector<std::vector<std::int64_t>> oracle_allgather(const Payload<std::int64_t>&);
template std::vector<std::vector<double>> oracle_allgather(const Payload<double>&);

std::vector<std::vector<std::int64_t>> oracle_reduce_scatter(const Payload<std::int64_t>& payload,
                                                             ReduceOp op) {
  if (op != ReduceOp::WrappingIntSum) {
    throw UnsupportedOpError("UnsupportedOp: integer payloads reduce with WrappingIntSum");
  }
  return oracle_reduce_scatter_impl(payload, [](std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) +
                                     static_cast<std::uint64_t>(b));
  });
}

std::vector<std::vector<double>> oracle_reduce_scatter(const Payload<double>& payload,
                                                       ReduceOp op) {
  if (op != ReduceOp::FloatSum) {
    throw UnsupportedOpError("UnsupportedOp: float payloads reduce with FloatSum");
  }
  return oracle_reduce_scatter_impl(payload, [](double a, double b) { return a + b; });
}

Payload<std::int64_t> random_allgather_payload(int n_ranks, int elements_per_chunk,
                                               std::uint64_t seed) {
  return random_payload<std::int64_t>(n_ranks, n_ranks, elements_per_chunk, seed, next_i64);
}

Payload<std::int64_t> random_reduce_scatter_payload(int n_ranks, int elements_per_chunk,
                                                    std::uint64_t seed) {
  return random_payload<std::int64_t>(n_ranks * n_ranks, n_ranks, elements_per_chunk, seed,
                                      next_i64);
}

Payload<double> random_allgather_payload_f64(int n_ranks, int elements_per_chunk,
                                             std::uint64_t seed) {
  return random_payload<double>(n_ranks, n_ranks, elements_per_chunk, seed, next_unit_f64);
}

Payload<double> random_reduce_scatter_payload_f64(int n_ranks, int elements_per_chunk,
                                                  std::uint64_t seed) {
  return random_payload<double>(n_ranks * n_ranks, n_ranks, elements_per_chunk, seed,
                                next_unit_f64);
}

std::string describe(const SweepMismatch& m) {
  std::ostringstream out;
  out << to_string(m.kind) << " " << to_string(m.algorithm) << " n=" << m.n_ranks;
  if (m.trees > 0) out << " T=" << m.trees;
  out << " seed=" << m.seed;
  if (m.rank >= 0) out << " rank=" << m.rank;
  if (m.chunk >= 0) out << " chunk=" << m.chunk;
  out << ": " << m.detail;
  return out.str();
}

namespace {

bool float_close(double a, double b, double rel) {
  if (a == b) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel * scale;
}

struct SweepContext {
  const SweepOptions& options;
  std::vector<SweepMismatch>& mismatches;

  template <class T, class Close>
  void compare(const RelativeSchedule& sched, std::uint64_t seed,
               const std::vector<std::vector<T>>& got, const std::vector<std::vector<T>>& want,
               int chunk_elems, Close close) {
    for (int rank = 0; rank < sched.n_ranks; rank++) {
      for (size_t i = 0; i < want[rank].size(); i++) {
        if (!close(got[rank][i], want[rank][i])) {
          SweepMismatch m;
          m.algorithm = sched.algorithm;
          m.kind = sched.kind;
          m.n_ranks = sched.n_ranks;
          m.trees = sched.params ? sched.params->trees : 0;
          m.seed = seed;
          m.rank = rank;
          m.chunk = static_cast<int>(i) / chunk_elems;
          std::ostringstream detail;
          detail << "element " << i << " got " << got[rank][i] << " want " << want[rank][i];
          m.detail = detail.str();
          mismatches.push_back(std::move(m));
          return;  // one mismatch per configuration is enough detail
        }
      }
    }
  }

  void record_failure(const RelativeSchedule& sched, std::uint64_t seed, std::string detail) {
    SweepMismatch m;
    m.algorithm = sched.algorithm;
    m.kind = sched.kind;
    m.n_ranks = sched.n_ranks;
    m.trees = sched.params ? sched.params->trees : 0;
    m.seed = seed;
    m.detail = std::move(detail);
    mismatches.push_back(std::move(m));
  }

  void check_occupancy(const RelativeSchedule& sched, const ExecStats& stats,
                       std::uint64_t seed) {
    if (options.occupancy_bound > 0 &&
        stats.peak_intermediate_slots > options.occupancy_bound) {
      std::ostringstream detail;
      detail << "peak slots " << stats.peak_intermediate_slots << " exceed bound "
             << options.occupancy_bound;
      record_failure(sched, seed, detail.str());
    }
  }

  // Runs one schedule (and its mirror) against the oracles for every seed.
  void check_schedule(const RelativeSchedule& allgather) {
    const int n = allgather.n_ranks;
    const int elems = options.elements_per_chunk;
    const double rel = options.float_rel_tolerance;

    const std::vector<Violation> violations = validate(allgather);
    if (!violations.empty()) {
      record_failure(allgather, 0, "validation: " + violations.front().message);
      return;
    }
    RelativeSchedule reduce;
    if (options.check_reduce_scatter) {
      reduce = mirror_schedule(allgather);
      const std::vector<Violation> mirror_violations = validate(reduce);
      if (!mirror_violations.empty()) {
        record_failure(reduce, 0, "mirror validation: " + mirror_violations.front().message);
        return;
      }
    }

    for (std::uint64_t seed : options.seeds) {
      if (options.check_allgather) {
        const auto ag_int = random_allgather_payload(n, elems, seed);
        const auto ag_res = run_allgather(allgather, ag_int);
        compare(allgather, seed, ag_res.outputs, oracle_allgather(ag_int), elems,
                [](std::int64_t a, std::int64_t b) { return a == b; });
        check_occupancy(allgather, ag_res.stats, seed);

        const auto ag_f64 = random_allgather_payload_f64(n, elems, seed);
        compare(allgather, seed, run_allgather(allgather, ag_f64).outputs,
                oracle_allgather(ag_f64), elems, [](double a, double b) { return a == b; });
      }

      if (options.check_reduce_scatter) {
        const auto rs_int = random_reduce_scatter_payload(n, elems, seed);
        const auto rs_res = run_reduce_scatter(reduce, rs_int, ReduceOp::WrappingIntSum);
        compare(reduce, seed, rs_res.outputs,
                oracle_reduce_scatter(rs_int, ReduceOp::WrappingIntSum), elems,
                [](std::int64_t a, std::int64_t b) { return a == b; });
        if (!options.check_allgather) check_occupancy(reduce, rs_res.stats, seed);

        const auto rs_f64 = random_reduce_scatter_payload_f64(n, elems, seed);
        compare(reduce, seed, run_reduce_scatter(reduce, rs_f64, ReduceOp::FloatSum).outputs,
                oracle_reduce_scatter(rs_f64, ReduceOp::FloatSum), elems,
                [rel](double a, double b) { return float_close(a, b, rel); });
      }
    }
  }
};

}  // namespace

std::vector<SweepMismatch> oracle_sweep(const SweepOptions& options) {
  std::vector<SweepMismatch> mismatches;
  SweepContext ctx{options, mismatches};

  for (int n = options.n_min; n <= options.n_max; n++) {
    for (Algorithm algo : options.algorithms) {
      std::vector<RelativeSchedule> schedules;
      switch (algo) {
        case Algorithm::Ring:
          schedules.push_back(ring_allgather(n));
          break;
        case Algorithm::BruckNearest:
          schedules.push_back(bruck_nearest(n));
          break;
        case Algorithm::BruckFarthest:
          schedules.push_back(bruck_farthest(n));
          break;
        case Algorithm::RecursiveDoubling:
          if (!is_power_of_two(n)) continue;
          schedules.push_back(recursive_doubling(n));
          break;
        case Algorithm::Pat:
          if (options.trees > 0) {
            schedules.push_back(pat_allgather(n, options.trees));
          } else {
            for (int trees : valid_tree_counts(n)) schedules.push_back(pat_allgather(n, trees));
          }
          break;
      }
      for (const RelativeSchedule& sched : schedules) {
        const size_t before = mismatches.size();
        ctx.check_schedule(sched);
        if (options.progress != nullptr) {
          std::ostream& out = *options.progress;
          out << (mismatches.size() == before ? "ok  " : "FAIL") << " " << to_string(algo)
              << " n=" << n;
          if (sched.params) out << " T=" << sched.params->trees;
          if (options.check_allgather) out << " allgather";
          if (options.check_reduce_scatter) out << " reducescatter";
          out << " int+f64 seeds=" << options.seeds.size() << "\n";
        }
      }
    }
  }
  return mismatches;
}

}  // namespace patsim
