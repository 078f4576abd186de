#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "patsim/simulate.hpp"

namespace patsim {

// Definitional references, independent of any schedule.

// Every rank's output is the n input chunks in rank order.
template <class T>
std::vector<std::vector<T>> oracle_allgather(const Payload<T>& payload);

// output[r] = fold over senders, in rank order, of chunks[s * n + r].
std::vector<std::vector<std::int64_t>> oracle_reduce_scatter(const Payload<std::int64_t>& payload,
                                                             ReduceOp op);
std::vector<std::vector<double>> oracle_reduce_scatter(const Payload<double>& payload,
                                                       ReduceOp op);

// Seeded payloads. Values come straight from mt19937_64 output so they are
// identical on every platform.
Payload<std::int64_t> random_allgather_payload(int n_ranks, int elements_per_chunk,
                                               std::uint64_t seed);
Payload<std::int64_t> random_reduce_scatter_payload(int n_ranks, int elements_per_chunk,
                                                    std::uint64_t seed);
Payload<double> random_allgather_payload_f64(int n_ranks, int elements_per_chunk,
                                             std::uint64_t seed);
Payload<double> random_reduce_scatter_payload_f64(int n_ranks, int elements_per_chunk,
                                                  std::uint64_t seed);  // values in [0, 1)

struct SweepOptions {
  int n_min = 1;
  int n_max = 64;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int elements_per_chunk = 4;
  std::vector<Algorithm> algorithms = {Algorithm::Ring, Algorithm::BruckNearest,
                                       Algorithm::BruckFarthest, Algorithm::RecursiveDoubling,
                                       Algorithm::Pat};
  bool check_allgather = true;
  bool check_reduce_scatter = true;  // runs the mirrored schedule
  int trees = 0;                     // pat only; 0 = every valid tree count
  double float_rel_tolerance = 1e-9;
  int occupancy_bound = 0;           // when > 0, also require peak slots <= bound
  std::ostream* progress = nullptr;  // one summary line per configuration
};

struct SweepMismatch {
  Algorithm algorithm = Algorithm::Ring;
  CollectiveKind kind = CollectiveKind::AllGather;
  int n_ranks = 0;
  int trees = 0;  // 0 for non-pat
  std::uint64_t seed = 0;
  int rank = -1;
  int chunk = -1;
  std::string detail;
};

std::string describe(const SweepMismatch& mismatch);

// Exhaustive equivalence sweep: for each algorithm, each n in
// [n_min, n_max], each valid tree count and each seed, runs the simulator on
// integer and float payloads for both the all-gather schedule and its mirror
// reduce-scatter, and compares against the oracles (exact for integers,
// toleranced for floats). Returns every mismatch found.
std::vector<SweepMismatch> oracle_sweep(const SweepOptions& options);

}  // namespace patsim
