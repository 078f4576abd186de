#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "patsim/schedule.hpp"

namespace patsim {

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TopologyLevel {
  int span = 2;                   // group fan-out at this level
  double alpha_us = 0.0;          // per-message latency
  double beta_ns_per_byte = 0.0;  // per-byte time (tapering = larger at top)

  bool operator==(const TopologyLevel&) const = default;
};

// Hierarchical levels, leaf first. Ranks a and b share a level-L group when
// floor(a / cum_L) == floor(b / cum_L), cum_L = product of spans up to L.
struct Topology {
  std::vector<TopologyLevel> levels;

  std::int64_t capacity() const;  // ranks covered by the last level

  bool operator==(const Topology&) const = default;
};

// Single level spanning all ranks; every round costs alpha.
Topology uniform_topology(int n_ranks, double alpha_us = 1.0, double beta_ns_per_byte = 0.0);

// Throws TopologyError: spans >= 2, alpha non-decreasing with level.
void validate_topology(const Topology& topo);

// Smallest level whose group contains both ranks. Throws TopologyError when
// a == b or the topology does not cover the ranks.
int distance_level(int rank_a, int rank_b, const Topology& topo);

// Level attributed to a round: the level crossed by its peer distance 2^d
// (the pair (0, 2^d mod n)). XOR exchanges are costed the same way.
int round_level(const RelativeRound& round, int n_ranks, const Topology& topo);

struct CostReport {
  std::string algorithm;
  CollectiveKind kind = CollectiveKind::AllGather;
  int n_ranks = 1;
  int trees = 0;  // 0 for non-pat schedules
  std::int64_t chunk_bytes = 0;
  int round_count = 0;
  std::vector<double> per_round_cost_us;
  double total_us = 0.0;
  std::map<int, std::int64_t> bytes_by_level;  // per-rank bytes per level
  std::int64_t top_level_bytes = 0;            // per-rank bytes at the last level
  std::int64_t schedule_work_units = 0;        // rounds + chunk entries emitted
};

// Alpha-beta cost, bulk synchronous: round cost = alpha(level) +
// message_bytes * beta(level), total = sum over rounds. All generated
// schedules are round-uniform across ranks, so the per-round max over ranks
// degenerates to the round's own level.
CostReport schedule_cost(const RelativeSchedule& sched, const Topology& topo,
                         std::int64_t chunk_bytes);

}  // namespace patsim
