#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "patsim/costmodel.hpp"
#include "patsim/schedule.hpp"

namespace patsim {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schedule document:
//   {"algorithm": ..., "kind": ..., "n_ranks": ...,
//    "params": {"trees": T, "buffer_slots": B} | {},
//    "rounds": [{"round": i, "dim": d, "split": s, "peer": p, "chunks": [..]}]}
// Field order is fixed; chunks are serialized in send order.
std::string schedule_to_json(const RelativeSchedule& sched, int indent = 2);
RelativeSchedule schedule_from_json(const std::string& text);

// Topology config:
//   {"levels": [{"span": s, "alpha_us": a, "beta_ns_per_byte": b}, ...]}
std::string topology_to_json(const Topology& topo, int indent = 2);
Topology topology_from_json(const std::string& text);

// Broadcast (or, mirrored, reduce) tree of one origin rank, edges labeled
// with round indices.
std::string schedule_to_dot(const RelativeSchedule& sched, int origin_rank);

// algo,n,trees,bytes_per_rank,rounds,total_us,top_level_bytes
std::string cost_csv_header();
std::string cost_csv_row(const CostReport& report);

}  // namespace patsim
