#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <vector>

#include "patsim/costmodel.hpp"
#include "patsim/schedule.hpp"

namespace patsim {

enum class ReduceOp { WrappingIntSum, FloatSum };

enum class ExecMode { Lockstep, Parallel };

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PayloadShapeError : SimulationError {
  using SimulationError::SimulationError;
};
struct UnsupportedOpError : SimulationError {
  using SimulationError::SimulationError;
};
struct InvalidScheduleError : SimulationError {
  InvalidScheduleError(std::string msg, std::vector<Violation> v)
      : SimulationError(std::move(msg)), violations(std::move(v)) {}
  std::vector<Violation> violations;
};

// Concrete data for one run. All-gather: one chunk per rank (chunks[r] is the
// contribution of rank r). Reduce-scatter: n*n chunks, row-major;
// chunks[s * n + d] is rank s's contribution destined to rank d.
template <class T>
struct Payload {
  int n_ranks = 0;
  int elements_per_chunk = 0;
  std::vector<std::vector<T>> chunks;
};

struct ExecStats {
  int rounds = 0;
  std::int64_t messages = 0;  // total across ranks
  int max_chunks_per_message = 0;
  std::int64_t bytes_sent_per_rank = 0;
  std::map<int, std::int64_t> bytes_by_topology_level;  // per rank; filled when a topology is supplied
  int peak_intermediate_slots = 0;
  std::vector<int> occupancy_per_round;  // slots held at the end of each round

  bool operator==(const ExecStats&) const = default;
};

template <class T>
struct CollectiveResult {
  // All-gather: outputs[r] holds n chunks concatenated in origin-rank order.
  // Reduce-scatter: outputs[r] holds rank r's reduced chunk.
  std::vector<std::vector<T>> outputs;
  ExecStats stats;
};

struct RunOptions {
  ExecMode mode = ExecMode::Lockstep;
  int threads = 0;                 // parallel mode; 0 = hardware concurrency
  const Topology* topology = nullptr;
};

// Round-lockstep execution: all sends of round t are matched and delivered
// before round t+1. The parallel mode runs ranks on worker threads with
// rendezvous matching keyed by (round, sender, receiver); results are
// bit-identical to lockstep.
//
// Intermediate-slot accounting (all-gather): a received chunk occupies one
// slot iff some later round forwards it; the slot is freed after the last
// round that sends it. The own chunk (offset 0) and chunks that arrive only
// for the final output never occupy a slot.
CollectiveResult<std::int64_t> run_allgather(const RelativeSchedule& sched,
                                             const Payload<std::int64_t>& payload,
                                             const RunOptions& options = {});
CollectiveResult<double> run_allgather(const RelativeSchedule& sched,
                                       const Payload<double>& payload,
                                       const RunOptions& options = {});

// Reduce-scatter with reduction on arrival. A partial accumulator for
// destination offset k != 0 occupies a slot from the first arrival toward it
// until the round that forwards it; the rank's own contribution is folded in
// at send time without a slot, and offset-0 arrivals accumulate directly into
// the output. The op must match the element type (WrappingIntSum for int64,
// FloatSum for double) or UnsupportedOpError is thrown.
CollectiveResult<std::int64_t> run_reduce_scatter(const RelativeSchedule& sched,
                                                  const Payload<std::int64_t>& payload,
                                                  ReduceOp op, const RunOptions& options = {});
CollectiveResult<double> run_reduce_scatter(const RelativeSchedule& sched,
                                            const Payload<double>& payload, ReduceOp op,
                                            const RunOptions& options = {});

// One CSV row per message: round,dim,split,sender,receiver,chunks,bytes.
// Rows ordered by round, then sender.
void write_trace_csv(std::ostream& out, const RelativeSchedule& sched, std::int64_t chunk_bytes);

}  // namespace patsim
