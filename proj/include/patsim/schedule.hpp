#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace patsim {

enum class CollectiveKind { AllGather, ReduceScatter };

enum class Algorithm { Ring, BruckNearest, BruckFarthest, RecursiveDoubling, Pat };

const char* to_string(CollectiveKind kind);
const char* to_string(Algorithm algo);

struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPowerOfTwoError : ScheduleError {
  using ScheduleError::ScheduleError;
};
struct InvalidTreeCountError : ScheduleError {
  using ScheduleError::ScheduleError;
};
struct BufferTooSmallError : ScheduleError {
  using ScheduleError::ScheduleError;
};
struct RankOutOfRangeError : ScheduleError {
  using ScheduleError::ScheduleError;
};

inline bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

// Smallest d with 2^d >= v, for v >= 1.
inline int ceil_log2(std::int64_t v) {
  int d = 0;
  while ((std::int64_t{1} << d) < v) d++;
  return d;
}

// Euclidean remainder: result in [0, n).
inline int mod_ranks(std::int64_t value, int n_ranks) {
  std::int64_t m = value % n_ranks;
  return static_cast<int>(m < 0 ? m + n_ranks : m);
}

struct PatParams {
  int trees = 1;         // max chunks aggregated per message (power of two)
  int buffer_slots = 1;  // nominal intermediate chunk budget
  bool operator==(const PatParams&) const = default;
};

// One communication round in rank-relative offset space. Every rank sends the
// same chunk offsets the same distance, so a single round describes all n
// messages of that round.
//
// Offset k at rank r addresses the chunk of origin rank (r - k) mod n for
// all-gather, or the partial sum destined to rank (r - k) mod n for
// reduce-scatter. Exchange rounds (recursive doubling) use XOR addressing
// instead: offset k at rank r addresses rank r ^ k, and the peer is
// r ^ |peer_send_offset| rather than r + peer_send_offset.
struct RelativeRound {
  int round_index = 0;
  int dimension = 0;    // peer distance is 2^dimension
  int split_index = 0;  // 0 when the dimension is not split
  int peer_send_offset = 0;
  bool exchange = false;
  std::vector<int> chunk_offsets;  // non-empty, distinct, in send order

  // Offsets every rank receives in this round, derived from the send set.
  std::vector<int> received_offsets(int n_ranks) const;

  bool operator==(const RelativeRound&) const = default;
};

struct RelativeSchedule {
  CollectiveKind kind = CollectiveKind::AllGather;
  Algorithm algorithm = Algorithm::Ring;
  int n_ranks = 1;
  std::optional<PatParams> params;  // present for pat schedules
  std::vector<RelativeRound> rounds;

  bool operator==(const RelativeSchedule&) const = default;
};

// Concrete instantiation of one round at one rank.
struct AbsoluteStep {
  int round_index = 0;
  int sender_rank = 0;
  int receiver_rank = 0;
  std::vector<int> chunk_ids;  // origin (all-gather) / destination (reduce-scatter) ranks

  bool operator==(const AbsoluteStep&) const = default;
};

struct Violation {
  int round_index = -1;  // -1 for schedule-level problems
  std::string message;
};

// Instantiates the relative schedule at one rank: one send step per round.
// Throws RankOutOfRangeError.
std::vector<AbsoluteStep> translate(const RelativeSchedule& sched, int rank);

// Structural and semantic checks. Violations are data, not failures; an empty
// result means the schedule is valid.
//
// All-gather: simulates the held offset set H (H0 = {0}); every round must
// send only held offsets, and after the last round H must cover [0, n).
// Reduce-scatter: simulates the pending destination set P (P0 = [0, n));
// every round must forward only still-pending offsets, arrivals must target
// still-pending accumulators, and only offset 0 may remain at the end.
std::vector<Violation> validate(const RelativeSchedule& sched);

}  // namespace patsim
