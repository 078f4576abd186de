#pragma once

#include <cstdint>
#include <vector>

#include "patsim/schedule.hpp"

namespace patsim {

// Largest valid tree count for n ranks: 2^(D-1) with D = ceil(log2 n), and 1
// for n <= 2. Aggregating that much reproduces dimension-reversed Bruck.
int max_trees(int n_ranks);

// All valid tree counts for n ranks: powers of two in [1, max_trees(n)].
std::vector<int> valid_tree_counts(int n_ranks);

// Derives the tree count from an intermediate buffer budget: the largest
// power of two <= floor(buffer_bytes / chunk_bytes), clamped to
// [1, max_trees(n)]. Throws BufferTooSmallError when the buffer cannot hold
// one chunk.
int trees_from_buffer(std::int64_t buffer_bytes, std::int64_t chunk_bytes, int n_ranks);

// Nominal slot budget T + ceil(log2(max(n/T, 1))) recorded in PatParams.
int pat_buffer_slots(int n_ranks, int trees);

// Closed form log2(T) + n/T - 1 for power-of-two n and T; the enumerated
// round count of pat_allgather must equal it. Throws NonPowerOfTwoError.
int round_count_formula(int n_ranks, int trees);

// Offsets sendable at a dimension: k with k mod 2^(d+1) == 0 and
// k + 2^d < n, in descending order. For non-power-of-two n this is the
// truncated-tree rule shared by bruck_farthest and pat_allgather.
std::vector<int> sendable_offsets(int n_ranks, int dimension);

// n-1 rounds; round i sends offset i one rank to the right.
RelativeSchedule ring_allgather(int n_ranks);

// Classic Bruck: ascending dimensions, round at dimension d sends offsets
// [0, min(2^d, n - 2^d)) to peer +2^d.
RelativeSchedule bruck_nearest(int n_ranks);

// Dimension-reversed Bruck: descending dimensions, each round sends the full
// sendable set of its dimension.
RelativeSchedule bruck_farthest(int n_ranks);

// Hypercube exchange; requires power-of-two n (NonPowerOfTwoError otherwise).
// Round d exchanges all 2^d held offsets with partner rank XOR 2^d.
RelativeSchedule recursive_doubling(int n_ranks);

// Buffer-constrained all-gather: dimension groups of at most `trees` chunks,
// emitted depth-first with far groups first so that slots drain before the
// next group fills them. Throws InvalidTreeCountError for a non-power-of-two
// or out-of-range tree count.
RelativeSchedule pat_allgather(int n_ranks, int trees);

// Reverses a schedule into its mirror collective: rounds in reverse order,
// peers negated, chunk offsets shifted one hop toward the destination, and
// split groups renumbered. An involution; flips kind in both directions.
RelativeSchedule mirror_schedule(const RelativeSchedule& sched);

// mirror_schedule(pat_allgather(n, trees)).
RelativeSchedule pat_reduce_scatter(int n_ranks, int trees);

}  // namespace patsim
