#include "patsim/algorithms.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace patsim {

namespace {

void require_n_ranks(int n_ranks) {
  if (n_ranks < 1) {
    std::ostringstream msg;
    msg << "rank count must be >= 1, got " << n_ranks;
    throw ScheduleError(msg.str());
  }
}

void check_trees(int n_ranks, int trees) {
  if (!is_power_of_two(trees)) {
    std::ostringstream msg;
    msg << "InvalidTreeCount: tree count " << trees << " is not a power of two";
    throw InvalidTreeCountError(msg.str());
  }
  if (trees > max_trees(n_ranks)) {
    std::ostringstream msg;
    msg << "InvalidTreeCount: tree count " << trees << " exceeds " << max_trees(n_ranks)
        << " for " << n_ranks << " ranks";
    throw InvalidTreeCountError(msg.str());
  }
}

RelativeSchedule make_schedule(Algorithm algo, int n_ranks) {
  RelativeSchedule sched;
  sched.kind = CollectiveKind::AllGather;
  sched.algorithm = algo;
  sched.n_ranks = n_ranks;
  return sched;
}

void renumber(RelativeSchedule& sched) {
  for (size_t i = 0; i < sched.rounds.size(); i++) {
    sched.rounds[i].round_index = static_cast<int>(i);
  }
}

}  // namespace

int max_trees(int n_ranks) {
  require_n_ranks(n_ranks);
  if (n_ranks <= 2) return 1;
  return 1 << (ceil_log2(n_ranks) - 1);
}

std::vector<int> valid_tree_counts(int n_ranks) {
  std::vector<int> counts;
  for (int t = 1; t <= max_trees(n_ranks); t *= 2) counts.push_back(t);
  return counts;
}

int trees_from_buffer(std::int64_t buffer_bytes, std::int64_t chunk_bytes, int n_ranks) {
  if (chunk_bytes < 1) throw ScheduleError("chunk_bytes must be >= 1");
  if (n_ranks < 2) throw ScheduleError("trees_from_buffer requires at least 2 ranks");
  if (buffer_bytes < chunk_bytes) {
    std::ostringstream msg;
    msg << "BufferTooSmall: buffer of " << buffer_bytes << " bytes cannot hold one "
        << chunk_bytes << "-byte chunk";
    throw BufferTooSmallError(msg.str());
  }
  const std::int64_t fit = buffer_bytes / chunk_bytes;
  int trees = 1;
  while (std::int64_t{trees} * 2 <= fit && trees * 2 <= max_trees(n_ranks)) trees *= 2;
  return trees;
}

int pat_buffer_slots(int n_ranks, int trees) {
  // ceil(log2(max(n/T, 1))): smallest m with T * 2^m >= n.
  int m = 0;
  while ((std::int64_t{trees} << m) < n_ranks) m++;
  return trees + m;
}

int round_count_formula(int n_ranks, int trees) {
  if (!is_power_of_two(n_ranks) || !is_power_of_two(trees)) {
    std::ostringstream msg;
    msg << "NonPowerOfTwo: round count formula needs power-of-two ranks and trees, got n="
        << n_ranks << " T=" << trees;
    throw NonPowerOfTwoError(msg.str());
  }
  check_trees(n_ranks, trees);
  if (n_ranks == 1) return 0;
  return ceil_log2(trees) + n_ranks / trees - 1;
}

std::vector<int> sendable_offsets(int n_ranks, int dimension) {
  const std::int64_t stride = std::int64_t{1} << (dimension + 1);
  const std::int64_t reach = std::int64_t{1} << dimension;
  std::vector<int> offsets;
  for (std::int64_t k = ((n_ranks - 1) / stride) * stride; k >= 0; k -= stride) {
    if (k + reach < n_ranks) offsets.push_back(static_cast<int>(k));
  }
  return offsets;
}

RelativeSchedule ring_allgather(int n_ranks) {
  require_n_ranks(n_ranks);
  RelativeSchedule sched = make_schedule(Algorithm::Ring, n_ranks);
  for (int i = 0; i + 1 < n_ranks; i++) {
    sched.rounds.push_back({i, 0, 0, +1, false, {i}});
  }
  return sched;
}

RelativeSchedule bruck_nearest(int n_ranks) {
  require_n_ranks(n_ranks);
  RelativeSchedule sched = make_schedule(Algorithm::BruckNearest, n_ranks);
  const int dims = ceil_log2(n_ranks);
  for (int d = 0; d < dims; d++) {
    const int count = static_cast<int>(std::min<std::int64_t>(
        std::int64_t{1} << d, n_ranks - (std::int64_t{1} << d)));
    RelativeRound round{d, d, 0, 1 << d, false, {}};
    for (int k = 0; k < count; k++) round.chunk_offsets.push_back(k);
    sched.rounds.push_back(std::move(round));
  }
  return sched;
}

RelativeSchedule bruck_farthest(int n_ranks) {
  require_n_ranks(n_ranks);
  RelativeSchedule sched = make_schedule(Algorithm::BruckFarthest, n_ranks);
  const int dims = ceil_log2(n_ranks);
  for (int d = dims - 1; d >= 0; d--) {
    RelativeRound round{0, d, 0, 1 << d, false, sendable_offsets(n_ranks, d)};
    sched.rounds.push_back(std::move(round));
  }
  renumber(sched);
  return sched;
}

RelativeSchedule recursive_doubling(int n_ranks) {
  require_n_ranks(n_ranks);
  if (!is_power_of_two(n_ranks)) {
    std::ostringstream msg;
    msg << "NonPowerOfTwo: recursive doubling requires a power-of-two rank count, got "
        << n_ranks;
    throw NonPowerOfTwoError(msg.str());
  }
  RelativeSchedule sched = make_schedule(Algorithm::RecursiveDoubling, n_ranks);
  for (int d = 0; (1 << d) < n_ranks; d++) {
    RelativeRound round{d, d, 0, 1 << d, true, {}};
    for (int k = 0; k < (1 << d); k++) round.chunk_offsets.push_back(k);
    sched.rounds.push_back(std::move(round));
  }
  return sched;
}

namespace {

// Depth-first emitter for the buffer-constrained schedule. Groups of one
// dimension fire in far-first order; after each group the emitter descends so
// the offsets it just delivered are forwarded (and their slots drained)
// before the next group of the same dimension fills the buffer again. The
// scan stops at the first group that is not fully held yet, which keeps the
// far-first order strict within every dimension.
struct PatEmitter {
  int n_ranks;
  std::vector<std::vector<std::vector<int>>> groups;  // [dim][group] far-first
  std::vector<size_t> next_group;
  std::vector<char> held;
  RelativeSchedule* out;

  bool group_held(const std::vector<int>& group) const {
    return std::all_of(group.begin(), group.end(), [&](int k) { return held[k]; });
  }

  void fire(int dim) {
    while (next_group[dim] < groups[dim].size()) {
      const std::vector<int>& group = groups[dim][next_group[dim]];
      if (!group_held(group)) return;
      out->rounds.push_back(
          {0, dim, static_cast<int>(next_group[dim]), 1 << dim, false, group});
      next_group[dim]++;
      for (int k : group) held[k + (1 << dim)] = 1;
      if (dim > 0) fire(dim - 1);
    }
  }
};

}  // namespace

RelativeSchedule pat_allgather(int n_ranks, int trees) {
  require_n_ranks(n_ranks);
  check_trees(n_ranks, trees);

  RelativeSchedule sched = make_schedule(Algorithm::Pat, n_ranks);
  sched.params = PatParams{trees, pat_buffer_slots(n_ranks, trees)};
  if (n_ranks == 1) return sched;

  const int dims = ceil_log2(n_ranks);
  PatEmitter emitter{n_ranks, {}, {}, {}, &sched};
  emitter.groups.resize(dims);
  emitter.next_group.assign(dims, 0);
  emitter.held.assign(n_ranks, 0);
  emitter.held[0] = 1;
  for (int d = 0; d < dims; d++) {
    const std::vector<int> sendable = sendable_offsets(n_ranks, d);
    for (size_t i = 0; i < sendable.size(); i += trees) {
      emitter.groups[d].emplace_back(
          sendable.begin() + i,
          sendable.begin() + std::min(i + trees, sendable.size()));
    }
  }
  emitter.fire(dims - 1);
  renumber(sched);
  return sched;
}

RelativeSchedule mirror_schedule(const RelativeSchedule& sched) {
  RelativeSchedule mirrored;
  mirrored.kind = sched.kind == CollectiveKind::AllGather ? CollectiveKind::ReduceScatter
                                                          : CollectiveKind::AllGather;
  mirrored.algorithm = sched.algorithm;
  mirrored.n_ranks = sched.n_ranks;
  mirrored.params = sched.params;

  // Split groups flip order within their dimension, so index g becomes
  // (group count - 1) - g; applying the same map twice restores the input.
  std::map<int, int> group_count;
  for (const RelativeRound& round : sched.rounds) {
    int& count = group_count[round.dimension];
    count = std::max(count, round.split_index + 1);
  }

  for (auto it = sched.rounds.rbegin(); it != sched.rounds.rend(); ++it) {
    RelativeRound round;
    round.dimension = it->dimension;
    round.exchange = it->exchange;
    round.peer_send_offset = -it->peer_send_offset;
    round.split_index = group_count[it->dimension] - 1 - it->split_index;
    round.chunk_offsets = it->received_offsets(sched.n_ranks);
    mirrored.rounds.push_back(std::move(round));
  }
  renumber(mirrored);
  return mirrored;
}

RelativeSchedule pat_reduce_scatter(int n_ranks, int trees) {
  return mirror_schedule(pat_allgather(n_ranks, trees));
}

}  // namespace patsim
