#include <algorithm>
#include <numeric>
#include <set>

#include <doctest.h>

#include "patsim/algorithms.hpp"

using namespace patsim;

namespace {

std::vector<std::vector<int>> chunk_sets(const RelativeSchedule& sched) {
  std::vector<std::vector<int>> sets;
  for (const RelativeRound& round : sched.rounds) sets.push_back(round.chunk_offsets);
  return sets;
}

std::vector<int> chunk_counts(const RelativeSchedule& sched) {
  std::vector<int> counts;
  for (const RelativeRound& round : sched.rounds) {
    counts.push_back(static_cast<int>(round.chunk_offsets.size()));
  }
  return counts;
}

std::vector<int> dimensions(const RelativeSchedule& sched) {
  std::vector<int> dims;
  for (const RelativeRound& round : sched.rounds) dims.push_back(round.dimension);
  return dims;
}

std::multiset<size_t> message_sizes(const RelativeSchedule& sched) {
  std::multiset<size_t> sizes;
  for (const RelativeRound& round : sched.rounds) sizes.insert(round.chunk_offsets.size());
  return sizes;
}

}  // namespace

TEST_SUITE("algorithms") {

TEST_CASE("ring sends one chunk per round") {
  const RelativeSchedule sched = ring_allgather(8);
  REQUIRE(sched.rounds.size() == 7);
  for (int i = 0; i < 7; i++) {
    CHECK(sched.rounds[i].chunk_offsets == std::vector<int>{i});
    CHECK(sched.rounds[i].peer_send_offset == 1);
    CHECK(sched.rounds[i].dimension == 0);
  }
  CHECK(ring_allgather(2).rounds.size() == 1);
  CHECK(ring_allgather(2).rounds[0].chunk_offsets == std::vector<int>{0});
  CHECK(ring_allgather(1).rounds.empty());
}

TEST_CASE("bruck nearest doubles the prefix each round") {
  CHECK(chunk_sets(bruck_nearest(8)) ==
        std::vector<std::vector<int>>{{0}, {0, 1}, {0, 1, 2, 3}});
  CHECK(chunk_counts(bruck_nearest(7)) == std::vector<int>{1, 2, 3});
  CHECK(chunk_sets(bruck_nearest(4)) == std::vector<std::vector<int>>{{0}, {0, 1}});
  CHECK(bruck_nearest(1).rounds.empty());

  const RelativeSchedule sched = bruck_nearest(8);
  CHECK(sched.rounds[0].peer_send_offset == 1);
  CHECK(sched.rounds[1].peer_send_offset == 2);
  CHECK(sched.rounds[2].peer_send_offset == 4);
}

TEST_CASE("bruck nearest sends n-1 chunks in total") {
  for (int n = 1; n <= 256; n++) {
    const auto counts = chunk_counts(bruck_nearest(n));
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == n - 1);
  }
}

TEST_CASE("bruck nearest ends with half the data at half the ring") {
  for (int n = 2; n <= 256; n *= 2) {
    const RelativeSchedule sched = bruck_nearest(n);
    const RelativeRound& last = sched.rounds.back();
    CHECK(static_cast<int>(last.chunk_offsets.size()) == n / 2);
    CHECK(last.peer_send_offset == n / 2);
  }
}

TEST_CASE("bruck farthest reverses the dimensions") {
  CHECK(chunk_sets(bruck_farthest(8)) ==
        std::vector<std::vector<int>>{{0}, {4, 0}, {6, 4, 2, 0}});
  CHECK(chunk_sets(bruck_farthest(7)) ==
        std::vector<std::vector<int>>{{0}, {4, 0}, {4, 2, 0}});
  CHECK(bruck_farthest(1).rounds.empty());
  CHECK(bruck_farthest(8).rounds.back().chunk_offsets.size() == 4);
}

TEST_CASE("bruck farthest sends one chunk at the largest dimension") {
  for (int n = 2; n <= 256; n++) {
    const RelativeSchedule sched = bruck_farthest(n);
    CHECK(sched.rounds.front().chunk_offsets.size() == 1);
    if (is_power_of_two(n)) {
      // chunk count doubles as the dimension decreases
      for (size_t i = 0; i + 1 < sched.rounds.size(); i++) {
        CHECK(sched.rounds[i + 1].chunk_offsets.size() ==
              2 * sched.rounds[i].chunk_offsets.size());
      }
    }
  }
}

TEST_CASE("recursive doubling exchanges the whole held set") {
  const RelativeSchedule sched = recursive_doubling(8);
  REQUIRE(sched.rounds.size() == 3);
  CHECK(chunk_counts(sched) == std::vector<int>{1, 2, 4});
  for (const RelativeRound& round : sched.rounds) {
    CHECK(round.exchange);
    // held set after round d covers all xor masks over bits <= d
    CHECK(round.chunk_offsets.front() == 0);
    CHECK(round.chunk_offsets.back() == (1 << round.dimension) - 1);
  }
  CHECK(recursive_doubling(1).rounds.empty());
}

TEST_CASE("recursive doubling rejects non-power-of-two rank counts") {
  CHECK_THROWS_AS(recursive_doubling(6), NonPowerOfTwoError);
  CHECK_THROWS_WITH_AS(recursive_doubling(6), doctest::Contains("NonPowerOfTwo"),
                       NonPowerOfTwoError);
}

TEST_CASE("tree counts derive from the buffer budget") {
  const std::int64_t mib = 1 << 20;
  CHECK(trees_from_buffer(4 * mib, mib, 16) == 4);
  CHECK(trees_from_buffer(mib, mib, 16) == 1);
  CHECK(trees_from_buffer(100 * mib, mib, 8) == 4);  // clamped to full aggregation
  CHECK_THROWS_AS(trees_from_buffer(mib - 1, mib, 8), BufferTooSmallError);
}

TEST_CASE("valid tree counts are the powers of two up to half the cube") {
  CHECK(valid_tree_counts(1) == std::vector<int>{1});
  CHECK(valid_tree_counts(2) == std::vector<int>{1});
  CHECK(valid_tree_counts(3) == std::vector<int>{1, 2});
  CHECK(valid_tree_counts(8) == std::vector<int>{1, 2, 4});
  CHECK(max_trees(16) == 8);
}

TEST_CASE("pat with 8 ranks and 2 trees splits only the last dimension") {
  const RelativeSchedule sched = pat_allgather(8, 2);
  REQUIRE(sched.rounds.size() == 4);
  CHECK(chunk_counts(sched) == std::vector<int>{1, 2, 2, 2});
  CHECK(chunk_sets(sched) ==
        std::vector<std::vector<int>>{{0}, {4, 0}, {6, 4}, {2, 0}});
  CHECK(dimensions(sched) == std::vector<int>{2, 1, 0, 0});
  CHECK(sched.rounds[2].split_index == 0);
  CHECK(sched.rounds[3].split_index == 1);
  REQUIRE(sched.params.has_value());
  CHECK(sched.params->trees == 2);
  CHECK(sched.params->buffer_slots == 4);
}

TEST_CASE("pat with full aggregation is dimension-reversed bruck") {
  CHECK(pat_allgather(16, 8).rounds == bruck_farthest(16).rounds);
  for (int n = 2; n <= 256; n++) {
    CHECK(pat_allgather(n, max_trees(n)).rounds == bruck_farthest(n).rounds);
  }
}

TEST_CASE("pat with one tree is fully linear") {
  const RelativeSchedule sched = pat_allgather(8, 1);
  CHECK(sched.rounds.size() == 7);
  for (const RelativeRound& round : sched.rounds) CHECK(round.chunk_offsets.size() == 1);
  for (int n = 2; n <= 128; n++) {
    CHECK(pat_allgather(n, 1).rounds.size() == static_cast<size_t>(n - 1));
  }
}

TEST_CASE("pat with 16 ranks and 4 trees") {
  const RelativeSchedule sched = pat_allgather(16, 4);
  CHECK(chunk_sets(sched) == std::vector<std::vector<int>>{
                                 {0}, {8, 0}, {12, 8, 4, 0}, {14, 12, 10, 8}, {6, 4, 2, 0}});
  CHECK(dimensions(sched) == std::vector<int>{3, 2, 1, 0, 0});
}

TEST_CASE("pat emits split groups depth-first, far side first") {
  // With one tree the emitter walks each subtree to completion before the
  // next: the far half of 16 ranks drains entirely before offset 0 re-fires.
  const RelativeSchedule sched = pat_allgather(16, 1);
  std::vector<std::pair<int, int>> got;
  for (const RelativeRound& round : sched.rounds) {
    got.push_back({round.dimension, round.chunk_offsets[0]});
  }
  const std::vector<std::pair<int, int>> want = {
      {3, 0}, {2, 8}, {1, 12}, {0, 14}, {0, 12}, {1, 8}, {0, 10}, {0, 8},
      {2, 0}, {1, 4}, {0, 6}, {0, 4}, {1, 0}, {0, 2}, {0, 0}};
  CHECK(got == want);
}

TEST_CASE("pat rounds never exceed the tree count") {
  for (int n = 2; n <= 128; n++) {
    for (int trees : valid_tree_counts(n)) {
      const RelativeSchedule sched = pat_allgather(n, trees);
      // the largest dimension always moves a single chunk
      CHECK(sched.rounds.front().chunk_offsets == std::vector<int>{0});
      int largest = 0;
      for (const RelativeRound& round : sched.rounds) {
        CHECK(static_cast<int>(round.chunk_offsets.size()) <= trees);
        largest = std::max(largest, static_cast<int>(round.chunk_offsets.size()));
      }
      // power-of-two rank counts always reach full aggregation somewhere;
      // truncated trees may not (e.g. n=3 T=2 has only single-chunk rounds)
      if (is_power_of_two(n)) CHECK(largest == std::min(trees, n - 1));
    }
  }
}

TEST_CASE("pat round count matches the closed form") {
  CHECK(round_count_formula(8, 2) == 4);
  CHECK(round_count_formula(16, 8) == 4);
  CHECK(round_count_formula(16, 1) == 15);
  CHECK_THROWS_AS(round_count_formula(12, 2), NonPowerOfTwoError);
  CHECK_THROWS_AS(round_count_formula(16, 3), NonPowerOfTwoError);
  for (int n = 2; n <= 256; n *= 2) {
    for (int trees : valid_tree_counts(n)) {
      CHECK(static_cast<int>(pat_allgather(n, trees).rounds.size()) ==
            round_count_formula(n, trees));
    }
  }
}

TEST_CASE("pat round count never increases with the tree count") {
  for (int n = 2; n <= 256; n *= 2) {
    size_t previous = pat_allgather(n, 1).rounds.size();
    for (int trees : valid_tree_counts(n)) {
      const size_t count = pat_allgather(n, trees).rounds.size();
      CHECK(count <= previous);
      previous = count;
    }
  }
}

TEST_CASE("pat rejects bad tree counts") {
  CHECK_THROWS_AS(pat_allgather(16, 3), InvalidTreeCountError);
  CHECK_THROWS_AS(pat_allgather(16, 0), InvalidTreeCountError);
  CHECK_THROWS_AS(pat_allgather(16, 16), InvalidTreeCountError);
  CHECK_THROWS_AS(pat_allgather(8, -2), InvalidTreeCountError);
  CHECK(pat_allgather(1, 1).rounds.empty());
}

TEST_CASE("mirror of pat(8,2) runs the tree backwards") {
  const RelativeSchedule mirrored = mirror_schedule(pat_allgather(8, 2));
  CHECK(mirrored.kind == CollectiveKind::ReduceScatter);
  REQUIRE(mirrored.rounds.size() == 4);
  CHECK(dimensions(mirrored) == std::vector<int>{0, 0, 1, 2});
  CHECK(mirrored.rounds[0].peer_send_offset == -1);
  CHECK(chunk_sets(mirrored) ==
        std::vector<std::vector<int>>{{3, 1}, {7, 5}, {6, 2}, {4}});
  CHECK(mirrored.rounds[0].split_index == 0);
  CHECK(mirrored.rounds[1].split_index == 1);
}

TEST_CASE("mirror is an involution") {
  std::vector<RelativeSchedule> schedules;
  for (int n : {1, 2, 3, 5, 8, 16, 31, 64}) {
    schedules.push_back(ring_allgather(n));
    schedules.push_back(bruck_nearest(n));
    schedules.push_back(bruck_farthest(n));
    if (is_power_of_two(n)) schedules.push_back(recursive_doubling(n));
    for (int trees : valid_tree_counts(n)) schedules.push_back(pat_allgather(n, trees));
  }
  for (const RelativeSchedule& sched : schedules) {
    CAPTURE(to_string(sched.algorithm));
    CAPTURE(sched.n_ranks);
    CHECK(mirror_schedule(mirror_schedule(sched)) == sched);
  }
}

TEST_CASE("mirror reverses dimensions and keeps message sizes") {
  for (int n : {4, 7, 8, 16, 24}) {
    for (int trees : valid_tree_counts(n)) {
      const RelativeSchedule sched = pat_allgather(n, trees);
      const RelativeSchedule mirrored = mirror_schedule(sched);
      CHECK(mirrored.rounds.size() == sched.rounds.size());
      CHECK(message_sizes(mirrored) == message_sizes(sched));
      std::vector<int> reversed = dimensions(sched);
      std::reverse(reversed.begin(), reversed.end());
      CHECK(dimensions(mirrored) == reversed);
    }
  }
  CHECK(dimensions(mirror_schedule(bruck_farthest(8))) == std::vector<int>{0, 1, 2});
}

TEST_CASE("pat reduce-scatter is the mirrored all-gather") {
  CHECK(pat_reduce_scatter(8, 2) == mirror_schedule(pat_allgather(8, 2)));
  CHECK(pat_reduce_scatter(8, 2).rounds.size() == 4);
  CHECK(pat_reduce_scatter(1, 1).rounds.empty());

  const RelativeSchedule sched = pat_reduce_scatter(16, 4);
  REQUIRE(sched.rounds.size() == 5);
  CHECK(dimensions(sched) == std::vector<int>{0, 0, 1, 2, 3});  // parallel trees first
}

TEST_CASE("sendable offsets follow the truncated tree rule") {
  CHECK(sendable_offsets(8, 2) == std::vector<int>{0});
  CHECK(sendable_offsets(8, 0) == std::vector<int>{6, 4, 2, 0});
  CHECK(sendable_offsets(7, 0) == std::vector<int>{4, 2, 0});
  CHECK(sendable_offsets(7, 1) == std::vector<int>{4, 0});
  CHECK(sendable_offsets(3, 0) == std::vector<int>{0});
}

}  // TEST_SUITE
