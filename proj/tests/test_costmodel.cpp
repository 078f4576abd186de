#include <doctest.h>

#include "patsim/algorithms.hpp"
#include "patsim/costmodel.hpp"

using namespace patsim;

namespace {

Topology three_level(double top_beta = 0.0) {
  Topology topo;
  topo.levels = {{2, 1.0, 0.0}, {2, 1.0, 0.0}, {2, 1.0, top_beta}};
  return topo;
}

std::vector<int> round_levels(const RelativeSchedule& sched, const Topology& topo) {
  std::vector<int> levels;
  for (const RelativeRound& round : sched.rounds) {
    levels.push_back(round_level(round, sched.n_ranks, topo));
  }
  return levels;
}

}  // namespace

TEST_SUITE("costmodel") {

TEST_CASE("distance level finds the smallest shared group") {
  Topology topo;
  topo.levels = {{4, 1.0, 0.0}, {4, 2.0, 0.0}};
  CHECK(distance_level(1, 2, topo) == 0);
  CHECK(distance_level(1, 5, topo) == 1);
  CHECK(distance_level(0, 7, three_level()) == 2);
  CHECK_THROWS_AS(distance_level(3, 3, topo), TopologyError);
  CHECK_THROWS_AS(distance_level(0, 20, topo), TopologyError);  // beyond 16 ranks
}

TEST_CASE("topologies are validated") {
  Topology bad;
  bad.levels = {{1, 1.0, 0.0}};
  CHECK_THROWS_AS(validate_topology(bad), TopologyError);
  bad.levels = {{2, 2.0, 0.0}, {2, 1.0, 0.0}};  // alpha must not decrease upward
  CHECK_THROWS_AS(validate_topology(bad), TopologyError);
  CHECK_THROWS_AS(validate_topology(Topology{}), TopologyError);
  CHECK_NOTHROW(validate_topology(uniform_topology(16)));
}

TEST_CASE("uniform alpha-only cost counts rounds") {
  const Topology topo = uniform_topology(16, 1.0, 0.0);
  CHECK(schedule_cost(ring_allgather(16), topo, 1).total_us == doctest::Approx(15.0));
  CHECK(schedule_cost(pat_allgather(16, 8), topo, 1).total_us == doctest::Approx(4.0));
}

TEST_CASE("cost ordering equals round-count ordering when beta is zero") {
  const Topology topo = uniform_topology(64, 2.5, 0.0);
  double previous = -1.0;
  for (int trees : valid_tree_counts(64)) {
    const CostReport report = schedule_cost(pat_allgather(64, trees), topo, 1024);
    CHECK(report.total_us == doctest::Approx(2.5 * report.round_count));
    if (previous >= 0) CHECK(report.total_us <= previous);
    previous = report.total_us;
  }
}

TEST_CASE("top level carries half the data for nearest-first bruck only") {
  const Topology topo = three_level();
  const std::int64_t chunk = 64;

  const CostReport nearest = schedule_cost(bruck_nearest(8), topo, chunk);
  const CostReport farthest = schedule_cost(bruck_farthest(8), topo, chunk);
  CHECK(nearest.top_level_bytes == 4 * chunk);
  CHECK(farthest.top_level_bytes == chunk);
  CHECK(round_levels(bruck_nearest(8), topo) == std::vector<int>{0, 1, 2});
  CHECK(round_levels(bruck_farthest(8), topo) == std::vector<int>{2, 1, 0});
}

TEST_CASE("xor exchanges are costed at the partner distance") {
  CHECK(round_levels(recursive_doubling(8), three_level()) == std::vector<int>{0, 1, 2});
}

TEST_CASE("tapering the top level never helps and hurts nearest-first more") {
  const std::int64_t chunk = 128;
  for (int n : {4, 8, 16, 32}) {
    Topology flat;
    Topology tapered;
    const int dims = ceil_log2(n);
    for (int d = 0; d < dims; d++) {
      flat.levels.push_back({2, 1.0, 0.0});
      tapered.levels.push_back({2, 1.0, d == dims - 1 ? 5.0 : 0.0});
    }
    for (const RelativeSchedule& sched :
         {bruck_nearest(n), bruck_farthest(n), ring_allgather(n), pat_allgather(n, 1)}) {
      CHECK(schedule_cost(sched, tapered, chunk).total_us >=
            schedule_cost(sched, flat, chunk).total_us);
    }
    const double delta_nearest = schedule_cost(bruck_nearest(n), tapered, chunk).total_us -
                                 schedule_cost(bruck_nearest(n), flat, chunk).total_us;
    const double delta_farthest = schedule_cost(bruck_farthest(n), tapered, chunk).total_us -
                                  schedule_cost(bruck_farthest(n), flat, chunk).total_us;
    CHECK(delta_nearest > delta_farthest);
  }
}

TEST_CASE("reports carry schedule parameters and per-round costs") {
  const CostReport report = schedule_cost(pat_allgather(16, 4), uniform_topology(16), 256);
  CHECK(report.algorithm == "pat");
  CHECK(report.trees == 4);
  CHECK(report.round_count == 5);
  CHECK(report.per_round_cost_us.size() == 5);
  CHECK(report.chunk_bytes == 256);
  CHECK(report.kind == CollectiveKind::AllGather);

  const CostReport ring = schedule_cost(ring_allgather(4), uniform_topology(4), 8);
  CHECK(ring.trees == 0);
}

TEST_CASE("schedule work grows linearly in the single-tree case") {
  for (int n : {8, 16, 32, 64}) {
    const CostReport report = schedule_cost(pat_allgather(n, 1), uniform_topology(n), 1);
    CHECK(report.schedule_work_units == 2 * (n - 1));  // n-1 rounds, one chunk each
  }
}

TEST_CASE("errors on undersized topologies and bad chunk sizes") {
  CHECK_THROWS_AS(schedule_cost(ring_allgather(16), three_level(), 1), TopologyError);
  CHECK_THROWS_AS(schedule_cost(ring_allgather(4), uniform_topology(4), 0), TopologyError);
}

TEST_CASE("mirrored schedules cost the same per level") {
  const Topology topo = three_level(2.0);
  const CostReport forward = schedule_cost(pat_allgather(8, 2), topo, 32);
  const CostReport mirrored = schedule_cost(mirror_schedule(pat_allgather(8, 2)), topo, 32);
  CHECK(forward.bytes_by_level == mirrored.bytes_by_level);
  CHECK(forward.total_us == doctest::Approx(mirrored.total_us));
}

}  // TEST_SUITE
