#include "patsim/costmodel.hpp"

#include <algorithm>
#include <sstream>

namespace patsim {

std::int64_t Topology::capacity() const {
  std::int64_t cum = 1;
  for (const TopologyLevel& level : levels) {
    if (cum > (std::int64_t{1} << 40)) break;  // already covers any rank count we handle
    cum *= level.span;
  }
  return cum;
}

Topology uniform_topology(int n_ranks, double alpha_us, double beta_ns_per_byte) {
  Topology topo;
  topo.levels.push_back({std::max(n_ranks, 2), alpha_us, beta_ns_per_byte});
  return topo;
}

void validate_topology(const Topology& topo) {
  if (topo.levels.empty()) throw TopologyError("topology has no levels");
  double prev_alpha = 0.0;
  for (size_t i = 0; i < topo.levels.size(); i++) {
    const TopologyLevel& level = topo.levels[i];
    std::ostringstream msg;
    if (level.span < 2) {
      msg << "level " << i << " span " << level.span << " must be >= 2";
      throw TopologyError(msg.str());
    }
    if (level.alpha_us < prev_alpha) {
      msg << "level " << i << " alpha " << level.alpha_us
          << " decreases below lower level's " << prev_alpha;
      throw TopologyError(msg.str());
    }
    if (level.alpha_us < 0 || level.beta_ns_per_byte < 0) {
      msg << "level " << i << " has negative cost parameters";
      throw TopologyError(msg.str());
    }
    prev_alpha = level.alpha_us;
  }
}

int distance_level(int rank_a, int rank_b, const Topology& topo) {
  validate_topology(topo);
  if (rank_a == rank_b) {
    std::ostringstream msg;
    msg << "distance_level: rank " << rank_a << " compared with itself";
    throw TopologyError(msg.str());
  }
  std::int64_t cum = 1;
  for (size_t level = 0; level < topo.levels.size(); level++) {
    cum *= topo.levels[level].span;
    if (rank_a / cum == rank_b / cum) return static_cast<int>(level);
  }
  std::ostringstream msg;
  msg << "topology too small: covers " << cum << " ranks, needs ranks " << rank_a << " and "
      << rank_b;
  throw TopologyError(msg.str());
}

int round_level(const RelativeRound& round, int n_ranks, const Topology& topo) {
  const int distance = mod_ranks(std::abs(std::int64_t{round.peer_send_offset}), n_ranks);
  if (distance == 0) return 0;  // self-distance only in degenerate hand-built rounds
  return distance_level(0, distance, topo);
}

CostReport schedule_cost(const RelativeSchedule& sched, const Topology& topo,
                         std::int64_t chunk_bytes) {
  validate_topology(topo);
  if (chunk_bytes < 1) throw TopologyError("chunk_bytes must be >= 1");
  if (topo.capacity() < sched.n_ranks) {
    std::ostringstream msg;
    msg << "topology too small: covers " << topo.capacity() << " ranks, schedule has "
        << sched.n_ranks;
    throw TopologyError(msg.str());
  }

  CostReport report;
  report.algorithm = to_string(sched.algorithm);
  report.kind = sched.kind;
  report.n_ranks = sched.n_ranks;
  report.trees = sched.params ? sched.params->trees : 0;
  report.chunk_bytes = chunk_bytes;
  report.round_count = static_cast<int>(sched.rounds.size());

  for (const RelativeRound& round : sched.rounds) {
    const int level = round_level(round, sched.n_ranks, topo);
    const std::int64_t message_bytes = chunk_bytes * static_cast<std::int64_t>(round.chunk_offsets.size());
    const TopologyLevel& params = topo.levels[level];
    const double cost_us =
        params.alpha_us + static_cast<double>(message_bytes) * params.beta_ns_per_byte / 1000.0;
    report.per_round_cost_us.push_back(cost_us);
    report.total_us += cost_us;
    report.bytes_by_level[level] += message_bytes;
    report.schedule_work_units += 1 + static_cast<std::int64_t>(round.chunk_offsets.size());
  }
  const int top = static_cast<int>(topo.levels.size()) - 1;
  const auto it = report.bytes_by_level.find(top);
  report.top_level_bytes = it == report.bytes_by_level.end() ? 0 : it->second;
  return report;
}

}  // namespace patsim
