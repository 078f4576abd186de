#include "patsim/schedule.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace patsim {

const char* to_string(CollectiveKind kind) {
  return kind == CollectiveKind::AllGather ? "allgather" : "reducescatter";
}

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Ring: return "ring";
    case Algorithm::BruckNearest: return "bruck-nearest";
    case Algorithm::BruckFarthest: return "bruck-farthest";
    case Algorithm::RecursiveDoubling: return "recursive-doubling";
    case Algorithm::Pat: return "pat";
  }
  return "unknown";
}

std::vector<int> RelativeRound::received_offsets(int n_ranks) const {
  std::vector<int> recv;
  recv.reserve(chunk_offsets.size());
  for (int k : chunk_offsets) {
    recv.push_back(exchange ? (k ^ std::abs(peer_send_offset))
                            : mod_ranks(std::int64_t{k} + peer_send_offset, n_ranks));
  }
  return recv;
}

std::vector<AbsoluteStep> translate(const RelativeSchedule& sched, int rank) {
  if (rank < 0 || rank >= sched.n_ranks) {
    std::ostringstream msg;
    msg << "RankOutOfRange: rank " << rank << " not in [0, " << sched.n_ranks << ")";
    throw RankOutOfRangeError(msg.str());
  }
  std::vector<AbsoluteStep> steps;
  steps.reserve(sched.rounds.size());
  for (const RelativeRound& round : sched.rounds) {
    AbsoluteStep step;
    step.round_index = round.round_index;
    step.sender_rank = rank;
    if (round.exchange) {
      step.receiver_rank = rank ^ std::abs(round.peer_send_offset);
      for (int k : round.chunk_offsets) step.chunk_ids.push_back(rank ^ k);
    } else {
      step.receiver_rank = mod_ranks(std::int64_t{rank} + round.peer_send_offset, sched.n_ranks);
      for (int k : round.chunk_offsets)
        step.chunk_ids.push_back(mod_ranks(std::int64_t{rank} - k, sched.n_ranks));
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

namespace {

std::string offsets_to_string(const std::set<int>& offsets) {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (int k : offsets) {
    if (!first) out << ",";
    out << k;
    first = false;
  }
  out << "}";
  return out.str();
}

void check_structure(const RelativeSchedule& sched, std::vector<Violation>& out) {
  const int n = sched.n_ranks;
  for (size_t i = 0; i < sched.rounds.size(); i++) {
    const RelativeRound& round = sched.rounds[i];
    const int t = static_cast<int>(i);
    std::ostringstream msg;
    if (round.round_index != t) {
      msg << "round_index " << round.round_index << " at position " << t
          << " (must increase from 0)";
      out.push_back({t, msg.str()});
      continue;
    }
    if (round.dimension < 0 || round.dimension > 30) {
      out.push_back({t, "dimension out of range [0, 30]"});
      continue;
    }
    if (round.split_index < 0) out.push_back({t, "negative split_index"});
    const std::int64_t expected = std::int64_t{1} << round.dimension;
    if (round.peer_send_offset == 0 || std::abs(std::int64_t{round.peer_send_offset}) != expected) {
      msg << "peer offset " << round.peer_send_offset << " does not match dimension "
          << round.dimension << " (|peer| must be " << expected << ")";
      out.push_back({t, msg.str()});
    } else if (!round.exchange && expected % n == 0) {
      msg << "peer offset " << round.peer_send_offset << " is a self-loop for " << n << " ranks";
      out.push_back({t, msg.str()});
    }
    if (round.chunk_offsets.empty()) {
      out.push_back({t, "empty chunk set"});
      continue;
    }
    std::set<int> seen;
    for (int k : round.chunk_offsets) {
      if (k < 0 || k >= n) {
        std::ostringstream m;
        m << "offset " << k << " out of range [0, " << n << ")";
        out.push_back({t, m.str()});
      } else if (!seen.insert(k).second) {
        std::ostringstream m;
        m << "duplicate offset " << k;
        out.push_back({t, m.str()});
      }
    }
    for (int k : round.received_offsets(n)) {
      if (k < 0 || k >= n) {
        std::ostringstream m;
        m << "received offset " << k << " out of range [0, " << n << ")";
        out.push_back({t, m.str()});
      }
    }
  }
}

void check_allgather_flow(const RelativeSchedule& sched, std::vector<Violation>& out) {
  const int n = sched.n_ranks;
  std::set<int> held = {0};
  for (const RelativeRound& round : sched.rounds) {
    const int t = round.round_index;
    for (int k : round.chunk_offsets) {
      if (!held.count(k)) {
        std::ostringstream msg;
        msg << "offset " << k << " not held at round " << t;
        out.push_back({t, msg.str()});
      }
    }
    for (int k : round.received_offsets(n)) {
      if (k >= 0 && k < n) held.insert(k);
    }
  }
  if (static_cast<int>(held.size()) != n) {
    std::set<int> missing;
    for (int k = 0; k < n; k++) {
      if (!held.count(k)) missing.insert(k);
    }
    out.push_back({-1, "coverage gap " + offsets_to_string(missing)});
  }
}

void check_reduce_scatter_flow(const RelativeSchedule& sched, std::vector<Violation>& out) {
  const int n = sched.n_ranks;
  std::set<int> pending;  // destination offsets this rank still accumulates
  for (int k = 0; k < n; k++) pending.insert(k);
  for (const RelativeRound& round : sched.rounds) {
    const int t = round.round_index;
    std::set<int> sent;
    for (int k : round.chunk_offsets) {
      if (!pending.count(k)) {
        std::ostringstream msg;
        msg << "offset " << k << " already forwarded before round " << t;
        out.push_back({t, msg.str()});
      }
      if (k == 0) {
        std::ostringstream msg;
        msg << "offset 0 (own destination) forwarded at round " << t;
        out.push_back({t, msg.str()});
      }
      sent.insert(k);
    }
    for (int k : round.received_offsets(n)) {
      if (k < 0 || k >= n) continue;
      std::ostringstream msg;
      if (sent.count(k)) {
        msg << "contribution for offset " << k << " arrives in round " << t
            << " which also forwards it";
        out.push_back({t, msg.str()});
      } else if (!pending.count(k)) {
        msg << "contribution for offset " << k << " arrives at round " << t
            << " after its accumulator was forwarded";
        out.push_back({t, msg.str()});
      }
    }
    for (int k : sent) pending.erase(k);
  }
  pending.erase(0);
  if (!pending.empty()) {
    out.push_back({-1, "offsets never forwarded " + offsets_to_string(pending)});
  }
}

}  // namespace

std::vector<Violation> validate(const RelativeSchedule& sched) {
  std::vector<Violation> out;
  if (sched.n_ranks < 1) {
    out.push_back({-1, "n_ranks must be >= 1"});
    return out;
  }
  if (sched.n_ranks == 1) {
    if (!sched.rounds.empty()) out.push_back({-1, "single-rank schedule must be empty"});
    return out;
  }
  check_structure(sched, out);
  if (!out.empty()) return out;  // flow checks assume well-formed rounds
  if (sched.kind == CollectiveKind::AllGather) {
    check_allgather_flow(sched, out);
  } else {
    check_reduce_scatter_flow(sched, out);
  }
  return out;
}

}  // namespace patsim
