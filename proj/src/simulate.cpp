#include "patsim/simulate.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <type_traits>
#include <vector>

namespace patsim {

namespace {

constexpr std::int64_t kElementBytes = 8;  // int64 and double payloads

int peer_of(int rank, int peer, bool exchange, int n) {
  return exchange ? (rank ^ std::abs(peer)) : mod_ranks(std::int64_t{rank} + peer, n);
}

int source_of(int rank, int peer, bool exchange, int n) {
  return exchange ? (rank ^ std::abs(peer)) : mod_ranks(std::int64_t{rank} - peer, n);
}

int origin_of(int rank, int offset, bool exchange, int n) {
  return exchange ? (rank ^ offset) : mod_ranks(std::int64_t{rank} - offset, n);
}

template <class T>
T fold_one(T a, T b) {
  if constexpr (std::is_same_v<T, std::int64_t>) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) +
                                     static_cast<std::uint64_t>(b));
  } else {
    return a + b;
  }
}

template <class T>
void fold_into(std::vector<T>& acc, const std::vector<T>& value) {
  for (size_t i = 0; i < acc.size(); i++) acc[i] = fold_one(acc[i], value[i]);
}

// Runs fn(rank) once per rank. Parallel mode stripes ranks over worker
// threads; every phase writes only rank-local state, so the partitioning
// cannot change results.
template <class Fn>
void for_each_rank(int n, const RunOptions& options, Fn&& fn) {
  if (options.mode == ExecMode::Lockstep || n <= 1) {
    for (int rank = 0; rank < n; rank++) fn(rank);
    return;
  }
  int workers = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int rank = 0; rank < n; rank++) fn(rank);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; w++) {
    pool.emplace_back([&fn, w, workers, n] {
      for (int rank = w; rank < n; rank += workers) fn(rank);
    });
  }
  for (std::thread& t : pool) t.join();
}

void ensure_schedule(const RelativeSchedule& sched, CollectiveKind kind) {
  if (sched.kind != kind) {
    std::ostringstream msg;
    msg << "schedule kind is " << to_string(sched.kind) << ", expected " << to_string(kind);
    throw SimulationError(msg.str());
  }
  std::vector<Violation> violations = validate(sched);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid schedule (" << violations.size() << " violation(s)); first: "
        << violations.front().message;
    throw InvalidScheduleError(msg.str(), std::move(violations));
  }
}

template <class T>
void ensure_payload(const RelativeSchedule& sched, const Payload<T>& payload, bool reduce_scatter) {
  const std::int64_t want = reduce_scatter
                                ? std::int64_t{sched.n_ranks} * sched.n_ranks
                                : std::int64_t{sched.n_ranks};
  std::ostringstream msg;
  if (payload.n_ranks != sched.n_ranks) {
    msg << "payload is for " << payload.n_ranks << " ranks, schedule for " << sched.n_ranks;
    throw PayloadShapeError(msg.str());
  }
  if (payload.elements_per_chunk < 1) throw PayloadShapeError("elements_per_chunk must be >= 1");
  if (static_cast<std::int64_t>(payload.chunks.size()) != want) {
    msg << "payload has " << payload.chunks.size() << " chunks, expected " << want;
    throw PayloadShapeError(msg.str());
  }
  for (const std::vector<T>& chunk : payload.chunks) {
    if (static_cast<int>(chunk.size()) != payload.elements_per_chunk) {
      throw PayloadShapeError("all chunks must have elements_per_chunk elements");
    }
  }
}

struct StatsBuilder {
  ExecStats stats;
  const Topology* topology = nullptr;
  int n_ranks = 1;
  std::int64_t chunk_bytes = 0;

  void add_round(const RelativeRound& round, int slots_after_round) {
    const std::int64_t message_bytes =
        chunk_bytes * static_cast<std::int64_t>(round.chunk_offsets.size());
    stats.rounds++;
    stats.messages += n_ranks;
    stats.max_chunks_per_message =
        std::max(stats.max_chunks_per_message, static_cast<int>(round.chunk_offsets.size()));
    stats.bytes_sent_per_rank += message_bytes;
    if (topology != nullptr) {
      stats.bytes_by_topology_level[round_level(round, n_ranks, *topology)] += message_bytes;
    }
    stats.occupancy_per_round.push_back(slots_after_round);
    stats.peak_intermediate_slots = std::max(stats.peak_intermediate_slots, slots_after_round);
  }
};

template <class T>
struct Mailbox {
  struct Message {
    int receiver = -1;
    std::vector<std::vector<T>> data;  // one entry per chunk offset, in send order
  };
  std::vector<Message> slots;

  explicit Mailbox(int n) : slots(n) {}
  Message& outgoing(int sender) { return slots[sender]; }
  // Rendezvous keyed by (round, sender, receiver): the receiver claims the
  // message its round-derived source addressed to it.
  const Message& incoming(int receiver, int source) const {
    const Message& msg = slots[source];
    assert(msg.receiver == receiver);
    (void)receiver;
    return msg;
  }
};

template <class T>
CollectiveResult<T> run_allgather_impl(const RelativeSchedule& sched, const Payload<T>& payload,
                                       const RunOptions& options) {
  ensure_schedule(sched, CollectiveKind::AllGather);
  ensure_payload(sched, payload, false);

  const int n = sched.n_ranks;
  const int elems = payload.elements_per_chunk;

  CollectiveResult<T> result;
  result.outputs.assign(n, std::vector<T>(static_cast<size_t>(n) * elems));
  for (int r = 0; r < n; r++) {
    std::copy(payload.chunks[r].begin(), payload.chunks[r].end(),
              result.outputs[r].begin() + static_cast<size_t>(r) * elems);
  }

  // Last round forwarding each offset; a received chunk is staged only while
  // a later forward still needs it.
  std::vector<int> last_send(n, -1);
  for (const RelativeRound& round : sched.rounds) {
    for (int k : round.chunk_offsets) {
      if (k != 0) last_send[k] = round.round_index;
    }
  }

  std::vector<std::map<int, std::vector<T>>> staged(n);
  Mailbox<T> mailbox(n);
  StatsBuilder builder{ExecStats{}, options.topology, n, std::int64_t{elems} * kElementBytes};

  for (const RelativeRound& round : sched.rounds) {
    const int t = round.round_index;
    const std::vector<int> recv_offsets = round.received_offsets(n);

    // Send phase: every rank snapshots its message. Own data comes straight
    // from the input; everything else from the staging buffer.
    for_each_rank(n, options, [&](int rank) {
      auto& msg = mailbox.outgoing(rank);
      msg.receiver = peer_of(rank, round.peer_send_offset, round.exchange, n);
      msg.data.clear();
      msg.data.reserve(round.chunk_offsets.size());
      for (int k : round.chunk_offsets) {
        msg.data.push_back(k == 0 ? payload.chunks[rank] : staged[rank].at(k));
      }
    });

    // Deliver phase: write arrivals to their final output slot, stage the
    // ones a later round forwards, and drop staged chunks whose last forward
    // was this round.
    for_each_rank(n, options, [&](int rank) {
      const int source = source_of(rank, round.peer_send_offset, round.exchange, n);
      const auto& msg = mailbox.incoming(rank, source);
      for (size_t i = 0; i < recv_offsets.size(); i++) {
        const int k = recv_offsets[i];
        const int origin = origin_of(rank, k, round.exchange, n);
        std::copy(msg.data[i].begin(), msg.data[i].end(),
                  result.outputs[rank].begin() + static_cast<size_t>(origin) * elems);
        if (last_send[k] > t) staged[rank][k] = msg.data[i];
      }
      for (int k : round.chunk_offsets) {
        if (k != 0 && last_send[k] == t) staged[rank].erase(k);
      }
    });

    builder.add_round(round, static_cast<int>(staged[0].size()));
#ifndef NDEBUG
    for (int r = 1; r < n; r++) assert(staged[r].size() == staged[0].size());
#endif
  }
  assert(n == 1 || staged[0].empty());
  result.stats = std::move(builder.stats);
  return result;
}

template <class T>
CollectiveResult<T> run_reduce_scatter_impl(const RelativeSchedule& sched,
                                            const Payload<T>& payload,
                                            const RunOptions& options) {
  ensure_schedule(sched, CollectiveKind::ReduceScatter);
  ensure_payload(sched, payload, true);

  const int n = sched.n_ranks;
  const int elems = payload.elements_per_chunk;
  const auto contribution = [&](int rank, int dest) -> const std::vector<T>& {
    return payload.chunks[static_cast<size_t>(rank) * n + dest];
  };

  CollectiveResult<T> result;
  result.outputs.reserve(n);
  for (int r = 0; r < n; r++) result.outputs.push_back(contribution(r, r));

  // Partial accumulators per destination offset. Created by the first
  // arrival, folded in arrival order, released by the forwarding round.
  std::vector<std::map<int, std::vector<T>>> acc(n);
  Mailbox<T> mailbox(n);
  StatsBuilder builder{ExecStats{}, options.topology, n, std::int64_t{elems} * kElementBytes};

  for (const RelativeRound& round : sched.rounds) {
    const std::vector<int> recv_offsets = round.received_offsets(n);

    // Send phase: message value = accumulated arrivals, own contribution
    // folded last at send time (no extra slot for it).
    for_each_rank(n, options, [&](int rank) {
      auto& msg = mailbox.outgoing(rank);
      msg.receiver = peer_of(rank, round.peer_send_offset, round.exchange, n);
      msg.data.clear();
      msg.data.reserve(round.chunk_offsets.size());
      for (int k : round.chunk_offsets) {
        const int dest = origin_of(rank, k, round.exchange, n);
        const auto it = acc[rank].find(k);
        if (it == acc[rank].end()) {
          msg.data.push_back(contribution(rank, dest));
        } else {
          std::vector<T> value = it->second;
          fold_into(value, contribution(rank, dest));
          msg.data.push_back(std::move(value));
        }
      }
    });

    // Deliver phase: offset-0 arrivals reduce into the user output; other
    // arrivals reduce into (or open) the accumulator. Sent accumulators are
    // released afterwards.
    for_each_rank(n, options, [&](int rank) {
      const int source = source_of(rank, round.peer_send_offset, round.exchange, n);
      const auto& msg = mailbox.incoming(rank, source);
      for (size_t i = 0; i < recv_offsets.size(); i++) {
        const int k = recv_offsets[i];
        if (k == 0) {
          fold_into(result.outputs[rank], msg.data[i]);
        } else {
          const auto it = acc[rank].find(k);
          if (it == acc[rank].end()) {
            acc[rank][k] = msg.data[i];
          } else {
            fold_into(it->second, msg.data[i]);
          }
        }
      }
      for (int k : round.chunk_offsets) acc[rank].erase(k);
    });

    builder.add_round(round, static_cast<int>(acc[0].size()));
#ifndef NDEBUG
    for (int r = 1; r < n; r++) assert(acc[r].size() == acc[0].size());
#endif
  }
  assert(n == 1 || acc[0].empty());
  result.stats = std::move(builder.stats);
  return result;
}

}  // namespace

CollectiveResult<std::int64_t> run_allgather(const RelativeSchedule& sched,
                                             const Payload<std::int64_t>& payload,
                                             const RunOptions& options) {
  return run_allgather_impl(sched, payload, options);
}

CollectiveResult<double> run_allgather(const RelativeSchedule& sched,
                                       const Payload<double>& payload,
                                       const RunOptions& options) {
  return run_allgather_impl(sched, payload, options);
}

CollectiveResult<std::int64_t> run_reduce_scatter(const RelativeSchedule& sched,
                                                  const Payload<std::int64_t>& payload,
                                                  ReduceOp op, const RunOptions& options) {
  if (op != ReduceOp::WrappingIntSum) {
    throw UnsupportedOpError("UnsupportedOp: integer payloads reduce with WrappingIntSum");
  }
  return run_reduce_scatter_impl(sched, payload, options);
}

CollectiveResult<double> run_reduce_scatter(const RelativeSchedule& sched,
                                            const Payload<double>& payload, ReduceOp op,
                                            const RunOptions& options) {
  if (op != ReduceOp::FloatSum) {
    throw UnsupportedOpError("UnsupportedOp: float payloads reduce with FloatSum");
  }
  return run_reduce_scatter_impl(sched, payload, options);
}

void write_trace_csv(std::ostream& out, const RelativeSchedule& sched, std::int64_t chunk_bytes) {
  out << "round,dim,split,sender,receiver,chunks,bytes\n";
  for (const RelativeRound& round : sched.rounds) {
    const std::int64_t bytes =
        chunk_bytes * static_cast<std::int64_t>(round.chunk_offsets.size());
    for (int sender = 0; sender < sched.n_ranks; sender++) {
      const int receiver = peer_of(sender, round.peer_send_offset, round.exchange, sched.n_ranks);
      out << round.round_index << ',' << round.dimension << ',' << round.split_index << ','
          << sender << ',' << receiver << ',' << round.chunk_offsets.size() << ',' << bytes
          << '\n';
    }
  }
}

}  // namespace patsim
