#include "patsim/serialize.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace patsim {

namespace {

using Json = nlohmann::ordered_json;

Algorithm algorithm_from_tag(const std::string& tag) {
  if (tag == "ring") return Algorithm::Ring;
  if (tag == "bruck-nearest") return Algorithm::BruckNearest;
  if (tag == "bruck-farthest") return Algorithm::BruckFarthest;
  if (tag == "recursive-doubling") return Algorithm::RecursiveDoubling;
  if (tag == "pat") return Algorithm::Pat;
  throw ParseError("unknown algorithm tag \"" + tag + "\"");
}

CollectiveKind kind_from_tag(const std::string& tag) {
  if (tag == "allgather") return CollectiveKind::AllGather;
  if (tag == "reducescatter") return CollectiveKind::ReduceScatter;
  throw ParseError("unknown kind \"" + tag + "\"");
}

Json parse(const std::string& text, const char* what) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError(std::string("malformed JSON in ") + what);
  return doc;
}

template <class T>
T field(const Json& obj, const char* name, const char* where) {
  if (!obj.contains(name)) {
    throw ParseError(std::string(where) + " is missing field \"" + name + "\"");
  }
  try {
    return obj.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(where) + " field \"" + name + "\" has the wrong type");
  }
}

}  // namespace

std::string schedule_to_json(const RelativeSchedule& sched, int indent) {
  Json doc;
  doc["algorithm"] = to_string(sched.algorithm);
  doc["kind"] = to_string(sched.kind);
  doc["n_ranks"] = sched.n_ranks;
  Json params = Json::object();
  if (sched.params) {
    params["trees"] = sched.params->trees;
    params["buffer_slots"] = sched.params->buffer_slots;
  }
  doc["params"] = std::move(params);
  Json rounds = Json::array();
  for (const RelativeRound& round : sched.rounds) {
    Json r;
    r["round"] = round.round_index;
    r["dim"] = round.dimension;
    r["split"] = round.split_index;
    r["peer"] = round.peer_send_offset;
    r["chunks"] = round.chunk_offsets;
    rounds.push_back(std::move(r));
  }
  doc["rounds"] = std::move(rounds);
  return doc.dump(indent) + "\n";
}

RelativeSchedule schedule_from_json(const std::string& text) {
  const Json doc = parse(text, "schedule");
  RelativeSchedule sched;
  sched.algorithm = algorithm_from_tag(field<std::string>(doc, "algorithm", "schedule"));
  sched.kind = kind_from_tag(field<std::string>(doc, "kind", "schedule"));
  sched.n_ranks = field<int>(doc, "n_ranks", "schedule");
  const Json params = field<Json>(doc, "params", "schedule");
  if (!params.is_object()) throw ParseError("schedule field \"params\" must be an object");
  if (!params.empty()) {
    sched.params = PatParams{field<int>(params, "trees", "params"),
                             field<int>(params, "buffer_slots", "params")};
  }
  const Json rounds = field<Json>(doc, "rounds", "schedule");
  if (!rounds.is_array()) throw ParseError("schedule field \"rounds\" must be an array");
  // XOR partnering is implied by the algorithm, not stored per round.
  const bool exchange = sched.algorithm == Algorithm::RecursiveDoubling;
  for (const Json& r : rounds) {
    RelativeRound round;
    round.round_index = field<int>(r, "round", "round");
    round.dimension = field<int>(r, "dim", "round");
    round.split_index = field<int>(r, "split", "round");
    round.peer_send_offset = field<int>(r, "peer", "round");
    round.chunk_offsets = field<std::vector<int>>(r, "chunks", "round");
    round.exchange = exchange;
    sched.rounds.push_back(std::move(round));
  }
  return sched;
}

std::string topology_to_json(const Topology& topo, int indent) {
  Json doc;
  Json levels = Json::array();
  for (const TopologyLevel& level : topo.levels) {
    Json l;
    l["span"] = level.span;
    l["alpha_us"] = level.alpha_us;
    l["beta_ns_per_byte"] = level.beta_ns_per_byte;
    levels.push_back(std::move(l));
  }
  doc["levels"] = std::move(levels);
  return doc.dump(indent) + "\n";
}

Topology topology_from_json(const std::string& text) {
  const Json doc = parse(text, "topology");
  const Json levels = field<Json>(doc, "levels", "topology");
  if (!levels.is_array() || levels.empty()) {
    throw ParseError("topology field \"levels\" must be a non-empty array");
  }
  Topology topo;
  for (const Json& l : levels) {
    topo.levels.push_back({field<int>(l, "span", "level"), field<double>(l, "alpha_us", "level"),
                           field<double>(l, "beta_ns_per_byte", "level")});
  }
  try {
    validate_topology(topo);
  } catch (const TopologyError& err) {
    throw ParseError(std::string("invalid topology: ") + err.what());
  }
  return topo;
}

std::string schedule_to_dot(const RelativeSchedule& sched, int origin_rank) {
  if (origin_rank < 0 || origin_rank >= sched.n_ranks) {
    throw RankOutOfRangeError("origin rank out of range");
  }
  const int n = sched.n_ranks;
  std::ostringstream out;
  out << "digraph " << to_string(sched.kind) << "_origin_" << origin_rank << " {\n";
  out << "  label=\"" << to_string(sched.algorithm) << " n=" << n;
  if (sched.params) out << " T=" << sched.params->trees;
  out << ", " << (sched.kind == CollectiveKind::AllGather ? "broadcast" : "reduce")
      << " tree of rank " << origin_rank << "\";\n";
  out << "  node [shape=circle];\n";
  // The rank holding the origin's chunk at offset k is origin+k (origin^k for
  // exchange rounds); each round moves that chunk one peer further.
  for (const RelativeRound& round : sched.rounds) {
    for (int k : round.chunk_offsets) {
      int sender, receiver;
      if (round.exchange) {
        sender = origin_rank ^ k;
        receiver = sender ^ std::abs(round.peer_send_offset);
      } else {
        sender = mod_ranks(std::int64_t{origin_rank} + k, n);
        receiver = mod_ranks(std::int64_t{sender} + round.peer_send_offset, n);
      }
      out << "  " << sender << " -> " << receiver << " [label=\"r" << round.round_index
          << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string cost_csv_header() { return "algo,n,trees,bytes_per_rank,rounds,total_us,top_level_bytes"; }

std::string cost_csv_row(const CostReport& report) {
  char total[64];
  std::snprintf(total, sizeof(total), "%.6f", report.total_us);
  std::ostringstream out;
  out << report.algorithm << ',' << report.n_ranks << ',' << report.trees << ','
      << report.chunk_bytes << ',' << report.round_count << ',' << total << ','
      << report.top_level_bytes;
  return out.str();
}

}  // namespace patsim
