#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "incomp/rng.hpp"
#include "incomp/schema.hpp"
#include "incomp/topology.hpp"

namespace incomp {

enum class Mode { Fixed, Flexible };

Mode parse_mode(const std::string& name);
const char* to_string(Mode mode);

struct ArrivalModel {
  enum class Kind { Bernoulli, ClockDrift };
  Kind kind = Kind::Bernoulli;
  double beta = 0.0;
  double gamma = 0.0;  // clock-drift variance
};

struct Packet {
  Partial data;
  std::int64_t birth_slot = 0;
  std::uint64_t uid = 0;
};

struct PacketKey {
  std::uint64_t round = 0;
  SchemaNodeId id;

  auto operator<=>(const PacketKey&) const = default;
};

struct PacketKeyHash {
  std::size_t operator()(const PacketKey& k) const noexcept {
    return static_cast<std::size_t>(
        mix64(k.round * 0x9E3779B97F4A7C15ULL ^ (k.id.index << 7U) ^ static_cast<unsigned>(k.id.level)));
  }
};

/// Transmission queue Q(u): uniform random removal by swap-with-last, with
/// an index for same-round sibling lookup.
class TransmissionQueue {
 public:
  void push(Packet p);
  Packet take(std::size_t pos);
  Packet take_random(Rng& rng) { return take(uniform_index(rng, packets_.size())); }
  std::optional<std::size_t> find(const PacketKey& key) const;

  std::size_t size() const noexcept { return packets_.size(); }
  bool empty() const noexcept { return packets_.empty(); }
  const std::vector<Packet>& packets() const noexcept { return packets_; }

 private:
  std::vector<Packet> packets_;
  std::unordered_map<PacketKey, std::size_t, PacketKeyHash> where_;
};

struct NodeState {
  TransmissionQueue q;
  std::map<PacketKey, Packet> c;  // operand buffer (fixed mode only)
};

struct SimConfig {
  Mode mode = Mode::Fixed;
  std::map<SchemaNodeId, NodeId> mapping;  // phi, fixed mode
  std::vector<NodeId> sources;             // operand k -> node, index k-1
  NodeId sink = 0;
  ArrivalModel arrival;
  std::uint64_t seed = 1;
  bool cascade = false;         // flexible: recombine a fresh result against Q
  std::uint64_t max_rounds = 0;  // stop generating after this round; 0 = never
  double burn_in = 0.2;          // fraction of slots excluded from c-hat
  std::int64_t slot_cap = 100'000'000;
  bool keep_payloads = true;
  bool record_moves = false;
};

struct RoundRecord {
  std::vector<std::int64_t> appearance;  // per operand, -1 until generated
  std::int64_t appearance_max = -1;
  std::int64_t completion = -1;
};

struct ConsumedRoot {
  std::uint64_t round = 0;
  std::int64_t slot = 0;
  Payload payload;
};

struct StopCondition {
  std::int64_t slots = 0;
  std::uint64_t rounds = 0;

  static StopCondition after_slots(std::int64_t t) { return {t, 0}; }
  static StopCondition after_rounds(std::uint64_t l) { return {0, l}; }
};

struct Metrics {
  std::int64_t slots = 0;
  std::vector<RoundRecord> rounds;  // index r-1
  std::uint64_t ell = 0;            // completed prefix of rounds measured
  std::int64_t tau_app = -1;
  std::int64_t tau_fk = -1;
  double tau_bar = 0.0;
  std::vector<std::int32_t> in_system;  // Q plus C, after each slot
  std::vector<std::int32_t> in_queues;  // Q only
  std::vector<std::int64_t> max_queue;  // per node, |Q|
  double c_hat = 0.0;
  std::vector<ConsumedRoot> consumed;
  std::uint64_t completed = 0;
  std::uint64_t oracle_mismatches = 0;
};

/// One simulation instance. Single-threaded; independent instances share no
/// mutable state.
class Simulation {
 public:
  Simulation(Graph graph, SchemaTree tree, SimConfig config);

  /// Advances one slot: arrivals, send phase, receive phase, absorption.
  void step();

  Metrics run(StopCondition stop);

  /// Snapshot of everything measured so far; `ell` limits the rounds used for
  /// tau (0 = longest completed prefix).
  Metrics metrics(std::uint64_t ell = 0) const;

  std::int64_t slot() const noexcept { return slot_; }
  const Graph& graph() const noexcept { return graph_; }
  const SchemaTree& tree() const noexcept { return tree_; }
  const SimConfig& config() const noexcept { return config_; }
  const NodeState& node(NodeId u) const { return nodes_.at(u); }
  std::uint64_t completed_prefix() const noexcept { return completed_prefix_; }
  const std::vector<std::pair<NodeId, NodeId>>& last_moves() const noexcept { return moves_; }

  /// Places a packet directly into Q(u), bypassing arrivals. For tests.
  void inject(NodeId u, Partial data);

  /// Leaf-cover conservation over all open rounds. Returns a description of
  /// the first violation, or nullopt.
  std::optional<std::string> check_leaf_cover() const;

 private:
  void arrivals();
  void generate(int operand, std::uint64_t round);
  void accept(NodeId u, Packet p, std::int64_t completion_slot);
  void consume(Packet p, std::int64_t completion_slot);
  void record_slot();
  Packet make_packet(Partial data);
  RoundRecord& round_record(std::uint64_t round);

  Graph graph_;
  SchemaTree tree_;
  SimConfig config_;
  Rng rng_;
  std::vector<NodeState> nodes_;
  std::vector<std::optional<SchemaNodeId>> role_;  // phi^-1(u)
  std::int64_t slot_ = 0;
  std::uint64_t next_uid_ = 0;

  std::vector<std::uint64_t> next_round_;  // per operand
  using Scheduled = std::pair<std::int64_t, std::uint64_t>;  // (slot, round)
  std::vector<std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>>> drift_;

  std::vector<RoundRecord> rounds_;
  std::vector<std::uint64_t> generated_mask_;
  std::uint64_t completed_prefix_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t mismatches_ = 0;
  std::vector<ConsumedRoot> consumed_;

  std::vector<std::int32_t> in_system_;
  std::vector<std::int32_t> in_queues_;
  std::vector<std::uint8_t> delayed_;  // max_u 1{|Q(u)| >= 2}
  std::vector<std::int64_t> max_queue_;

  std::vector<std::pair<NodeId, NodeId>> moves_;
  std::vector<std::vector<std::pair<NodeId, Packet>>> inbox_;
  std::vector<Packet> kept_;
  std::vector<NodeId> kept_at_;
};

/// Deterministic spread of K sources over V \ {sink} (the sink is used only
/// when K = n).
std::vector<NodeId> spread_sources(int n, int k, NodeId sink);

/// Random injective placement of the tree's internal nodes onto V.
std::map<SchemaNodeId, NodeId> random_mapping(const SchemaTree& tree, int n, std::uint64_t seed);

}  // namespace incomp
