#include "incomp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "incomp/error.hpp"

namespace incomp {

Mode parse_mode(const std::string& name) {
  if (name == "fixed") return Mode::Fixed;
  if (name == "flexible") return Mode::Flexible;
  throw Error(ErrorCode::InvalidParameters, "unknown mode '" + name + "'");
}

const char* to_string(Mode mode) { return mode == Mode::Fixed ? "fixed" : "flexible"; }

void TransmissionQueue::push(Packet p) {
  where_[PacketKey{p.data.round, p.data.id}] = packets_.size();
  packets_.push_back(std::move(p));
}

Packet TransmissionQueue::take(std::size_t pos) {
  Packet out = std::move(packets_[pos]);
  where_.erase(PacketKey{out.data.round, out.data.id});
  if (pos + 1 != packets_.size()) {
    packets_[pos] = std::move(packets_.back());
    where_[PacketKey{packets_[pos].data.round, packets_[pos].data.id}] = pos;
  }
  packets_.pop_back();
  return out;
}

std::optional<std::size_t> TransmissionQueue::find(const PacketKey& key) const {
  auto it = where_.find(key);
  if (it == where_.end()) return std::nullopt;
  return it->second;
}

Simulation::Simulation(Graph graph, SchemaTree tree, SimConfig config)
    : graph_(std::move(graph)),
      tree_(std::move(tree)),
      config_(std::move(config)),
      rng_(config_.seed),
      nodes_(graph_.n()),
      role_(graph_.n()),
      max_queue_(graph_.n(), 0),
      inbox_(graph_.n()) {
  const int n = graph_.n();
  const int k = tree_.k();
  if (static_cast<int>(config_.sources.size()) != k) {
    throw Error(ErrorCode::SizeMismatch, "schema has " + std::to_string(k) + " sources, got " +
                                             std::to_string(config_.sources.size()));
  }
  if (k > n) throw Error(ErrorCode::SizeMismatch, "more sources than network nodes");
  std::set<NodeId> distinct;
  for (NodeId s : config_.sources) {
    if (s < 0 || s >= n) throw Error(ErrorCode::InvalidParameters, "source out of range");
    distinct.insert(s);
  }
  if (static_cast<int>(distinct.size()) != k) {
    throw Error(ErrorCode::SourcesNotDistinct, "source nodes must be distinct");
  }
  if (config_.sink < 0 || config_.sink >= n) {
    throw Error(ErrorCode::InvalidParameters, "sink out of range");
  }
  const auto& a = config_.arrival;
  if (!(a.beta >= 0.0 && a.beta <= 1.0) || a.gamma < 0.0) {
    throw Error(ErrorCode::InvalidParameters, "arrival needs beta in [0,1] and gamma >= 0");
  }
  if (config_.mode == Mode::Fixed) {
    const auto internal = tree_.internal_ids();
    if (config_.mapping.size() != internal.size()) {
      throw Error(ErrorCode::SizeMismatch, "mapping must cover every internal schema node");
    }
    for (const auto& [id, u] : config_.mapping) {
      if (!tree_.contains(id) || tree_.node(id).source) {
        throw Error(ErrorCode::IdNotInTree, "mapping key " + to_string(id) + " is not internal");
      }
      if (u < 0 || u >= n) throw Error(ErrorCode::InvalidParameters, "mapping node out of range");
      if (role_[u]) {
        throw Error(ErrorCode::NonInjectiveMapping,
                    "node " + std::to_string(u) + " hosts two schema nodes");
      }
      role_[u] = id;
    }
  }
  next_round_.assign(k, 1);
  drift_.resize(k);
}

RoundRecord& Simulation::round_record(std::uint64_t round) {
  while (rounds_.size() < round) {
    RoundRecord rec;
    rec.appearance.assign(tree_.k(), -1);
    rounds_.push_back(std::move(rec));
    generated_mask_.push_back(0);
  }
  return rounds_[round - 1];
}

Packet Simulation::make_packet(Partial data) {
  return Packet{std::move(data), slot_, next_uid_++};
}

void Simulation::generate(int operand, std::uint64_t round) {
  RoundRecord& rec = round_record(round);
  rec.appearance[operand - 1] = slot_;
  rec.appearance_max = std::max(rec.appearance_max, slot_);
  generated_mask_[round - 1] |= 1ULL << (operand - 1);
  Partial data{tree_.source_id(operand), round, leaf_payload(tree_, operand, round)};
  // Self-generated packets take the same path as received ones.
  accept(config_.sources[operand - 1], make_packet(std::move(data)), slot_);
}

void Simulation::arrivals() {
  const auto& a = config_.arrival;
  const int k = tree_.k();
  const bool capped = config_.max_rounds != 0;
  if (a.kind == ArrivalModel::Kind::Bernoulli) {
    if (a.beta <= 0.0) return;
    for (int operand = 1; operand <= k; ++operand) {
      if (uniform01(rng_) >= a.beta) continue;
      auto& next = next_round_[operand - 1];
      if (capped && next > config_.max_rounds) continue;
      generate(operand, next++);
    }
    return;
  }
  if (a.beta <= 0.0) return;
  const double sigma = std::sqrt(a.gamma);
  const double horizon = static_cast<double>(slot_) + 12.0 * sigma + 2.0;
  std::normal_distribution<double> drift(0.0, sigma > 0.0 ? sigma : 1.0);
  for (int operand = 1; operand <= k; ++operand) {
    auto& next = next_round_[operand - 1];
    auto& pending = drift_[operand - 1];
    while ((!capped || next <= config_.max_rounds) &&
           static_cast<double>(next) / a.beta <= horizon) {
      const double offset = sigma > 0.0 ? drift(rng_) : 0.0;
      const auto at = static_cast<std::int64_t>(
          std::llround(static_cast<double>(next) / a.beta + offset));
      pending.emplace(std::max<std::int64_t>(at, 1), next);
      ++next;
    }
    while (!pending.empty() && pending.top().first <= slot_) {
      const std::uint64_t round = pending.top().second;
      pending.pop();
      generate(operand, round);
    }
  }
}

void Simulation::consume(Packet p, std::int64_t completion_slot) {
  RoundRecord& rec = round_record(p.data.round);
  rec.completion = completion_slot;
  ++completed_;
  while (completed_prefix_ < rounds_.size() && rounds_[completed_prefix_].completion >= 0) {
    ++completed_prefix_;
  }
  std::vector<Payload> operands;
  operands.reserve(tree_.k());
  for (int operand = 1; operand <= tree_.k(); ++operand) {
    operands.push_back(leaf_payload(tree_, operand, p.data.round));
  }
  if (reference_evaluate(tree_, operands) != p.data.payload) ++mismatches_;
  if (config_.keep_payloads) {
    consumed_.push_back({p.data.round, completion_slot, std::move(p.data.payload)});
  }
}

void Simulation::accept(NodeId u, Packet p, std::int64_t completion_slot) {
  if (p.data.id == kRoot) {
    if (u == config_.sink) {
      consume(std::move(p), completion_slot);
    } else {
      nodes_[u].q.push(std::move(p));
    }
    return;
  }
  NodeState& state = nodes_[u];
  const PacketKey partner{p.data.round, sibling_index(p.data.id)};

  if (config_.mode == Mode::Fixed) {
    const auto& role = role_[u];
    if (!role || parent_index(p.data.id) != *role) {
      state.q.push(std::move(p));
      return;
    }
    auto it = state.c.find(partner);
    if (it == state.c.end()) {
      state.c.emplace(PacketKey{p.data.round, p.data.id}, std::move(p));
      return;
    }
    Packet merged = make_packet(combine(tree_, it->second.data, p.data));
    state.c.erase(it);
    accept(u, std::move(merged), completion_slot);
    return;
  }

  auto pos = state.q.find(partner);
  if (!pos) {
    state.q.push(std::move(p));
    return;
  }
  Packet other = state.q.take(*pos);
  Packet merged = make_packet(combine(tree_, other.data, p.data));
  if (config_.cascade || merged.data.id == kRoot) {
    accept(u, std::move(merged), completion_slot);
  } else {
    state.q.push(std::move(merged));
  }
}

void Simulation::step() {
  const int n = graph_.n();
  if (slot_ >= config_.slot_cap) {
    throw Error(ErrorCode::SlotCapReached, "slot cap " + std::to_string(config_.slot_cap));
  }
  moves_.clear();

  arrivals();

  // Send phase: every node draws from Q_t; deliveries land in Q_{t+1}.
  kept_.clear();
  kept_at_.clear();
  for (NodeId u = 0; u < n; ++u) {
    NodeState& state = nodes_[u];
    if (state.q.empty()) continue;
    NodeId dest = u;
    const double eps = graph_.self_loop_prob(u);
    const auto nbrs = graph_.neighbors(u);
    if (!nbrs.empty() && !(eps > 0.0 && uniform01(rng_) < eps)) {
      dest = nbrs[uniform_index(rng_, nbrs.size())];
    }
    Packet p = state.q.take_random(rng_);
    if (config_.record_moves) moves_.emplace_back(u, dest);
    if (dest == u) {
      kept_.push_back(std::move(p));
      kept_at_.push_back(u);
    } else {
      inbox_[dest].emplace_back(u, std::move(p));
    }
  }
  for (std::size_t i = 0; i < kept_.size(); ++i) nodes_[kept_at_[i]].q.push(std::move(kept_[i]));

  // Receive phase: senders were visited in ascending order, so each inbox is
  // already sorted by sender index.
  const std::int64_t arrival_slot = slot_ + 1;
  for (NodeId v = 0; v < n; ++v) {
    for (auto& [from, p] : inbox_[v]) accept(v, std::move(p), arrival_slot);
    inbox_[v].clear();
  }

  ++slot_;
  record_slot();
}

void Simulation::record_slot() {
  std::int64_t total = 0;
  std::int64_t queued = 0;
  bool delayed = false;
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    const auto q = static_cast<std::int64_t>(nodes_[u].q.size());
    queued += q;
    total += q + static_cast<std::int64_t>(nodes_[u].c.size());
    max_queue_[u] = std::max(max_queue_[u], q);
    delayed = delayed || q >= 2;
  }
  in_system_.push_back(static_cast<std::int32_t>(total));
  in_queues_.push_back(static_cast<std::int32_t>(queued));
  delayed_.push_back(delayed ? 1 : 0);
}

void Simulation::inject(NodeId u, Partial data) {
  if (data.round > 0) {
    RoundRecord& rec = round_record(data.round);
    const std::uint64_t mask = tree_.node(data.id).leaf_mask;
    generated_mask_[data.round - 1] |= mask;
    for (int operand = 1; operand <= tree_.k(); ++operand) {
      if ((mask >> (operand - 1)) & 1U) rec.appearance[operand - 1] = slot_;
    }
    rec.appearance_max = std::max(rec.appearance_max, slot_);
  }
  nodes_.at(u).q.push(make_packet(std::move(data)));
}

Metrics Simulation::run(StopCondition stop) {
  if (stop.slots <= 0 && stop.rounds == 0) {
    throw Error(ErrorCode::InvalidParameters, "stop condition must be positive");
  }
  if (stop.slots > 0) {
    const std::int64_t until = slot_ + stop.slots;
    while (slot_ < until) step();
    return metrics();
  }
  while (completed_prefix_ < stop.rounds) step();
  return metrics(stop.rounds);
}

Metrics Simulation::metrics(std::uint64_t ell) const {
  Metrics m;
  m.slots = slot_;
  m.rounds = rounds_;
  m.in_system = in_system_;
  m.in_queues = in_queues_;
  m.max_queue = max_queue_;
  m.consumed = consumed_;
  m.completed = completed_;
  m.oracle_mismatches = mismatches_;
  m.ell = ell == 0 ? completed_prefix_ : std::min<std::uint64_t>(ell, completed_prefix_);
  if (m.ell > 0) {
    for (std::uint64_t r = 0; r < m.ell; ++r) {
      m.tau_app = std::max(m.tau_app, rounds_[r].appearance_max);
      m.tau_fk = std::max(m.tau_fk, rounds_[r].completion);
    }
    m.tau_bar = static_cast<double>(m.tau_fk) / static_cast<double>(m.ell);
  }
  const auto total = static_cast<std::int64_t>(delayed_.size());
  const auto skip = static_cast<std::int64_t>(std::floor(config_.burn_in * static_cast<double>(total)));
  if (total > skip) {
    const auto hits = std::accumulate(delayed_.begin() + skip, delayed_.end(), std::int64_t{0});
    m.c_hat = static_cast<double>(hits) / static_cast<double>(total - skip);
  }
  return m;
}

std::optional<std::string> Simulation::check_leaf_cover() const {
  std::vector<std::uint64_t> covered(rounds_.size(), 0);
  auto add = [&](const Packet& p) -> std::optional<std::string> {
    const std::uint64_t r = p.data.round;
    if (r == 0 || r > rounds_.size()) return "packet with unknown round " + std::to_string(r);
    if (rounds_[r - 1].completion >= 0) {
      return "round " + std::to_string(r) + " completed but packet " + to_string(p.data.id) +
             " still in system";
    }
    const std::uint64_t mask = tree_.node(p.data.id).leaf_mask;
    if (covered[r - 1] & mask) return "round " + std::to_string(r) + " covers a leaf twice";
    covered[r - 1] |= mask;
    return std::nullopt;
  };
  for (const auto& state : nodes_) {
    for (const auto& p : state.q.packets()) {
      if (auto err = add(p)) return err;
    }
    for (const auto& [key, p] : state.c) {
      if (auto err = add(p)) return err;
    }
  }
  for (std::size_t r = 0; r < rounds_.size(); ++r) {
    if (rounds_[r].completion >= 0) continue;
    if (covered[r] != generated_mask_[r]) {
      return "round " + std::to_string(r + 1) + " leaf cover mismatch";
    }
  }
  return std::nullopt;
}

std::vector<NodeId> spread_sources(int n, int k, NodeId sink) {
  if (k > n) throw Error(ErrorCode::SizeMismatch, "more sources than nodes");
  std::vector<NodeId> pool;
  for (NodeId u = 0; u < n; ++u) {
    if (u != sink || k == n) pool.push_back(u);
  }
  std::vector<NodeId> out;
  const auto size = static_cast<long>(pool.size());
  for (int i = 0; i < k; ++i) out.push_back(pool[static_cast<std::size_t>(i * size / k)]);
  return out;
}

std::map<SchemaNodeId, NodeId> random_mapping(const SchemaTree& tree, int n, std::uint64_t seed) {
  const auto internal = tree.internal_ids();
  if (static_cast<int>(internal.size()) > n) {
    throw Error(ErrorCode::SizeMismatch, "more internal schema nodes than network nodes");
  }
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0);
  Rng rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::map<SchemaNodeId, NodeId> mapping;
  for (std::size_t i = 0; i < internal.size(); ++i) mapping[internal[i]] = nodes[i];
  return mapping;
}

}  // namespace incomp
