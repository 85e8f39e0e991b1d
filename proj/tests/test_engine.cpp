#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "incomp/engine.hpp"
#include "incomp/error.hpp"

using namespace incomp;

namespace {

Graph cycle(int n) { return build_topology({.kind = TopologyKind::Cycle, .n = n}); }
Graph path(int n) { return build_topology({.kind = TopologyKind::Path, .n = n}); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

SimConfig base(Mode mode, std::vector<NodeId> sources, NodeId sink, double beta, std::uint64_t seed = 1) {
  SimConfig c;
  c.mode = mode;
  c.sources = std::move(sources);
  c.sink = sink;
  c.arrival.beta = beta;
  c.seed = seed;
  return c;
}

Partial leaf(const SchemaTree& t, int operand, std::uint64_t round) {
  return {t.source_id(operand), round, leaf_payload(t, operand, round)};
}

// Per-source transition counts of a single wandering packet.
std::map<std::pair<NodeId, NodeId>, int> walk_counts(const Graph& g, int slots) {
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  SimConfig c = base(Mode::Flexible, {0, 1}, 0, 0.0, 77);
  c.record_moves = true;
  Simulation sim(g, t, c);
  sim.inject(0, leaf(t, 1, 1));  // its sibling never appears
  std::map<std::pair<NodeId, NodeId>, int> counts;
  for (int i = 0; i < slots; ++i) {
    sim.step();
    REQUIRE(sim.last_moves().size() == 1);
    ++counts[sim.last_moves().front()];
  }
  return counts;
}

}  // namespace

TEST_CASE("routing follows the push law on a 4-cycle") {
  const auto counts = walk_counts(cycle(4), 100'000);
  for (NodeId u = 0; u < 4; ++u) {
    const int left = counts.count({u, (u + 3) % 4}) ? counts.at({u, (u + 3) % 4}) : 0;
    const int right = counts.count({u, (u + 1) % 4}) ? counts.at({u, (u + 1) % 4}) : 0;
    const double frac = static_cast<double>(right) / (left + right);
    CHECK(std::abs(frac - 0.5) <= 0.01);
  }
}

TEST_CASE("routing with laziness passes a chi-square test") {
  const double eps = 0.25;
  const Graph g = build_topology({.kind = TopologyKind::Star, .n = 4}).with_self_loops(eps);
  const auto counts = walk_counts(g, 200'000);
  // Centre 0: stays w.p. eps, otherwise uniform over 3 leaves. Leaves: stay or go to 0.
  std::map<NodeId, int> totals;
  for (const auto& [move, n] : counts) totals[move.first] += n;
  double chi2 = 0.0;
  int dof = 0;
  for (const auto& [u, total] : totals) {
    std::vector<std::pair<NodeId, double>> expected;
    expected.push_back({u, eps});
    for (NodeId v : g.neighbors(u)) expected.push_back({v, (1 - eps) / g.degree(u)});
    for (const auto& [v, p] : expected) {
      const double e = p * total;
      const double o = counts.count({u, v}) ? counts.at({u, v}) : 0;
      chi2 += (o - e) * (o - e) / e;
    }
    dof += static_cast<int>(expected.size()) - 1;
  }
  // 3 + 1 + 1 + 1 = 6 degrees of freedom; 0.999 quantile is 22.46.
  CHECK(dof == 6);
  CHECK(chi2 < 22.46);
}

TEST_CASE("fixed mode combines at the host node and clears the buffer") {
  const SchemaTree t = SchemaTree::complete(4, {Op::Mul, Op::Mul, Op::Add});
  SimConfig c = base(Mode::Fixed, {0, 1, 2, 3}, 3, 0.0);
  c.mapping = {{{1, 0}, 1}, {{1, 1}, 2}, {{0, 0}, 3}};
  Simulation sim(path(4), t, c);
  sim.inject(0, leaf(t, 1, 1));
  sim.step();
  REQUIRE(sim.node(1).c.size() == 1);
  CHECK(sim.node(1).q.empty());
  sim.inject(0, leaf(t, 2, 1));
  sim.step();
  CHECK(sim.node(1).c.empty());
  REQUIRE(sim.node(1).q.size() == 1);
  const Packet& p = sim.node(1).q.packets().front();
  CHECK(p.data.id == SchemaNodeId{1, 0});
  CHECK(p.data.payload.trace == "(x1[1]*x2[1])");
}

TEST_CASE("flexible mode ignores round mismatches") {
  const SchemaTree t = SchemaTree::complete(4, Op::Add);
  SimConfig c = base(Mode::Flexible, {0, 1, 2, 3}, 3, 0.0);
  Simulation sim(path(4), t, c);
  const Partial a{{1, 0}, 3, reference_evaluate(SchemaTree::complete(2, Op::Add),
                                                 std::vector<Payload>{{"x1[3]", 1}, {"x2[3]", 2}})};
  Partial b = a;
  b.id = {1, 1};
  b.round = 5;
  // Node 1 sends its packet first to 0 or 2; node 0 then delivers to 1.
  sim.inject(0, b);
  sim.inject(1, a);
  for (int i = 0; i < 50; ++i) {
    sim.step();
    int count = 0;
    for (NodeId u = 0; u < 4; ++u) {
      count += static_cast<int>(sim.node(u).q.size());
      CHECK(sim.node(u).c.empty());
      for (const auto& p : sim.node(u).q.packets()) CHECK(p.data.id.level == 1);
    }
    CHECK(count == 2);
  }
}

TEST_CASE("flexible siblings of one round eventually meet") {
  const SchemaTree t = SchemaTree::complete(2, Op::Append);
  const Graph g = build_topology({.kind = TopologyKind::Complete, .n = 5});
  SimConfig c = base(Mode::Flexible, {1, 2}, 0, 0.0);
  Simulation sim(g, t, c);
  sim.inject(3, leaf(t, 1, 1));
  sim.inject(4, leaf(t, 2, 1));
  int guard = 0;
  while (sim.completed_prefix() < 1 && guard++ < 100'000) sim.step();
  const Metrics m = sim.metrics();
  REQUIRE(m.consumed.size() == 1);
  CHECK(m.consumed[0].payload.trace == "(x1[1]⊕x2[1])");
}

TEST_CASE("initialisation errors") {
  const SchemaTree t = SchemaTree::complete(4, Op::Add);
  const Graph g = cycle(6);
  SimConfig c = base(Mode::Fixed, {0, 1, 2, 3}, 5, 0.1);
  c.mapping = {{{1, 0}, 1}, {{1, 1}, 1}, {{0, 0}, 2}};
  CHECK(code_of([&] { Simulation(g, t, c); }) == ErrorCode::NonInjectiveMapping);
  c.mapping = {{{1, 0}, 1}, {{0, 0}, 2}};
  CHECK(code_of([&] { Simulation(g, t, c); }) == ErrorCode::SizeMismatch);
  c.mapping = random_mapping(t, 6, 3);
  c.sources = {0, 1, 1, 3};
  CHECK(code_of([&] { Simulation(g, t, c); }) == ErrorCode::SourcesNotDistinct);
  c.sources = {0, 1, 2};
  CHECK(code_of([&] { Simulation(g, t, c); }) == ErrorCode::SizeMismatch);
  c.sources = {0, 1, 2, 3};
  c.arrival.beta = 1.5;
  CHECK(code_of([&] { Simulation(g, t, c); }) == ErrorCode::InvalidParameters);
  CHECK_NOTHROW(Simulation(g, t, base(Mode::Flexible, {0, 1, 2, 3}, 5, 0.1)));
}

TEST_CASE("random mapping is injective over internal nodes") {
  const SchemaTree t = SchemaTree::complete(8, Op::Add);
  const auto m = random_mapping(t, 10, 4);
  CHECK(m.size() == 7);
  std::set<NodeId> hosts;
  for (const auto& [id, u] : m) {
    CHECK_FALSE(t.node(id).source);
    hosts.insert(u);
  }
  CHECK(hosts.size() == 7);
  CHECK(random_mapping(t, 10, 4) == m);
}

TEST_CASE("spread sources skip the sink") {
  const auto s = spread_sources(10, 4, 0);
  CHECK(s.size() == 4);
  CHECK(std::find(s.begin(), s.end(), 0) == s.end());
  CHECK(spread_sources(4, 4, 2).size() == 4);
}

TEST_CASE("single-source identity schema on one edge completes one slot after generation") {
  const SchemaTree t = SchemaTree::from_expression("x1");
  Simulation sim(path(2), t, base(Mode::Flexible, {1}, 0, 0.002, 3));
  const Metrics m = sim.run(StopCondition::after_slots(20'000));
  REQUIRE(m.completed > 10);
  for (std::uint64_t r = 0; r < m.completed; ++r) {
    CHECK(m.rounds[r].completion - m.rounds[r].appearance_max == 1);
  }
}

TEST_CASE("oracle on the complete graph, K=2 flexible") {
  const SchemaTree t = SchemaTree::complete(2, Op::Append);
  const Graph g = build_topology({.kind = TopologyKind::Complete, .n = 4});
  Simulation sim(g, t, base(Mode::Flexible, spread_sources(4, 2, 0), 0, 0.05, 9));
  const Metrics m = sim.run(StopCondition::after_rounds(100));
  CHECK(m.oracle_mismatches == 0);
  CHECK(m.consumed.size() >= 100);
  for (const auto& root : m.consumed) {
    const std::vector<Payload> ops = {leaf_payload(t, 1, root.round), leaf_payload(t, 2, root.round)};
    CHECK(root.payload == reference_evaluate(t, ops));
  }
}

TEST_CASE("per-slot invariants across modes and arrival models") {
  struct Case {
    Mode mode;
    bool cascade;
    ArrivalModel::Kind kind;
    double beta;
  };
  const SchemaTree t = SchemaTree::from_expression("((y1*y2)+y3)^y4");
  const Graph g = build_topology({.kind = TopologyKind::Torus, .n = 16, .dim = 2});
  for (const Case& cs : {Case{Mode::Fixed, false, ArrivalModel::Kind::Bernoulli, 0.05},
                         Case{Mode::Flexible, false, ArrivalModel::Kind::Bernoulli, 0.05},
                         Case{Mode::Flexible, true, ArrivalModel::Kind::Bernoulli, 0.05},
                         Case{Mode::Fixed, false, ArrivalModel::Kind::ClockDrift, 0.05},
                         Case{Mode::Flexible, false, ArrivalModel::Kind::Bernoulli, 0.3}}) {
    SimConfig c = base(cs.mode, spread_sources(16, 4, 5), 5, cs.beta, 21);
    c.cascade = cs.cascade;
    c.arrival.kind = cs.kind;
    c.arrival.gamma = 4.0;
    c.record_moves = true;
    if (cs.mode == Mode::Fixed) c.mapping = random_mapping(t, 16, 8);
    Simulation sim(g, t, c);
    std::map<NodeId, SchemaNodeId> role;
    for (const auto& [id, u] : c.mapping) role[u] = id;
    for (int slot = 0; slot < 3000; ++slot) {
      sim.step();
      const auto err = sim.check_leaf_cover();
      REQUIRE_MESSAGE(!err, *err);
      std::set<NodeId> senders;
      for (const auto& [u, v] : sim.last_moves()) CHECK(senders.insert(u).second);
      for (NodeId u = 0; u < 16; ++u) {
        const auto& buffer = sim.node(u).c;
        if (cs.mode == Mode::Flexible) {
          CHECK(buffer.empty());
        } else {
          for (const auto& [key, p] : buffer) {
            REQUIRE(role.count(u));
            CHECK(t.parent_of(p.data.id) == role.at(u));
          }
        }
      }
    }
    const Metrics m = sim.metrics();
    CHECK(m.oracle_mismatches == 0);
    for (const auto& r : m.rounds) {
      if (r.completion >= 0) CHECK(r.completion >= r.appearance_max);
    }
  }
}

TEST_CASE("clock drift with zero variance is periodic") {
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  SimConfig c = base(Mode::Flexible, {1, 2}, 0, 0.1);
  c.arrival.kind = ArrivalModel::Kind::ClockDrift;
  Simulation sim(cycle(5), t, c);
  const Metrics m = sim.run(StopCondition::after_slots(200));
  REQUIRE(m.rounds.size() >= 15);
  for (std::size_t r = 0; r < 15; ++r) {
    for (auto a : m.rounds[r].appearance) CHECK(a == static_cast<std::int64_t>(10 * (r + 1)));
  }
}

TEST_CASE("runs are deterministic") {
  const SchemaTree t = SchemaTree::complete(4, Op::Append);
  SimConfig c = base(Mode::Fixed, spread_sources(8, 4, 0), 0, 0.05, 123);
  c.mapping = random_mapping(t, 8, 2);
  auto once = [&] {
    Simulation sim(cycle(8), t, c);
    return sim.run(StopCondition::after_slots(5000));
  };
  const Metrics a = once();
  const Metrics b = once();
  CHECK(a.in_system == b.in_system);
  CHECK(a.max_queue == b.max_queue);
  CHECK(a.c_hat == b.c_hat);
  REQUIRE(a.consumed.size() == b.consumed.size());
  for (std::size_t i = 0; i < a.consumed.size(); ++i) {
    CHECK(a.consumed[i].slot == b.consumed[i].slot);
    CHECK(a.consumed[i].payload == b.consumed[i].payload);
  }
  c.seed = 124;
  Simulation other(cycle(8), t, c);
  CHECK(other.run(StopCondition::after_slots(5000)).in_system != a.in_system);
}

TEST_CASE("slot cap guards runs that cannot finish") {
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  SimConfig c = base(Mode::Flexible, {1, 2}, 0, 0.0);
  c.slot_cap = 1000;
  Simulation sim(cycle(5), t, c);
  CHECK(code_of([&] { sim.run(StopCondition::after_rounds(1)); }) == ErrorCode::SlotCapReached);
}

TEST_CASE("delay indicator estimate") {
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  Simulation quiet(cycle(6), t, base(Mode::Flexible, {1, 3}, 0, 0.0));
  CHECK(quiet.run(StopCondition::after_slots(100)).c_hat == 0.0);
  Simulation busy(cycle(6), t, base(Mode::Flexible, {1, 3}, 0, 1.0));
  CHECK(busy.run(StopCondition::after_slots(2000)).c_hat > 0.9);
}
