#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "incomp/error.hpp"
#include "incomp/schema.hpp"

using namespace incomp;

namespace {

std::vector<Payload> numbered(const SchemaTree& t, std::vector<std::uint64_t> values) {
  std::vector<Payload> out;
  for (int k = 1; k <= t.k(); ++k) out.push_back({t.operand_name(k), values[k - 1]});
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// Folds sibling pairs in a random order until only the root remains.
Payload random_fold(const SchemaTree& t, const std::vector<Payload>& leaves, std::mt19937_64& rng) {
  std::map<SchemaNodeId, Partial> live;
  for (int k = 1; k <= t.k(); ++k) live[t.source_id(k)] = {t.source_id(k), 1, leaves[k - 1]};
  while (live.size() > 1) {
    std::vector<SchemaNodeId> ready;
    for (const auto& [id, p] : live) {
      if (id.level > 0 && is_left(id) && live.count(sibling_index(id))) ready.push_back(id);
    }
    REQUIRE_FALSE(ready.empty());
    const SchemaNodeId left = ready[rng() % ready.size()];
    const Partial a = live.at(left);
    const Partial b = live.at(sibling_index(left));
    live.erase(left);
    live.erase(sibling_index(left));
    const Partial c = rng() % 2 ? combine(t, a, b) : combine(t, b, a);
    live[c.id] = c;
  }
  return live.begin()->second.payload;
}

}  // namespace

TEST_CASE("Fig. 1a complete tree") {
  const SchemaTree t = SchemaTree::complete(4, {Op::Mul, Op::Mul, Op::Add});
  CHECK(t.height() == 2);
  CHECK(t.internal_count() == 3);
  CHECK(t.node({1, 0}).op == Op::Mul);
  CHECK(t.node({0, 0}).op == Op::Add);
  const Payload r = reference_evaluate(t, numbered(t, {1, 2, 3, 4}));
  CHECK(r.value == 14);
  CHECK(r.trace == "((x1*x2)+(x3*x4))");
}

TEST_CASE("Fig. 1b non-complete tree") {
  const SchemaTree t = SchemaTree::from_expression("((y1*y2)+y3)*y4");
  CHECK(t.height() == 3);
  CHECK(t.k() == 4);
  CHECK(t.source_id(1) == SchemaNodeId{3, 0});
  CHECK(t.source_id(2) == SchemaNodeId{3, 1});
  CHECK(t.source_id(3) == SchemaNodeId{2, 1});
  CHECK(t.source_id(4) == SchemaNodeId{1, 1});
  CHECK(reference_evaluate(t, numbered(t, {1, 2, 3, 4})).value == 20);
}

TEST_CASE("small and larger complete trees") {
  const SchemaTree two = SchemaTree::complete(2, Op::Add);
  CHECK(two.internal_count() == 1);
  CHECK(two.height() == 1);
  for (int k : {2, 4, 8, 16, 32, 64}) {
    CHECK(SchemaTree::complete(k, Op::Append).internal_count() == static_cast<std::size_t>(k - 1));
  }
  const SchemaTree eight = SchemaTree::complete(8, Op::Append);
  CHECK(eight.height() == 3);
  CHECK(eight.internal_count() == 7);
}

TEST_CASE("expression parser agrees with the complete builder") {
  CHECK(SchemaTree::from_expression("x1+x2").expression() == SchemaTree::complete(2, Op::Add).expression());
  const SchemaTree a = SchemaTree::from_expression("((a+b)+(c+d))");
  const SchemaTree b = SchemaTree::complete(4, Op::Add);
  std::set<SchemaNodeId> ia;
  std::set<SchemaNodeId> ib;
  for (const auto& [id, n] : a.nodes()) ia.insert(id);
  for (const auto& [id, n] : b.nodes()) ib.insert(id);
  CHECK(ia == ib);
  CHECK(a.expression() == "((a+b)+(c+d))");
  // '*' binds tighter than '+'.
  CHECK(SchemaTree::from_expression("a+b*c").expression() == "(a+(b*c))");
  CHECK(SchemaTree::from_expression("a^b").node({0, 0}).op == Op::Append);
}

TEST_CASE("schema construction errors") {
  CHECK(code_of([] { SchemaTree::complete(3, Op::Add); }) == ErrorCode::NotPowerOfTwo);
  CHECK(code_of([] { SchemaTree::complete(1, Op::Add); }) == ErrorCode::NotPowerOfTwo);
  CHECK(code_of([] { SchemaTree::from_expression("a+a"); }) == ErrorCode::RepeatedOperand);
  CHECK(code_of([] { SchemaTree::from_expression("(a+b"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { SchemaTree::from_expression("a+"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { SchemaTree::from_expression("a b"); }) == ErrorCode::ParseError);
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  const std::vector<Payload> three = {{"a", 1}, {"b", 2}, {"c", 3}};
  CHECK(code_of([&] { reference_evaluate(t, three); }) == ErrorCode::ArityMismatch);
}

TEST_CASE("append is order sensitive") {
  const SchemaTree t = SchemaTree::complete(2, Op::Append);
  const std::vector<Payload> ab = {{"a", 1}, {"b", 2}};
  const std::vector<Payload> ba = {{"b", 2}, {"a", 1}};
  const Payload x = reference_evaluate(t, ab);
  const Payload y = reference_evaluate(t, ba);
  CHECK(x.trace == "(a⊕b)");
  CHECK(y.trace == "(b⊕a)");
  CHECK(x.value != y.value);
}

TEST_CASE("combine orients by index parity") {
  const SchemaTree t = SchemaTree::complete(4, {Op::Mul, Op::Mul, Op::Add});
  const Partial x1{{2, 0}, 1, {"x1", 3}};
  const Partial x2{{2, 1}, 1, {"x2", 5}};
  const Partial forward = combine(t, x1, x2);
  const Partial swapped = combine(t, x2, x1);
  CHECK(forward.id == SchemaNodeId{1, 0});
  CHECK(forward.payload.trace == "(x1*x2)");
  CHECK(forward.payload == swapped.payload);
  CHECK(forward.payload.value == 15);

  const Partial left{{1, 0}, 1, {"(x1*x2)", 2}};
  const Partial right{{1, 1}, 1, {"(x3*x4)", 12}};
  CHECK(combine(t, left, right).payload.trace == "((x1*x2)+(x3*x4))");

  CHECK(code_of([&] { combine(t, x1, Partial{{2, 1}, 2, {"x2", 5}}); }) == ErrorCode::RoundMismatch);
  CHECK(code_of([&] { combine(t, x1, Partial{{2, 2}, 1, {"x3", 5}}); }) == ErrorCode::NonSibling);
}

TEST_CASE("sibling and parent arithmetic") {
  const SchemaTree t = SchemaTree::complete(4, Op::Add);
  CHECK(t.sibling_of({2, 2}) == SchemaNodeId{2, 3});
  CHECK(t.parent_of({2, 3}) == SchemaNodeId{1, 1});
  CHECK(code_of([&] { t.parent_of(kRoot); }) == ErrorCode::RootHasNoParent);
  CHECK(code_of([&] { t.parent_of({3, 0}); }) == ErrorCode::IdNotInTree);
  CHECK(code_of([&] { t.sibling_of({2, 9}); }) == ErrorCode::IdNotInTree);
}

TEST_CASE("value tracks the trace arithmetic") {
  const SchemaTree t = SchemaTree::from_expression("(a*b)+(c*d)*e");
  const Payload r = reference_evaluate(t, numbered(t, {2, 3, 4, 5, 6}));
  CHECK(r.value == 2 * 3 + 4 * 5 * 6);
  // 64-bit wrap-around
  const SchemaTree m = SchemaTree::complete(2, Op::Mul);
  CHECK(reference_evaluate(m, numbered(m, {1ULL << 40, 1ULL << 40})).value == 0);
}

TEST_CASE("fold order does not matter") {
  std::mt19937_64 rng(5);
  const std::vector<SchemaTree> trees = {SchemaTree::complete(8, {Op::Append, Op::Mul, Op::Add, Op::Append,
                                                                  Op::Append, Op::Add, Op::Mul}),
                                         SchemaTree::from_expression("((y1*y2)+y3)^y4"),
                                         SchemaTree::from_expression("a^(b^(c^(d^e)))")};
  for (const auto& t : trees) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Payload> leaves;
      for (int k = 1; k <= t.k(); ++k) leaves.push_back(leaf_payload(t, k, trial + 1));
      CHECK(random_fold(t, leaves, rng) == reference_evaluate(t, leaves));
    }
  }
}

TEST_CASE("distinct permutations give distinct traces") {
  const SchemaTree t = SchemaTree::complete(4, Op::Append);
  std::vector<int> perm = {0, 1, 2, 3};
  std::set<std::string> traces;
  std::set<std::uint64_t> values;
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  do {
    std::vector<Payload> leaves;
    for (int i : perm) leaves.push_back({names[i], static_cast<std::uint64_t>(i + 1)});
    const Payload r = reference_evaluate(t, leaves);
    traces.insert(r.trace);
    values.insert(r.value);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(traces.size() == 24);
  CHECK(values.size() == 24);
}

TEST_CASE("leaf payloads are round tagged") {
  const SchemaTree t = SchemaTree::complete(2, Op::Add);
  const Payload p = leaf_payload(t, 2, 7);
  CHECK(p.trace == "x2[7]");
  CHECK(p.value == operand_value(2, 7));
  CHECK(operand_value(2, 7) != operand_value(2, 8));
}
