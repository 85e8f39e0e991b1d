#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace incomp {

/// Position in the computation tree: level 0 is the root, children of
/// (i, j) are (i+1, 2j) and (i+1, 2j+1).
struct SchemaNodeId {
  int level = 0;
  std::uint64_t index = 0;

  auto operator<=>(const SchemaNodeId&) const = default;
};

std::string to_string(SchemaNodeId id);

constexpr SchemaNodeId kRoot{0, 0};

/// Sibling (i, j xor 1). Pure index arithmetic; see SchemaTree for checked variants.
constexpr SchemaNodeId sibling_index(SchemaNodeId id) noexcept { return {id.level, id.index ^ 1U}; }
constexpr SchemaNodeId parent_index(SchemaNodeId id) noexcept { return {id.level - 1, id.index >> 1U}; }
constexpr bool is_left(SchemaNodeId id) noexcept { return (id.index & 1U) == 0; }

enum class Op { Add, Mul, Append };

Op parse_op(const std::string& token);
const char* symbol(Op op);

/// Concrete interpretation: wrap-around 64-bit + and *, and an
/// order-sensitive hash for Append.
std::uint64_t apply(Op op, std::uint64_t left, std::uint64_t right) noexcept;

/// Value of a partial result: a parenthesized trace over operand atoms and
/// its numeric evaluation.
struct Payload {
  std::string trace;
  std::uint64_t value = 0;

  bool operator==(const Payload&) const = default;
};

struct SchemaNode {
  bool source = false;
  int operand = 0;  // 1..K when source
  Op op = Op::Add;  // when internal
  std::uint64_t leaf_mask = 0;
};

class SchemaTree {
 public:
  /// Complete tree over K = 2^r sources. `ops` is either a single tag applied
  /// everywhere or one tag per internal node, listed deepest level first and
  /// left to right within a level (Fig. 1a order: x, x, +).
  static SchemaTree complete(int k, const std::vector<Op>& ops);
  static SchemaTree complete(int k, Op op) { return complete(k, std::vector<Op>{op}); }

  /// Parses an infix expression over distinct identifiers. '*' and the
  /// append operator ('^' or "⊕") bind tighter than '+'; all are left
  /// associative. Operand indices follow left-to-right order of appearance.
  static SchemaTree from_expression(const std::string& expr);

  int k() const noexcept { return static_cast<int>(sources_.size()); }
  int height() const noexcept { return height_; }
  int leaf_count() const noexcept;
  std::size_t internal_count() const noexcept { return nodes_.size() - sources_.size(); }

  bool contains(SchemaNodeId id) const { return nodes_.count(id) != 0; }
  const SchemaNode& node(SchemaNodeId id) const;
  const std::map<SchemaNodeId, SchemaNode>& nodes() const noexcept { return nodes_; }
  std::vector<SchemaNodeId> internal_ids() const;

  SchemaNodeId source_id(int operand) const;
  const std::string& operand_name(int operand) const;
  std::uint64_t full_mask() const noexcept;

  SchemaNodeId sibling_of(SchemaNodeId id) const;
  SchemaNodeId parent_of(SchemaNodeId id) const;

  /// Expression string with the tree's operand names, e.g. "((x1*x2)+(x3*x4))".
  std::string expression() const;

 private:
  SchemaTree() = default;
  void finalize();

  std::map<SchemaNodeId, SchemaNode> nodes_;
  std::vector<SchemaNodeId> sources_;
  std::vector<std::string> names_;
  int height_ = 0;
};

/// Atom for operand `k` of `round`: trace "name[round]" and a hashed value.
Payload leaf_payload(const SchemaTree& tree, int operand, std::uint64_t round);
std::uint64_t operand_value(int operand, std::uint64_t round) noexcept;

/// Bottom-up evaluation of the root over K operand payloads, by recursion
/// over the tree. Independent of `combine`.
Payload reference_evaluate(const SchemaTree& tree, std::span<const Payload> operands);

/// Round-tagged partial result at a schema position.
struct Partial {
  SchemaNodeId id;
  std::uint64_t round = 0;
  Payload payload;
};

/// Combines two sibling partials into their parent. Orientation comes from
/// index parity, never from argument order.
Partial combine(const SchemaTree& tree, const Partial& a, const Partial& b);

}  // namespace incomp
