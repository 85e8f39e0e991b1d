#include "incomp/schema.hpp"

#include <algorithm>
#include <cctype>
#include <memory>
#include <set>

#include "incomp/error.hpp"
#include "incomp/rng.hpp"

namespace incomp {

namespace {

constexpr int kMaxOperands = 64;
constexpr int kMaxHeight = 62;
constexpr const char* kAppendSymbol = "\xE2\x8A\x95";  // ⊕

struct Ast {
  bool leaf = false;
  std::string name;
  Op op = Op::Add;
  std::unique_ptr<Ast> left;
  std::unique_ptr<Ast> right;
};

class ExpressionParser {
 public:
  explicit ExpressionParser(const std::string& text) : text_(text) {}

  std::unique_ptr<Ast> parse() {
    auto root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  std::unique_ptr<Ast> parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      skip_space();
      if (!consume("+")) return lhs;
      lhs = join(Op::Add, std::move(lhs), parse_product());
    }
  }

  std::unique_ptr<Ast> parse_product() {
    auto lhs = parse_atom();
    for (;;) {
      skip_space();
      if (consume("*")) {
        lhs = join(Op::Mul, std::move(lhs), parse_atom());
      } else if (consume("^") || consume(kAppendSymbol)) {
        lhs = join(Op::Append, std::move(lhs), parse_atom());
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Ast> parse_atom() {
    skip_space();
    if (consume("(")) {
      auto inner = parse_sum();
      skip_space();
      if (!consume(")")) fail("expected ')'");
      return inner;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_ || std::isdigit(static_cast<unsigned char>(text_[start]))) {
      fail("expected operand name");
    }
    auto leaf = std::make_unique<Ast>();
    leaf->leaf = true;
    leaf->name = text_.substr(start, pos_ - start);
    return leaf;
  }

  static std::unique_ptr<Ast> join(Op op, std::unique_ptr<Ast> l, std::unique_ptr<Ast> r) {
    auto node = std::make_unique<Ast>();
    node->op = op;
    node->left = std::move(l);
    node->right = std::move(r);
    return node;
  }

  bool consume(const char* token) {
    const std::string_view tok(token);
    if (text_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError,
                what + " at offset " + std::to_string(pos_) + " in '" + text_ + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

std::string render(const SchemaTree& tree, SchemaNodeId id,
                   const std::vector<std::string>& atoms) {
  const auto& node = tree.node(id);
  if (node.source) return atoms[node.operand - 1];
  return "(" + render(tree, {id.level + 1, id.index * 2}, atoms) + symbol(node.op) +
         render(tree, {id.level + 1, id.index * 2 + 1}, atoms) + ")";
}

}  // namespace

std::string to_string(SchemaNodeId id) {
  return "(" + std::to_string(id.level) + "," + std::to_string(id.index) + ")";
}

Op parse_op(const std::string& token) {
  if (token == "+" || token == "add") return Op::Add;
  if (token == "*" || token == "mul") return Op::Mul;
  if (token == "^" || token == kAppendSymbol || token == "append") return Op::Append;
  throw Error(ErrorCode::ParseError, "unknown operator '" + token + "'");
}

const char* symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Mul: return "*";
    case Op::Append: return kAppendSymbol;
  }
  return "?";
}

std::uint64_t apply(Op op, std::uint64_t left, std::uint64_t right) noexcept {
  switch (op) {
    case Op::Add: return left + right;
    case Op::Mul: return left * right;
    case Op::Append: return mix64(mix64(left) + 0xD6E8FEB86659FD93ULL * (right | 1U) + right);
  }
  return 0;
}

SchemaTree SchemaTree::complete(int k, const std::vector<Op>& ops) {
  if (k < 2 || (k & (k - 1)) != 0) {
    throw Error(ErrorCode::NotPowerOfTwo, "complete schema needs K = 2^r >= 2, got " +
                                              std::to_string(k));
  }
  if (k > kMaxOperands) {
    throw Error(ErrorCode::InvalidParameters, "at most 64 operands are supported");
  }
  int h = 0;
  while ((1 << h) < k) ++h;
  const std::size_t internal = static_cast<std::size_t>(k - 1);
  if (ops.size() != 1 && ops.size() != internal) {
    throw Error(ErrorCode::ArityMismatch, "expected 1 or " + std::to_string(internal) +
                                              " operators, got " + std::to_string(ops.size()));
  }
  SchemaTree tree;
  tree.height_ = h;
  std::size_t next_op = 0;
  for (int level = h - 1; level >= 0; --level) {
    for (std::uint64_t j = 0; j < (1ULL << level); ++j) {
      SchemaNode node;
      node.op = ops.size() == 1 ? ops[0] : ops[next_op++];
      tree.nodes_[{level, j}] = node;
    }
  }
  for (int operand = 1; operand <= k; ++operand) {
    SchemaNode leaf;
    leaf.source = true;
    leaf.operand = operand;
    const SchemaNodeId id{h, static_cast<std::uint64_t>(operand - 1)};
    tree.nodes_[id] = leaf;
    tree.sources_.push_back(id);
    tree.names_.push_back("x" + std::to_string(operand));
  }
  tree.finalize();
  return tree;
}

SchemaTree SchemaTree::from_expression(const std::string& expr) {
  auto ast = ExpressionParser(expr).parse();
  SchemaTree tree;
  std::set<std::string> seen;

  // Left-to-right depth-first walk assigns operand indices in reading order.
  struct Frame {
    const Ast* node;
    SchemaNodeId id;
  };
  std::vector<Frame> stack{{ast.get(), kRoot}};
  while (!stack.empty()) {
    const Frame frame = stack.back();
    stack.pop_back();
    if (frame.id.level > kMaxHeight) {
      throw Error(ErrorCode::InvalidParameters, "expression nests deeper than 62 levels");
    }
    tree.height_ = std::max(tree.height_, frame.id.level);
    SchemaNode node;
    if (frame.node->leaf) {
      if (!seen.insert(frame.node->name).second) {
        throw Error(ErrorCode::RepeatedOperand, "operand '" + frame.node->name + "' repeats");
      }
      node.source = true;
      node.operand = static_cast<int>(tree.sources_.size()) + 1;
      tree.sources_.push_back(frame.id);
      tree.names_.push_back(frame.node->name);
    } else {
      node.op = frame.node->op;
      stack.push_back({frame.node->right.get(), {frame.id.level + 1, frame.id.index * 2 + 1}});
      stack.push_back({frame.node->left.get(), {frame.id.level + 1, frame.id.index * 2}});
    }
    tree.nodes_[frame.id] = node;
  }
  if (tree.k() > kMaxOperands) {
    throw Error(ErrorCode::InvalidParameters, "at most 64 operands are supported");
  }
  tree.finalize();
  return tree;
}

void SchemaTree::finalize() {
  // Children are visited before parents when walking levels bottom-up.
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& [id, node] = *it;
    if (node.source) {
      node.leaf_mask = 1ULL << (node.operand - 1);
    } else {
      node.leaf_mask = nodes_.at({id.level + 1, id.index * 2}).leaf_mask |
                       nodes_.at({id.level + 1, id.index * 2 + 1}).leaf_mask;
    }
  }
}

int SchemaTree::leaf_count() const noexcept {
  return static_cast<int>(std::count_if(sources_.begin(), sources_.end(),
                                        [&](SchemaNodeId id) { return id.level == height_; }));
}

const SchemaNode& SchemaTree::node(SchemaNodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::IdNotInTree, to_string(id));
  return it->second;
}

std::vector<SchemaNodeId> SchemaTree::internal_ids() const {
  std::vector<SchemaNodeId> ids;
  for (const auto& [id, node] : nodes_) {
    if (!node.source) ids.push_back(id);
  }
  return ids;
}

SchemaNodeId SchemaTree::source_id(int operand) const {
  if (operand < 1 || operand > k()) {
    throw Error(ErrorCode::ArityMismatch, "operand index " + std::to_string(operand));
  }
  return sources_[operand - 1];
}

const std::string& SchemaTree::operand_name(int operand) const {
  source_id(operand);
  return names_[operand - 1];
}

std::uint64_t SchemaTree::full_mask() const noexcept { return nodes_.at(kRoot).leaf_mask; }

SchemaNodeId SchemaTree::sibling_of(SchemaNodeId id) const {
  if (!contains(id)) throw Error(ErrorCode::IdNotInTree, to_string(id));
  if (id == kRoot) throw Error(ErrorCode::RootHasNoParent, "root has no sibling");
  return sibling_index(id);
}

SchemaNodeId SchemaTree::parent_of(SchemaNodeId id) const {
  if (!contains(id)) throw Error(ErrorCode::IdNotInTree, to_string(id));
  if (id == kRoot) throw Error(ErrorCode::RootHasNoParent, "root has no parent");
  return parent_index(id);
}

std::string SchemaTree::expression() const { return render(*this, kRoot, names_); }

std::uint64_t operand_value(int operand, std::uint64_t round) noexcept {
  return mix64((static_cast<std::uint64_t>(operand) << 40U) ^ round);
}

Payload leaf_payload(const SchemaTree& tree, int operand, std::uint64_t round) {
  return {tree.operand_name(operand) + "[" + std::to_string(round) + "]",
          operand_value(operand, round)};
}

Payload reference_evaluate(const SchemaTree& tree, std::span<const Payload> operands) {
  if (static_cast<int>(operands.size()) != tree.k()) {
    throw Error(ErrorCode::ArityMismatch, "expected " + std::to_string(tree.k()) +
                                              " operands, got " +
                                              std::to_string(operands.size()));
  }
  struct Eval {
    const SchemaTree& tree;
    std::span<const Payload> operands;

    Payload operator()(SchemaNodeId id) const {
      const auto& node = tree.node(id);
      if (node.source) return operands[node.operand - 1];
      const Payload l = (*this)({id.level + 1, id.index * 2});
      const Payload r = (*this)({id.level + 1, id.index * 2 + 1});
      return {"(" + l.trace + symbol(node.op) + r.trace + ")", apply(node.op, l.value, r.value)};
    }
  };
  return Eval{tree, operands}(kRoot);
}

Partial combine(const SchemaTree& tree, const Partial& a, const Partial& b) {
  if (a.round != b.round) {
    throw Error(ErrorCode::RoundMismatch,
                std::to_string(a.round) + " vs " + std::to_string(b.round));
  }
  if (a.id == kRoot || b.id == kRoot || sibling_index(a.id) != b.id || !tree.contains(a.id) ||
      !tree.contains(b.id)) {
    throw Error(ErrorCode::NonSibling, to_string(a.id) + " and " + to_string(b.id));
  }
  const Partial& left = is_left(a.id) ? a : b;
  const Partial& right = is_left(a.id) ? b : a;
  const SchemaNodeId parent = parent_index(a.id);
  const Op op = tree.node(parent).op;
  Partial out;
  out.id = parent;
  out.round = a.round;
  out.payload.trace.reserve(left.payload.trace.size() + right.payload.trace.size() + 5);
  out.payload.trace += '(';
  out.payload.trace += left.payload.trace;
  out.payload.trace += symbol(op);
  out.payload.trace += right.payload.trace;
  out.payload.trace += ')';
  out.payload.value = apply(op, left.payload.value, right.payload.value);
  return out;
}

}  // namespace incomp
