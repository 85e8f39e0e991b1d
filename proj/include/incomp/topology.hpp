#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace incomp {

using NodeId = int;
using Edge = std::pair<NodeId, NodeId>;

enum class TopologyKind {
  Cycle,
  Path,
  Star,
  Complete,
  Hypercube,
  Torus,
  RandomRegular,
  RandomGeometric,
  EdgeList,
};

TopologyKind parse_topology_kind(const std::string& name);
const char* to_string(TopologyKind kind);

struct TopologySpec {
  TopologyKind kind = TopologyKind::Cycle;
  int n = 0;
  int dim = 2;            // torus dimension
  int degree = 3;         // random r-regular
  double radius = 0.0;    // random geometric
  std::uint64_t seed = 1;
  int max_retries = 100;
  double self_loop = 0.0;  // uniform laziness epsilon
  std::vector<Edge> edges;  // explicit edge list
};

/// Undirected connected graph with optional per-node self-loop probability.
///
/// Edges are stored canonically (u < v, sorted ascending). Neighbor lists are
/// sorted. Construction rejects duplicate edges, self-edges, out-of-range
/// endpoints and disconnected graphs.
class Graph {
 public:
  Graph(int n, std::vector<Edge> edges, std::vector<double> self_loop = {});

  int n() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const NodeId> neighbors(NodeId u) const {
    return {adjacency_.data() + offsets_[u], adjacency_.data() + offsets_[u + 1]};
  }
  int degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  double self_loop_prob(NodeId u) const { return self_loop_[u]; }
  bool lazy() const noexcept;

  /// Same topology with uniform self-loop probability `eps`.
  Graph with_self_loops(double eps) const;

  /// Byte-stable text form: "n m" header then one "u v" line per edge.
  std::string canonical() const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<int> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<double> self_loop_;
};

struct Diagnostics {
  int n = 0;
  std::size_t m = 0;
  int d_min = 0;
  int d_max = 0;
  double avg_degree = 0.0;
  bool bipartite = false;
};

/// Connectivity and degree summary. Throws DisconnectedGraph.
Diagnostics validate(const Graph& g);

bool is_connected(int n, const std::vector<Edge>& edges);

Graph build_topology(const TopologySpec& spec);

/// Plain text edge list: one "u v" pair per line, '#' starts a comment.
std::vector<Edge> read_edge_list(std::istream& in);
std::vector<Edge> read_edge_list_file(const std::string& path);

/// Row-stochastic push matrix: P(u,u) = eps(u), P(u,v) = (1 - eps(u)) / d(u)
/// for v adjacent to u.
using TransitionMatrix = Eigen::MatrixXd;

TransitionMatrix transition_matrix(const Graph& g);

}  // namespace incomp
