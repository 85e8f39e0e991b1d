#include "incomp/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "incomp/error.hpp"
#include "incomp/rng.hpp"

namespace incomp {

namespace {

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
  for (auto& [u, v] : edges) {
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<Edge> cycle_edges(int n) {
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) edges.emplace_back(u, (u + 1) % n);
  return edges;
}

std::vector<Edge> torus_edges(int n, int dim) {
  const int side = static_cast<int>(std::lround(std::pow(n, 1.0 / dim)));
  int check = 1;
  for (int k = 0; k < dim; ++k) check *= side;
  if (check != n || side < 3) {
    throw Error(ErrorCode::InvalidParameters,
                "torus needs n = side^dim with side >= 3 (n=" + std::to_string(n) +
                    ", dim=" + std::to_string(dim) + ")");
  }
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    int stride = 1;
    for (int k = 0; k < dim; ++k) {
      const int coord = (u / stride) % side;
      const int v = u + (((coord + 1) % side) - coord) * stride;
      edges.emplace_back(u, v);
      stride *= side;
    }
  }
  return edges;
}

std::vector<Edge> random_regular_edges(int n, int r, Rng& rng) {
  // Configuration model; the caller retries on rejection.
  std::vector<NodeId> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * r);
  for (int u = 0; u < n; ++u) {
    for (int k = 0; k < r; ++k) stubs.push_back(u);
  }
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    NodeId u = stubs[i];
    NodeId v = stubs[i + 1];
    if (u == v) return {};
    edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  auto sorted = canonical_edges(edges);
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return {};
  return sorted;
}

std::vector<Edge> random_geometric_edges(int n, double radius, Rng& rng) {
  std::vector<double> xs(n), ys(n);
  for (int u = 0; u < n; ++u) {
    xs[u] = uniform01(rng);
    ys[u] = uniform01(rng);
  }
  std::vector<Edge> edges;
  const double r2 = radius * radius;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double dx = xs[u] - xs[v];
      const double dy = ys[u] - ys[v];
      if (dx * dx + dy * dy <= r2) edges.emplace_back(u, v);
    }
  }
  return edges;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidParameters, what);
}

}  // namespace

TopologyKind parse_topology_kind(const std::string& name) {
  static const std::pair<const char*, TopologyKind> table[] = {
      {"cycle", TopologyKind::Cycle},
      {"path", TopologyKind::Path},
      {"star", TopologyKind::Star},
      {"complete", TopologyKind::Complete},
      {"hypercube", TopologyKind::Hypercube},
      {"torus", TopologyKind::Torus},
      {"random_regular", TopologyKind::RandomRegular},
      {"random_geometric", TopologyKind::RandomGeometric},
      {"edge_list", TopologyKind::EdgeList},
  };
  for (const auto& [key, kind] : table) {
    if (name == key) return kind;
  }
  throw Error(ErrorCode::InvalidParameters, "unknown topology kind '" + name + "'");
}

const char* to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Cycle: return "cycle";
    case TopologyKind::Path: return "path";
    case TopologyKind::Star: return "star";
    case TopologyKind::Complete: return "complete";
    case TopologyKind::Hypercube: return "hypercube";
    case TopologyKind::Torus: return "torus";
    case TopologyKind::RandomRegular: return "random_regular";
    case TopologyKind::RandomGeometric: return "random_geometric";
    case TopologyKind::EdgeList: return "edge_list";
  }
  return "?";
}

Graph::Graph(int n, std::vector<Edge> edges, std::vector<double> self_loop)
    : n_(n), edges_(canonical_edges(std::move(edges))), self_loop_(std::move(self_loop)) {
  require(n_ >= 1, "graph needs at least one node");
  if (self_loop_.empty()) self_loop_.assign(n_, 0.0);
  require(static_cast<int>(self_loop_.size()) == n_, "self-loop vector size != n");
  for (double eps : self_loop_) {
    require(eps >= 0.0 && eps < 1.0, "self-loop probability must lie in [0,1)");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto [u, v] = edges_[i];
    require(u >= 0 && v < n_, "edge endpoint out of range");
    require(u != v, "self-edge " + std::to_string(u));
    require(i == 0 || edges_[i - 1] != edges_[i],
            "duplicate edge " + std::to_string(u) + " " + std::to_string(v));
  }
  offsets_.assign(n_ + 1, 0);
  for (const auto& [u, v] : edges_) {
    ++offsets_[u + 1];
    ++offsets_[v + 1];
  }
  for (int u = 0; u < n_; ++u) offsets_[u + 1] += offsets_[u];
  adjacency_.resize(offsets_[n_]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [u, v] : edges_) {
    adjacency_[fill[u]++] = v;
    adjacency_[fill[v]++] = u;
  }
  for (int u = 0; u < n_; ++u) {
    std::sort(adjacency_.begin() + offsets_[u], adjacency_.begin() + offsets_[u + 1]);
  }
  validate(*this);
}

bool Graph::lazy() const noexcept {
  return std::any_of(self_loop_.begin(), self_loop_.end(), [](double e) { return e > 0.0; });
}

Graph Graph::with_self_loops(double eps) const {
  return Graph(n_, edges_, std::vector<double>(n_, eps));
}

std::string Graph::canonical() const {
  std::ostringstream out;
  out << n_ << ' ' << edges_.size() << '\n';
  for (const auto& [u, v] : edges_) out << u << ' ' << v << '\n';
  return out.str();
}

bool is_connected(int n, const std::vector<Edge>& edges) {
  if (n <= 0) return false;
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<char> seen(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

Diagnostics validate(const Graph& g) {
  const int n = g.n();
  std::vector<int> color(n, -1);
  std::queue<NodeId> frontier;
  frontier.push(0);
  color[0] = 0;
  int reached = 1;
  bool bipartite = true;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : g.neighbors(u)) {
      if (color[v] < 0) {
        color[v] = 1 - color[u];
        ++reached;
        frontier.push(v);
      } else if (color[v] == color[u]) {
        bipartite = false;
      }
    }
  }
  if (reached != n) {
    throw Error(ErrorCode::DisconnectedGraph,
                "reached " + std::to_string(reached) + " of " + std::to_string(n) + " nodes");
  }
  Diagnostics d;
  d.n = n;
  d.m = g.edge_count();
  d.d_min = g.degree(0);
  d.d_max = g.degree(0);
  for (int u = 1; u < n; ++u) {
    d.d_min = std::min(d.d_min, g.degree(u));
    d.d_max = std::max(d.d_max, g.degree(u));
  }
  d.avg_degree = 2.0 * static_cast<double>(d.m) / n;
  d.bipartite = bipartite && n > 1;
  return d;
}

Graph build_topology(const TopologySpec& spec) {
  const int n = spec.n;
  std::vector<double> loops;
  if (spec.self_loop > 0.0) loops.assign(std::max(n, 1), spec.self_loop);

  auto finish = [&](std::vector<Edge> edges, int nodes) {
    if (!loops.empty()) loops.assign(nodes, spec.self_loop);
    return Graph(nodes, std::move(edges), loops);
  };

  switch (spec.kind) {
    case TopologyKind::Cycle:
      require(n >= 3, "cycle needs n >= 3");
      return finish(cycle_edges(n), n);
    case TopologyKind::Path: {
      require(n >= 2, "path needs n >= 2");
      std::vector<Edge> edges;
      for (int u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
      return finish(std::move(edges), n);
    }
    case TopologyKind::Star: {
      require(n >= 2, "star needs n >= 2");
      std::vector<Edge> edges;
      for (int u = 1; u < n; ++u) edges.emplace_back(0, u);
      return finish(std::move(edges), n);
    }
    case TopologyKind::Complete: {
      require(n >= 2, "complete graph needs n >= 2");
      std::vector<Edge> edges;
      for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
      }
      return finish(std::move(edges), n);
    }
    case TopologyKind::Hypercube: {
      require(n >= 2 && (n & (n - 1)) == 0, "hypercube needs n a power of two");
      std::vector<Edge> edges;
      for (int u = 0; u < n; ++u) {
        for (int bit = 1; bit < n; bit <<= 1) {
          if ((u & bit) == 0) edges.emplace_back(u, u | bit);
        }
      }
      return finish(std::move(edges), n);
    }
    case TopologyKind::Torus:
      require(spec.dim >= 1, "torus dimension must be >= 1");
      return finish(torus_edges(n, spec.dim), n);
    case TopologyKind::RandomRegular: {
      const int r = spec.degree;
      require(r >= 2 && r < n && (static_cast<long>(n) * r) % 2 == 0,
              "random regular needs 2 <= r < n and n*r even");
      // Rejections of the pairing are far more frequent than disconnection,
      // so they get a larger budget than the connectivity retries.
      for (int attempt = 0; attempt < spec.max_retries * 1000; ++attempt) {
        Rng rng(split_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
        auto edges = random_regular_edges(n, r, rng);
        if (!edges.empty() && is_connected(n, edges)) return finish(std::move(edges), n);
      }
      throw Error(ErrorCode::ConnectivityFailure, "random regular: retries exhausted");
    }
    case TopologyKind::RandomGeometric: {
      require(n >= 2 && spec.radius > 0.0, "random geometric needs n >= 2 and r > 0");
      for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        Rng rng(split_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
        auto edges = random_geometric_edges(n, spec.radius, rng);
        if (is_connected(n, edges)) return finish(std::move(edges), n);
      }
      throw Error(ErrorCode::ConnectivityFailure,
                  "random geometric G(" + std::to_string(n) + ", " + std::to_string(spec.radius) +
                      ") disconnected after " + std::to_string(spec.max_retries) + " retries");
    }
    case TopologyKind::EdgeList: {
      int nodes = n;
      for (const auto& [u, v] : spec.edges) {
        require(u >= 0 && v >= 0, "negative node index in edge list");
        nodes = std::max(nodes, std::max(u, v) + 1);
      }
      return finish(spec.edges, nodes);
    }
  }
  throw Error(ErrorCode::InvalidParameters, "unhandled topology kind");
}

std::vector<Edge> read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long u = 0;
    long v = 0;
    if (!(fields >> u)) continue;
    std::string rest;
    if (!(fields >> v) || (fields >> rest)) {
      throw Error(ErrorCode::ParseError,
                  "edge list line " + std::to_string(line_no) + ": expected 'u v'");
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return edges;
}

std::vector<Edge> read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

TransitionMatrix transition_matrix(const Graph& g) {
  const int n = g.n();
  TransitionMatrix p = TransitionMatrix::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    const double eps = g.self_loop_prob(u);
    const auto nbrs = g.neighbors(u);
    p(u, u) = eps;
    if (nbrs.empty()) {
      p(u, u) = 1.0;
      continue;
    }
    const double share = (1.0 - eps) / static_cast<double>(nbrs.size());
    for (NodeId v : nbrs) p(u, v) = share;
  }
  return p;
}

}  // namespace incomp
