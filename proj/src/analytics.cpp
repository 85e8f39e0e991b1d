#include "incomp/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "incomp/error.hpp"

namespace incomp {

namespace {

constexpr double kFlowEps = 1e-13;

struct SparseRows {
  std::vector<int> offsets;
  std::vector<int> cols;
  std::vector<double> vals;
};

SparseRows sparse_rows(const TransitionMatrix& p) {
  SparseRows s;
  const auto n = static_cast<int>(p.rows());
  s.offsets.assign(n + 1, 0);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (p(u, v) != 0.0) {
        s.cols.push_back(v);
        s.vals.push_back(p(u, v));
      }
    }
    s.offsets[u + 1] = static_cast<int>(s.cols.size());
  }
  return s;
}

void require_square(const TransitionMatrix& p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw Error(ErrorCode::InvalidParameters, "transition matrix must be square and non-empty");
  }
}

// Dinic's algorithm on the directed capacity graph u -> v, cap P(u,v).
class FlowNetwork {
 public:
  explicit FlowNetwork(const TransitionMatrix& p) : n_(static_cast<int>(p.rows())), head_(n_, -1) {
    for (int u = 0; u < n_; ++u) {
      for (int v = 0; v < n_; ++v) {
        if (u != v && p(u, v) > 0.0) add_arc(u, v, p(u, v));
      }
    }
  }

  double max_flow(int s, int t) {
    for (auto& a : arcs_) a.flow = 0.0;
    double total = 0.0;
    level_.assign(n_, -1);
    next_.assign(n_, -1);
    while (bfs(s, t)) {
      next_ = head_;
      for (;;) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= kFlowEps) break;
        total += pushed;
      }
    }
    return total;
  }

 private:
  struct Arc {
    int to;
    int next;
    double cap;
    double flow;
  };

  void add_arc(int u, int v, double cap) {
    arcs_.push_back({v, head_[u], cap, 0.0});
    head_[u] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({u, head_[v], 0.0, 0.0});
    head_[v] = static_cast<int>(arcs_.size()) - 1;
  }

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> frontier;
    level_[s] = 0;
    frontier.push(s);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int e = head_[u]; e >= 0; e = arcs_[e].next) {
        const Arc& a = arcs_[e];
        if (level_[a.to] < 0 && a.cap - a.flow > kFlowEps) {
          level_[a.to] = level_[u] + 1;
          frontier.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double limit) {
    if (u == t) return limit;
    for (int& e = next_[u]; e >= 0; e = arcs_[e].next) {
      Arc& a = arcs_[e];
      const double room = a.cap - a.flow;
      if (room <= kFlowEps || level_[a.to] != level_[u] + 1) continue;
      const double pushed = dfs(a.to, t, std::min(limit, room));
      if (pushed > kFlowEps) {
        a.flow += pushed;
        arcs_[e ^ 1].flow -= pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  int n_;
  std::vector<int> head_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<int> next_;
};

}  // namespace

LogBase parse_log_base(const std::string& name) {
  if (name == "2" || name == "log2") return LogBase::Two;
  if (name == "e" || name == "natural") return LogBase::Natural;
  throw Error(ErrorCode::InvalidParameters, "log base must be '2' or 'e'");
}

double log_in(LogBase base, double x) {
  return base == LogBase::Two ? std::log2(x) : std::log(x);
}

Eigen::VectorXd stationary(const TransitionMatrix& p) {
  require_square(p);
  const auto n = p.rows();
  Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(n, n) - p).transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularSystem, "stationary system is singular (reducible chain?)");
  }
  return lu.solve(rhs);
}

WalkSpectrum spectrum(const TransitionMatrix& p) {
  require_square(p);
  const auto n = p.rows();
  const Eigen::VectorXd pi = stationary(p);
  if (pi.minCoeff() <= 0.0) {
    throw Error(ErrorCode::NumericalFailure, "stationary distribution is not positive");
  }
  const Eigen::VectorXd root = pi.cwiseSqrt();
  Eigen::MatrixXd s = root.asDiagonal() * p * root.cwiseInverse().asDiagonal();
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorCode::NumericalFailure, "chain is not reversible; no symmetric similarity");
  }
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "eigensolver did not converge");
  }
  WalkSpectrum out;
  out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
  out.lambda2 = n > 1 ? out.eigenvalues[1] : 0.0;
  out.spectral_gap = 1.0 - out.lambda2;
  return out;
}

bool is_periodic(const TransitionMatrix& p) {
  require_square(p);
  const auto n = static_cast<int>(p.rows());
  for (int u = 0; u < n; ++u) {
    if (p(u, u) > 0.0) return false;
  }
  std::vector<int> color(n, -1);
  for (int start = 0; start < n; ++start) {
    if (color[start] >= 0) continue;
    color[start] = 0;
    std::queue<int> frontier;
    frontier.push(start);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v = 0; v < n; ++v) {
        if (v == u || (p(u, v) <= 0.0 && p(v, u) <= 0.0)) continue;
        if (color[v] < 0) {
          color[v] = 1 - color[u];
          frontier.push(v);
        } else if (color[v] == color[u]) {
          return false;
        }
      }
    }
  }
  return n > 1;
}

HittingTimes hitting_times(const TransitionMatrix& p, Exec exec) {
  require_square(p);
  const auto n = static_cast<int>(p.rows());
  HittingTimes out;
  out.expected = Eigen::MatrixXd::Zero(n, n);
  bool singular = false;

#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int y = 0; y < n; ++y) {
    if (n == 1) continue;
    Eigen::MatrixXd a(n - 1, n - 1);
    for (int x = 0, i = 0; x < n; ++x) {
      if (x == y) continue;
      for (int v = 0, j = 0; v < n; ++v) {
        if (v == y) continue;
        a(i, j) = (x == v ? 1.0 : 0.0) - p(x, v);
        ++j;
      }
      ++i;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd h = lu.solve(Eigen::VectorXd::Ones(n - 1));
    if (!h.allFinite()) {
#pragma omp atomic write
      singular = true;
      continue;
    }
    for (int x = 0, i = 0; x < n; ++x) {
      if (x == y) continue;
      out.expected(x, y) = h(i++);
    }
  }
  if (singular) throw Error(ErrorCode::SingularSystem, "hitting-time system is singular");
  out.worst = out.expected.maxCoeff();
  return out;
}

std::int64_t mixing_time(const TransitionMatrix& p, double eps, Exec exec,
                         std::int64_t max_steps) {
  require_square(p);
  if (is_periodic(p)) {
    throw Error(ErrorCode::PeriodicChain, "chain is periodic; add laziness (self-loop epsilon)");
  }
  const auto n = static_cast<int>(p.rows());
  const Eigen::VectorXd pi = stationary(p);
  const SparseRows rows = sparse_rows(p);
  const auto nn = static_cast<std::size_t>(n) * n;
  std::vector<double> cur(nn, 0.0), next(nn, 0.0);
  for (int u = 0; u < n; ++u) cur[static_cast<std::size_t>(u) * n + u] = 1.0;

  for (std::int64_t t = 0; t <= max_steps; ++t) {
    double worst = 0.0;
#pragma omp parallel for reduction(max : worst) if (exec == Exec::Parallel)
    for (int u = 0; u < n; ++u) {
      const double* row = cur.data() + static_cast<std::size_t>(u) * n;
      double tv = 0.0;
      for (int v = 0; v < n; ++v) tv += std::abs(row[v] - pi(v));
      worst = std::max(worst, 0.5 * tv);
    }
    if (worst <= eps) return t;

#pragma omp parallel for if (exec == Exec::Parallel)
    for (int u = 0; u < n; ++u) {
      const double* row = cur.data() + static_cast<std::size_t>(u) * n;
      double* out = next.data() + static_cast<std::size_t>(u) * n;
      std::fill(out, out + n, 0.0);
      for (int w = 0; w < n; ++w) {
        const double mass = row[w];
        if (mass == 0.0) continue;
        for (int e = rows.offsets[w]; e < rows.offsets[w + 1]; ++e) out[rows.cols[e]] += mass * rows.vals[e];
      }
    }
    cur.swap(next);
  }
  throw Error(ErrorCode::NumericalFailure, "mixing time exceeds step limit");
}

std::int64_t mixing_time_spectral(const TransitionMatrix& p, double eps, std::int64_t max_steps) {
  require_square(p);
  if (is_periodic(p)) {
    throw Error(ErrorCode::PeriodicChain, "chain is periodic; add laziness (self-loop epsilon)");
  }
  const auto n = p.rows();
  const Eigen::VectorXd pi = stationary(p);
  const Eigen::VectorXd root = pi.cwiseSqrt();
  Eigen::MatrixXd s = root.asDiagonal() * p * root.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "eigensolver did not converge");
  }
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  const Eigen::VectorXd& vals = solver.eigenvalues();
  // P^t = Pi^{-1/2} U diag(lambda^t) U^T Pi^{1/2}
  const Eigen::MatrixXd left = root.cwiseInverse().asDiagonal() * vecs;
  const Eigen::MatrixXd right = vecs.transpose() * root.asDiagonal();
  Eigen::VectorXd powers = Eigen::VectorXd::Ones(n);
  for (std::int64_t t = 0; t <= max_steps; ++t) {
    const Eigen::MatrixXd pt = left * powers.asDiagonal() * right;
    double worst = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
      worst = std::max(worst, 0.5 * (pt.row(u).transpose() - pi).cwiseAbs().sum());
    }
    if (worst <= eps) return t;
    powers = powers.cwiseProduct(vals);
  }
  throw Error(ErrorCode::NumericalFailure, "mixing time exceeds step limit");
}

FundamentalReport fundamental_zvv(const TransitionMatrix& p) {
  require_square(p);
  if (is_periodic(p)) {
    throw Error(ErrorCode::PeriodicChain, "fundamental series diverges for periodic chains");
  }
  const auto n = p.rows();
  FundamentalReport out;
  out.pi = stationary(p);
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(n, n) - p + Eigen::VectorXd::Ones(n) * out.pi.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularSystem, "I - P + 1 pi is singular");
  const Eigen::MatrixXd z = lu.inverse();
  out.z_vv = z.diagonal() - out.pi;
  out.expected_hitting = out.z_vv.cwiseQuotient(out.pi);
  out.lambda2 = spectrum(p).lambda2;
  out.z_bound = 1.0 / (1.0 - out.lambda2);
  out.bound_holds = (out.z_vv.array() <= out.z_bound + 1e-9).all();
  return out;
}

MinCut min_mincut(const TransitionMatrix& p, NodeId sink, Exec exec) {
  require_square(p);
  const auto n = static_cast<int>(p.rows());
  if (sink < 0 || sink >= n) throw Error(ErrorCode::InvalidParameters, "sink out of range");
  MinCut out;
  out.per_node.assign(n, std::numeric_limits<double>::quiet_NaN());
  const FlowNetwork base(p);

#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int i = 0; i < n; ++i) {
    if (i == sink) continue;
    FlowNetwork net = base;
    out.per_node[i] = net.max_flow(i, sink);
  }
  out.delta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (i != sink && out.per_node[i] < out.delta) {
      out.delta = out.per_node[i];
      out.argmin = i;
    }
  }
  if (n == 1) out.delta = 0.0;
  return out;
}

Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidParameters, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational nu(const Graph& g) {
  std::int64_t sum_sq = 0;
  for (int u = 0; u < g.n(); ++u) sum_sq += static_cast<std::int64_t>(g.degree(u)) * g.degree(u);
  const auto m = static_cast<std::int64_t>(g.edge_count());
  return make_rational(g.n() * sum_sq, 4 * m * m);
}

double l_star(const Graph& g, int k, LogBase base) {
  const double n_over_nu = static_cast<double>(g.n()) / nu(g).value();
  return std::max(2.0, std::min(n_over_nu, log_in(base, k)));
}

DegreeS2 degree_s2(const Graph& g) {
  DegreeS2 out;
  for (int u = 0; u < g.n(); ++u) {
    out.sum_squares += static_cast<std::int64_t>(g.degree(u)) * g.degree(u);
  }
  const Rational v = nu(g);
  const auto m = static_cast<__int128>(g.edge_count());
  const __int128 num = 4 * m * m * v.num;
  const __int128 den = static_cast<__int128>(v.den) * g.n();
  out.via_nu = static_cast<std::int64_t>(num / den);
  out.holds = num % den == 0 && out.via_nu == out.sum_squares;
  return out;
}

double rate_lower_formula(double lambda2, int k, int d_min, int d_max) {
  if (k < 2) throw Error(ErrorCode::InvalidParameters, "rate bound needs K >= 2");
  return (1.0 - lambda2) / (2.0 * std::sqrt(3.0) * (k - 1)) *
         std::sqrt(static_cast<double>(d_min) / d_max);
}

RateBounds theorem1_bounds(const Graph& g, int k, NodeId sink) {
  const Diagnostics diag = validate(g);
  const TransitionMatrix p = transition_matrix(g);
  RateBounds out;
  out.lambda2 = spectrum(p).lambda2;
  out.d_min = diag.d_min;
  out.d_max = diag.d_max;
  out.rate_lower = rate_lower_formula(out.lambda2, k, diag.d_min, diag.d_max);
  const MinCut cut = min_mincut(p, sink);
  out.rate_upper = cut.delta;
  out.delta_argmin = cut.argmin;
  out.consistent = out.rate_lower <= out.rate_upper;
  return out;
}

namespace {

LatencyBound finish_bound(const BoundInputs& in, double walk) {
  LatencyBound out;
  out.log_k = log_in(in.base, in.k);
  out.arrival_term = in.beta > 0.0 ? 1.0 / in.beta : std::numeric_limits<double>::infinity();
  if (in.c_hat >= 1.0) {
    out.diverges = true;
    out.walk_term = std::numeric_limits<double>::infinity();
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.walk_term = in.height * walk / (1.0 - in.c_hat);
  out.value = in.constant * out.log_k * (out.arrival_term + out.walk_term);
  return out;
}

void check_inputs(const BoundInputs& in) {
  if (in.c_hat < 0.0) throw Error(ErrorCode::InvalidParameters, "c-hat must be >= 0");
  if (in.k < 1 || in.height < 0) throw Error(ErrorCode::InvalidParameters, "bad K or h");
}

}  // namespace

LatencyBound fixed_latency_bound(const BoundInputs& in, double t_hit) {
  check_inputs(in);
  return finish_bound(in, t_hit);
}

LatencyBound flexible_latency_bound(const BoundInputs& in, double t_mix, double nu_value) {
  check_inputs(in);
  const double log_k = log_in(in.base, in.k);
  const double spread = log_k * log_k + in.n / (nu_value * log_in(in.base, in.n));
  return finish_bound(in, t_mix * spread);
}

LatencyBound theorem2_bound(const Graph& g, const BoundInputs& in) {
  return fixed_latency_bound(in, hitting_times(transition_matrix(g)).worst);
}

LatencyBound theorem3_bound(const Graph& g, const BoundInputs& in, double mixing_eps) {
  const auto t_mix = mixing_time(transition_matrix(g), mixing_eps);
  return flexible_latency_bound(in, static_cast<double>(t_mix), nu(g).value());
}

BoundReport analyze(const Graph& g, int k, int height, NodeId sink, double beta, double c_hat,
                    const BoundConstants& constants, double mixing_eps, LogBase base) {
  BoundReport r;
  const TransitionMatrix p = transition_matrix(g);
  r.diag = validate(g);
  r.walk = spectrum(p);
  r.cut = min_mincut(p, sink);
  r.rate.lambda2 = r.walk.lambda2;
  r.rate.d_min = r.diag.d_min;
  r.rate.d_max = r.diag.d_max;
  r.rate.rate_upper = r.cut.delta;
  r.rate.delta_argmin = r.cut.argmin;
  if (k >= 2) {
    r.rate.rate_lower = rate_lower_formula(r.walk.lambda2, k, r.diag.d_min, r.diag.d_max);
    r.rate.consistent = r.rate.rate_lower <= r.rate.rate_upper;
  }
  r.t_hit = hitting_times(p).worst;
  r.mixing_eps = mixing_eps;
  if (!is_periodic(p)) r.t_mix = mixing_time(p, mixing_eps);
  r.nu_value = nu(g);
  r.l_star = l_star(g, k, base);
  r.s2 = degree_s2(g);
  r.constants = constants;
  r.k = k;
  r.height = height;
  r.beta = beta;
  r.c_hat = c_hat;

  BoundInputs in{g.n(), k, height, beta, c_hat, constants.alpha, base};
  r.fixed = fixed_latency_bound(in, r.t_hit);
  if (r.t_mix) {
    in.constant = constants.alpha_hat;
    r.flexible = flexible_latency_bound(in, static_cast<double>(*r.t_mix), r.nu_value.value());
  }
  return r;
}

}  // namespace incomp
