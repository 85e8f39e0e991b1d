#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "incomp/analytics.hpp"
#include "incomp/error.hpp"
#include "incomp/reference.hpp"

using namespace incomp;

namespace {

Graph make(TopologyKind kind, int n, double eps = 0.0) {
  TopologySpec s{.kind = kind, .n = n};
  s.self_loop = eps;
  return build_topology(s);
}

// Every vertex set containing i and not the sink; returns min_i of the
// smallest such cut.
double brute_delta(const TransitionMatrix& p, NodeId sink) {
  const auto n = static_cast<int>(p.rows());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t set = 1; set < (1U << n); ++set) {
    if (set & (1U << sink)) continue;
    double cut = 0.0;
    for (int u = 0; u < n; ++u) {
      if (!(set >> u & 1U)) continue;
      for (int v = 0; v < n; ++v) {
        if (!(set >> v & 1U)) cut += p(u, v);
      }
    }
    best = std::min(best, cut);
  }
  return best;
}

// Connected random graph: a random spanning tree plus extra edges.
Graph random_graph(int n, int extra, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<Edge> edges;
  for (int v = 1; v < n; ++v) {
    const int u = static_cast<int>(rng() % v);
    edges.insert({u, v});
  }
  for (int i = 0; i < extra; ++i) {
    int u = static_cast<int>(rng() % n);
    int v = static_cast<int>(rng() % n);
    if (u == v) continue;
    edges.insert({std::min(u, v), std::max(u, v)});
  }
  return Graph(n, {edges.begin(), edges.end()});
}

std::vector<Graph> lazy_random_graphs() {
  std::vector<Graph> out;
  for (int i = 0; i < 10; ++i) {
    TopologySpec s{.kind = TopologyKind::RandomRegular, .n = 10 + 2 * i, .degree = 3 + i % 2};
    s.seed = 40 + i;
    s.self_loop = 0.5;
    out.push_back(build_topology(s));
  }
  for (int i = 0; i < 10; ++i) {
    TopologySpec s{.kind = TopologyKind::RandomGeometric, .n = 15 + 3 * i};
    s.radius = 0.45;
    s.seed = 70 + i;
    s.self_loop = 0.5;
    out.push_back(build_topology(s));
  }
  return out;
}

}  // namespace

TEST_CASE("cycle spectrum matches the circulant closed form") {
  for (int n : {4, 5, 8, 13, 32}) {
    for (double eps : {0.0, 0.3}) {
      const WalkSpectrum w = spectrum(transition_matrix(make(TopologyKind::Cycle, n, eps)));
      std::vector<double> expect;
      for (int k = 0; k < n; ++k) expect.push_back(eps + (1 - eps) * std::cos(2 * std::numbers::pi * k / n));
      std::sort(expect.rbegin(), expect.rend());
      REQUIRE(w.eigenvalues.size() == expect.size());
      for (int k = 0; k < n; ++k) CHECK(w.eigenvalues[k] == doctest::Approx(expect[k]).epsilon(1e-10));
      CHECK(std::abs(w.lambda2 - expect[1]) <= 1e-9);
    }
  }
}

TEST_CASE("complete, star and hypercube second eigenvalues") {
  for (int n : {4, 8, 16}) {
    CHECK(std::abs(spectrum(transition_matrix(make(TopologyKind::Complete, n))).lambda2 + 1.0 / (n - 1)) <= 1e-9);
  }
  for (int n : {5, 9, 17}) {
    CHECK(std::abs(spectrum(transition_matrix(make(TopologyKind::Star, n))).lambda2) <= 1e-9);
  }
  // Hypercube Q_d walk eigenvalues are 1 - 2j/d.
  for (int d : {2, 3, 4, 5}) {
    CHECK(std::abs(spectrum(transition_matrix(make(TopologyKind::Hypercube, 1 << d))).lambda2 - (1.0 - 2.0 / d)) <=
          1e-9);
  }
}

TEST_CASE("stationary distribution is degree proportional") {
  const Graph g = make(TopologyKind::Star, 6);
  const Eigen::VectorXd pi = stationary(transition_matrix(g));
  CHECK(pi(0) == doctest::Approx(0.5));
  for (int v = 1; v < 6; ++v) CHECK(pi(v) == doctest::Approx(0.1));
}

TEST_CASE("hitting time closed forms") {
  for (int n : {4, 8, 16}) {
    CHECK(hitting_times(transition_matrix(make(TopologyKind::Complete, n))).worst == doctest::Approx(n - 1));
    CHECK(hitting_times(transition_matrix(make(TopologyKind::Cycle, n))).worst == doctest::Approx(n * n / 4));
  }
  // Odd cycle: max_k k (n - k) = floor(n^2/4).
  CHECK(hitting_times(transition_matrix(make(TopologyKind::Cycle, 9))).worst == doctest::Approx(20));
  // Path of n nodes end to end: (n-1)^2.
  CHECK(hitting_times(transition_matrix(make(TopologyKind::Path, 6))).worst == doctest::Approx(25));
}

TEST_CASE("parallel kernels agree with the serial references") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Graph g = random_graph(12, 10, seed).with_self_loops(0.2);
    const TransitionMatrix p = transition_matrix(g);
    const auto par = hitting_times(p, Exec::Parallel);
    const auto ser = hitting_times(p, Exec::Serial);
    const Eigen::MatrixXd ref = reference::hitting_times(p);
    CHECK((par.expected - ref).cwiseAbs().maxCoeff() <= 1e-8 * ref.maxCoeff());
    CHECK((par.expected - ser.expected).cwiseAbs().maxCoeff() == 0.0);

    const auto t = mixing_time(p, 0.25, Exec::Parallel);
    CHECK(t == mixing_time(p, 0.25, Exec::Serial));
    CHECK(t == reference::mixing_time(p, 0.25));
    CHECK(t == mixing_time_spectral(p, 0.25));

    const MinCut par_cut = min_mincut(p, 0, Exec::Parallel);
    const MinCut ser_cut = min_mincut(p, 0, Exec::Serial);
    CHECK(par_cut.delta == doctest::Approx(ser_cut.delta).epsilon(1e-12));
    CHECK(par_cut.delta == doctest::Approx(reference::min_mincut(p, 0)).epsilon(1e-12));
    for (int i = 1; i < g.n(); ++i) {
      CHECK(par_cut.per_node[i] == doctest::Approx(reference::max_flow(p, i, 0)).epsilon(1e-12));
    }
    CHECK(std::isnan(par_cut.per_node[0]));
  }
}

TEST_CASE("mixing time facts") {
  CHECK(mixing_time(transition_matrix(make(TopologyKind::Complete, 8)), 0.25) == 1);
  CHECK_THROWS_AS(mixing_time(transition_matrix(make(TopologyKind::Cycle, 8)), 0.25), Error);
  try {
    mixing_time(transition_matrix(make(TopologyKind::Cycle, 8)), 0.25);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PeriodicChain);
  }
  CHECK(is_periodic(transition_matrix(make(TopologyKind::Star, 5))));
  CHECK_FALSE(is_periodic(transition_matrix(make(TopologyKind::Star, 5, 0.1))));
  CHECK_FALSE(is_periodic(transition_matrix(make(TopologyKind::Cycle, 7))));
  // Lazier chains mix no faster.
  const auto fast = mixing_time(transition_matrix(make(TopologyKind::Cycle, 10, 0.1)), 0.25);
  const auto slow = mixing_time(transition_matrix(make(TopologyKind::Cycle, 10, 0.5)), 0.25);
  CHECK(fast <= slow);
}

TEST_CASE("min-cut agrees with cut enumeration") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int n = 5 + static_cast<int>(seed % 6);
    const Graph g = random_graph(n, n, seed * 31).with_self_loops(seed % 3 == 0 ? 0.3 : 0.0);
    const TransitionMatrix p = transition_matrix(g);
    const NodeId sink = static_cast<NodeId>(seed % n);
    CHECK(min_mincut(p, sink).delta == doctest::Approx(brute_delta(p, sink)).epsilon(1e-12));
  }
  const TransitionMatrix star5 = transition_matrix(make(TopologyKind::Star, 5));
  CHECK(min_mincut(star5, 1).delta == doctest::Approx(0.25));
  CHECK(min_mincut(star5, 0).delta == doctest::Approx(1.0));
}

TEST_CASE("fundamental matrix bound and hitting identity on lazy graphs") {
  for (const Graph& g : lazy_random_graphs()) {
    const TransitionMatrix p = transition_matrix(g);
    const FundamentalReport f = fundamental_zvv(p);
    CHECK(f.bound_holds);
    const Eigen::MatrixXd h = reference::hitting_times(p);
    for (Eigen::Index v = 0; v < p.rows(); ++v) {
      CHECK(f.z_vv(v) <= f.z_bound + 1e-9);
      const double direct = f.pi.dot(h.col(v));
      CHECK(f.expected_hitting(v) == doctest::Approx(direct).epsilon(1e-6));
    }
    // Z_vv as a truncated series sum_t (P^t(v,v) - pi_v).
    Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(p.rows(), p.cols());
    Eigen::VectorXd series = Eigen::VectorXd::Zero(p.rows());
    for (int t = 0; t < 4000; ++t) {
      series += pt.diagonal() - f.pi;
      pt = pt * p;
    }
    CHECK((series - f.z_vv).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("degree variability") {
  CHECK(nu(make(TopologyKind::Cycle, 10)) == Rational{1, 1});
  CHECK(nu(make(TopologyKind::Complete, 7)) == Rational{1, 1});
  CHECK(nu(make(TopologyKind::Hypercube, 16)) == Rational{1, 1});
  for (int n : {3, 5, 17, 64}) {
    CHECK(nu(make(TopologyKind::Star, n)) == make_rational(n * n, 4 * (n - 1)));
  }
  CHECK(make_rational(6, 8) == Rational{3, 4});
  for (const Graph& g : lazy_random_graphs()) CHECK(degree_s2(g).holds);
  CHECK(degree_s2(make(TopologyKind::Star, 9)).sum_squares == 8 * 8 + 8);

  // l* = max{2, min{n/nu, log K}}
  CHECK(l_star(make(TopologyKind::Cycle, 64), 16) == doctest::Approx(4.0));
  CHECK(l_star(make(TopologyKind::Cycle, 64), 2) == doctest::Approx(2.0));
  CHECK(l_star(make(TopologyKind::Star, 64), 1 << 20) == doctest::Approx(64.0 / (64.0 * 64 / (4.0 * 63))));
  CHECK(l_star(make(TopologyKind::Cycle, 64), 16, LogBase::Natural) == doctest::Approx(std::log(16.0)));
}

TEST_CASE("rate bounds") {
  const RateBounds r = theorem1_bounds(make(TopologyKind::Complete, 4), 2, 0);
  CHECK(std::abs(r.rate_lower - 4.0 / (6.0 * std::sqrt(3.0))) <= 1e-9);
  CHECK(r.rate_upper == doctest::Approx(1.0));
  CHECK(r.consistent);
  CHECK(rate_lower_formula(0.5, 3, 1, 4) == doctest::Approx(0.5 / (2 * std::sqrt(3.0) * 2) * 0.5));
  CHECK_THROWS_AS(rate_lower_formula(0.5, 1, 1, 1), Error);
  for (auto kind : {TopologyKind::Cycle, TopologyKind::Star, TopologyKind::Complete}) {
    CHECK(theorem1_bounds(make(kind, 9), 4, 1).consistent);
  }
}

TEST_CASE("latency bound evaluators") {
  BoundInputs in{.n = 16, .k = 4, .height = 2, .beta = 0.1, .c_hat = 0.5, .constant = 2.0};
  const LatencyBound f = fixed_latency_bound(in, 10.0);
  CHECK(f.log_k == doctest::Approx(2.0));
  CHECK(f.value == doctest::Approx(2.0 * 2.0 * (10.0 + 2 * 10.0 / 0.5)));
  CHECK_FALSE(f.diverges);

  const LatencyBound x = flexible_latency_bound(in, 5.0, 1.0);
  CHECK(x.value == doctest::Approx(2.0 * 2.0 * (10.0 + 2 * 5.0 * (4.0 + 16.0 / 4.0) / 0.5)));

  in.c_hat = 1.0;
  const LatencyBound d = fixed_latency_bound(in, 10.0);
  CHECK(d.diverges);
  CHECK(std::isinf(d.value));

  in.c_hat = -0.1;
  CHECK_THROWS_AS(fixed_latency_bound(in, 1.0), Error);
}

TEST_CASE("bound report on the complete graph") {
  const BoundReport r = analyze(make(TopologyKind::Complete, 4), 2, 1, 0, 0.1, 0.0, BoundConstants{}, 0.25);
  CHECK(r.walk.lambda2 == doctest::Approx(-1.0 / 3.0));
  CHECK(r.t_hit == doctest::Approx(3.0));
  REQUIRE(r.t_mix);
  CHECK(*r.t_mix == 1);
  CHECK(r.cut.delta == doctest::Approx(1.0));
  CHECK(r.flexible);
  const BoundReport periodic = analyze(make(TopologyKind::Cycle, 8), 2, 1, 0, 0.1, 0.0, BoundConstants{}, 0.25);
  CHECK_FALSE(periodic.t_mix);
  CHECK_FALSE(periodic.flexible);
}
