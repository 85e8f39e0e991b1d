#include "incomp/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "incomp/analytics.hpp"
#include "incomp/error.hpp"

namespace incomp::reference {

namespace {

std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) {
      throw Error(ErrorCode::SingularSystem, "reference elimination hit a zero pivot");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

Eigen::MatrixXd hitting_times(const TransitionMatrix& p) {
  const auto n = static_cast<int>(p.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int y = 0; y < n; ++y) {
    std::vector<int> idx;
    for (int x = 0; x < n; ++x) {
      if (x != y) idx.push_back(x);
    }
    const std::size_t m = idx.size();
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - p(idx[i], idx[j]);
    }
    const auto h = gauss_solve(std::move(a), std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i) out(idx[i], y) = h[i];
  }
  return out;
}

std::int64_t mixing_time(const TransitionMatrix& p, double eps, std::int64_t max_steps) {
  if (is_periodic(p)) throw Error(ErrorCode::PeriodicChain, "reference: periodic chain");
  const auto n = p.rows();
  const Eigen::VectorXd pi = stationary(p);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (std::int64_t t = 0; t <= max_steps; ++t) {
    double worst = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
      double tv = 0.0;
      for (Eigen::Index v = 0; v < n; ++v) tv += std::abs(power(u, v) - pi(v));
      worst = std::max(worst, tv / 2.0);
    }
    if (worst <= eps) return t;
    power = power * p;
  }
  throw Error(ErrorCode::NumericalFailure, "reference: mixing step limit");
}

double max_flow(const TransitionMatrix& p, NodeId source, NodeId sink) {
  const auto n = static_cast<int>(p.rows());
  Eigen::MatrixXd residual = p;
  residual.diagonal().setZero();
  double total = 0.0;
  for (;;) {
    std::vector<int> parent(n, -1);
    parent[source] = source;
    std::queue<int> frontier;
    frontier.push(source);
    while (!frontier.empty() && parent[sink] < 0) {
      const int u = frontier.front();
      frontier.pop();
      for (int v = 0; v < n; ++v) {
        if (parent[v] < 0 && residual(u, v) > 1e-13) {
          parent[v] = u;
          frontier.push(v);
        }
      }
    }
    if (parent[sink] < 0) return total;
    double bottleneck = std::numeric_limits<double>::infinity();
    for (int v = sink; v != source; v = parent[v]) bottleneck = std::min(bottleneck, residual(parent[v], v));
    for (int v = sink; v != source; v = parent[v]) {
      residual(parent[v], v) -= bottleneck;
      residual(v, parent[v]) += bottleneck;
    }
    total += bottleneck;
  }
}

double min_mincut(const TransitionMatrix& p, NodeId sink) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.rows(); ++i) {
    if (i != sink) best = std::min(best, max_flow(p, i, sink));
  }
  return best;
}

}  // namespace incomp::reference
