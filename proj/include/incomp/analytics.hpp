#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "incomp/topology.hpp"

namespace incomp {

enum class Exec { Serial, Parallel };

enum class LogBase { Two, Natural };

LogBase parse_log_base(const std::string& name);
double log_in(LogBase base, double x);

struct WalkSpectrum {
  std::vector<double> eigenvalues;  // descending
  double lambda2 = 0.0;
  double spectral_gap = 0.0;
};

/// Eigenvalues of a reversible P through the symmetric similarity
/// Pi^{1/2} P Pi^{-1/2}. Throws NumericalFailure for non-reversible input.
WalkSpectrum spectrum(const TransitionMatrix& p);

/// Stationary distribution by direct solve of pi (I - P) = 0, sum(pi) = 1.
Eigen::VectorXd stationary(const TransitionMatrix& p);

/// True when the chain has period > 1 (bipartite support, no self-loops).
bool is_periodic(const TransitionMatrix& p);

struct HittingTimes {
  Eigen::MatrixXd expected;  // (x, y) -> E_x(tau_y)
  double worst = 0.0;
};

/// One linear solve per target: E_x = 1 + sum_v P(x,v) E_v, E_y = 0.
HittingTimes hitting_times(const TransitionMatrix& p, Exec exec = Exec::Parallel);

/// Smallest t with max_u ||P^t(u,.) - pi||_TV <= eps, by propagating every
/// start distribution through the sparse chain. Throws PeriodicChain.
std::int64_t mixing_time(const TransitionMatrix& p, double eps, Exec exec = Exec::Parallel,
                         std::int64_t max_steps = 10'000'000);

/// Same quantity from the spectral expansion of P^t.
std::int64_t mixing_time_spectral(const TransitionMatrix& p, double eps,
                                  std::int64_t max_steps = 10'000'000);

struct FundamentalReport {
  Eigen::VectorXd pi;
  Eigen::VectorXd z_vv;              // sum_t (P^t(v,v) - pi_v)
  Eigen::VectorXd expected_hitting;  // E_pi(tau_v) = Z_vv / pi_v
  double lambda2 = 0.0;
  double z_bound = 0.0;  // 1 / (1 - lambda2)
  bool bound_holds = false;
};

FundamentalReport fundamental_zvv(const TransitionMatrix& p);

struct MinCut {
  double delta = 0.0;
  NodeId argmin = -1;
  std::vector<double> per_node;  // NaN at the sink
};

/// delta_i = max-flow from i to the sink with capacities P(u,v); delta = min_i.
MinCut min_mincut(const TransitionMatrix& p, NodeId sink, Exec exec = Exec::Parallel);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

Rational make_rational(std::int64_t num, std::int64_t den);

/// nu = sum_v d(v)^2 / (d^2 n) with d = 2m/n, in lowest terms.
Rational nu(const Graph& g);

/// l* = max{2, min{n / nu, log K}}.
double l_star(const Graph& g, int k, LogBase base = LogBase::Two);

struct DegreeS2 {
  std::int64_t sum_squares = 0;  // sum_v d(v)^2
  std::int64_t via_nu = 0;       // (2m)^2 nu / n
  bool holds = false;
};

DegreeS2 degree_s2(const Graph& g);

struct RateBounds {
  double rate_lower = 0.0;
  double rate_upper = 0.0;  // delta
  double lambda2 = 0.0;
  int d_min = 0;
  int d_max = 0;
  NodeId delta_argmin = -1;
  bool consistent = false;  // rate_lower <= rate_upper
};

RateBounds theorem1_bounds(const Graph& g, int k, NodeId sink);

/// rate_lower = (1 - lambda2) / (2 sqrt(3) (K - 1)) * sqrt(d_min / d_max).
double rate_lower_formula(double lambda2, int k, int d_min, int d_max);

struct LatencyBound {
  double value = 0.0;  // +inf when c-hat >= 1
  bool diverges = false;
  double arrival_term = 0.0;  // 1 / beta
  double walk_term = 0.0;     // h * (t_hit or t_mix * (...)) / (1 - c)
  double log_k = 0.0;
};

struct BoundInputs {
  int n = 0;
  int k = 2;
  int height = 1;
  double beta = 0.0;
  double c_hat = 0.0;
  double constant = 1.0;  // alpha or alpha-hat
  LogBase base = LogBase::Two;
};

/// alpha log K (1/beta + h t_hit / (1 - c)).
LatencyBound fixed_latency_bound(const BoundInputs& in, double t_hit);

/// alpha-hat log K (1/beta + h t_mix (log^2 K + n / (nu log n)) / (1 - c)).
LatencyBound flexible_latency_bound(const BoundInputs& in, double t_mix, double nu_value);

LatencyBound theorem2_bound(const Graph& g, const BoundInputs& in);
LatencyBound theorem3_bound(const Graph& g, const BoundInputs& in, double mixing_eps);

struct BoundConstants {
  double alpha = 1.0;
  double alpha_hat = 1.0;
  double b = 1.0;
  double d = 1.0;
};

struct BoundReport {
  Diagnostics diag;
  WalkSpectrum walk;
  RateBounds rate;
  MinCut cut;
  double t_hit = 0.0;
  std::optional<std::int64_t> t_mix;  // absent for periodic chains
  double mixing_eps = 0.25;
  Rational nu_value;
  double l_star = 0.0;
  DegreeS2 s2;
  LatencyBound fixed;
  std::optional<LatencyBound> flexible;
  BoundConstants constants;
  int k = 0;
  int height = 0;
  double beta = 0.0;
  double c_hat = 0.0;
};

BoundReport analyze(const Graph& g, int k, int height, NodeId sink, double beta, double c_hat,
                    const BoundConstants& constants, double mixing_eps,
                    LogBase base = LogBase::Two);

}  // namespace incomp
