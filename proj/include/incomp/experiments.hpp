#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "incomp/analytics.hpp"
#include "incomp/engine.hpp"

namespace incomp {

/// Everything needed to instantiate a Simulation except rate and seed.
struct Scenario {
  std::string label;
  Graph graph;
  SchemaTree tree;
  Mode mode = Mode::Fixed;
  std::map<SchemaNodeId, NodeId> mapping;
  std::vector<NodeId> sources;
  NodeId sink = 0;
  ArrivalModel::Kind arrival = ArrivalModel::Kind::Bernoulli;
  double gamma = 0.0;
  bool cascade = false;
  double c_hat_burn_in = 0.2;
  std::int64_t slot_cap = 100'000'000;
};

SimConfig make_sim_config(const Scenario& s, double beta, std::uint64_t seed);

enum class Verdict { Stable, Unstable, Inconclusive };
const char* to_string(Verdict v);

struct ProbeParams {
  std::int64_t horizon = 200'000;
  int replicas = 3;
  double slope_threshold = 1e-3;
  std::int64_t queue_cap_per_source = 50;  // cap = this * K
  double burn_in = 0.4;
  std::uint64_t seed = 1;
  Exec exec = Exec::Parallel;
};

struct ReplicaProbe {
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::Inconclusive;
  double slope = 0.0;         // transmission queues only; drives the verdict
  double slope_with_c = 0.0;  // queues plus operand buffers
  std::int64_t max_queue = 0;
  double c_hat = 0.0;
};

struct StabilityVerdict {
  double beta = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double slope = 0.0;  // median over replicas
  double slope_with_c = 0.0;
  std::int64_t max_queue = 0;
  double c_hat = 0.0;  // mean over replicas
  std::vector<ReplicaProbe> replicas;
};

/// Least-squares slope of `series` over indices [from, size).
double trend_slope(const std::vector<std::int32_t>& series, std::size_t from);

StabilityVerdict stability_probe(const Scenario& s, double beta, const ProbeParams& params);

struct BetaStar {
  double low = 0.0;   // highest rate seen stable
  double high = 1.0;  // lowest rate seen not stable
  bool bracketed = false;  // an unstable rate was found below 1
  bool monotone = true;
  std::vector<StabilityVerdict> trail;
};

/// Bisection on [low, high] with fresh seeds per probe.
BetaStar estimate_beta_star(const Scenario& s, double tolerance, const ProbeParams& params,
                            double low = 0.0, double high = 1.0);

struct LatencyParams {
  std::uint64_t ell = 200;
  int replicas = 5;
  std::uint64_t seed = 1;
  Exec exec = Exec::Parallel;
};

struct LatencyReplica {
  int replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t ell = 0;
  std::int64_t tau_app = -1;
  std::int64_t tau_fk = -1;
  double tau_bar = 0.0;
  double c_hat = 0.0;
  double mean_round_latency = 0.0;  // completion - last appearance, averaged
  std::uint64_t oracle_mismatches = 0;
  bool inconclusive = false;
};

struct LatencyReport {
  double beta = 0.0;
  std::uint64_t ell = 0;
  std::vector<LatencyReplica> replicas;
  double tau_bar_mean = 0.0;
  double tau_bar_min = 0.0;
  double tau_bar_median = 0.0;
  double tau_bar_max = 0.0;
  double round_latency_mean = 0.0;
  double c_hat_mean = 0.0;
  /// tau_app / (ell log(eK) / beta): the appearance-time constant b.
  double b_estimate = 0.0;
  std::map<std::int64_t, std::uint64_t> latency_histogram;  // power-of-two buckets
  std::uint64_t oracle_mismatches = 0;
  bool inconclusive = false;
};

LatencyReport measure_latency(const Scenario& s, double beta, const LatencyParams& params);

struct CompareRow {
  std::string label;
  RateBounds rate;
  BetaStar beta_star;
  double latency_beta = 0.0;
  LatencyReport latency;
  double t_hit = 0.0;
  std::optional<std::int64_t> t_mix;
  LatencyBound fixed_bound;
  std::optional<LatencyBound> flexible_bound;
  bool lower_ok = false;  // rate_lower <= beta* low end
  bool upper_ok = false;  // beta* high end <= delta + tolerance
};

struct CompareParams {
  ProbeParams probe;
  double tolerance = 0.02;
  LatencyParams latency;
  BoundConstants constants;
  double mixing_eps = 0.25;
  LogBase base = LogBase::Two;
};

std::vector<CompareRow> compare_bounds(const std::vector<Scenario>& scenarios,
                                       const CompareParams& params);

}  // namespace incomp
