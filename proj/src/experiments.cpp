#include "incomp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "incomp/error.hpp"
#include "incomp/rng.hpp"

namespace incomp {

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

// Runs body(i) for i in [0, count), rethrowing the first failure after the
// loop so no exception escapes an OpenMP region.
template <typename Body>
void for_replicas(int count, Exec exec, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

SimConfig make_sim_config(const Scenario& s, double beta, std::uint64_t seed) {
  SimConfig c;
  c.mode = s.mode;
  c.mapping = s.mapping;
  c.sources = s.sources;
  c.sink = s.sink;
  c.arrival = {s.arrival, beta, s.gamma};
  c.seed = seed;
  c.cascade = s.cascade;
  c.burn_in = s.c_hat_burn_in;
  c.slot_cap = s.slot_cap;
  return c;
}

double trend_slope(const std::vector<std::int32_t>& series, std::size_t from) {
  const std::size_t count = series.size() > from ? series.size() - from : 0;
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double mean_x = (n - 1.0) / 2.0;
  double mean_y = 0.0;
  for (std::size_t i = from; i < series.size(); ++i) mean_y += series[i];
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (series[from + i] - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

StabilityVerdict stability_probe(const Scenario& s, double beta, const ProbeParams& params) {
  if (params.horizon < 10'000) {
    throw Error(ErrorCode::HorizonTooShort, "stability probes need T >= 10^4");
  }
  if (params.replicas < 3) throw Error(ErrorCode::InvalidParameters, "need at least 3 replicas");
  const std::int64_t cap = params.queue_cap_per_source * s.tree.k();

  StabilityVerdict out;
  out.beta = beta;
  out.replicas.resize(params.replicas);
  for_replicas(params.replicas, params.exec, [&](int i) {
    ReplicaProbe& rep = out.replicas[i];
    rep.seed = split_seed(params.seed, static_cast<std::uint64_t>(i));
    SimConfig cfg = make_sim_config(s, beta, rep.seed);
    cfg.keep_payloads = false;
    Simulation sim(s.graph, s.tree, cfg);
    const Metrics m = sim.run(StopCondition::after_slots(params.horizon));
    const auto from = static_cast<std::size_t>(params.burn_in * static_cast<double>(params.horizon));
    rep.slope = trend_slope(m.in_queues, from);
    rep.slope_with_c = trend_slope(m.in_system, from);
    rep.max_queue = *std::max_element(m.max_queue.begin(), m.max_queue.end());
    rep.c_hat = m.c_hat;
    if (rep.slope > params.slope_threshold) {
      rep.verdict = Verdict::Unstable;
    } else if (rep.max_queue <= cap) {
      rep.verdict = Verdict::Stable;
    } else {
      rep.verdict = Verdict::Inconclusive;
    }
  });

  std::vector<double> slopes;
  std::vector<double> slopes_with_c;
  double c_sum = 0.0;
  bool all_stable = true;
  bool all_unstable = true;
  for (const auto& rep : out.replicas) {
    slopes.push_back(rep.slope);
    slopes_with_c.push_back(rep.slope_with_c);
    c_sum += rep.c_hat;
    out.max_queue = std::max(out.max_queue, rep.max_queue);
    all_stable = all_stable && rep.verdict == Verdict::Stable;
    all_unstable = all_unstable && rep.verdict == Verdict::Unstable;
  }
  out.slope = median(slopes);
  out.slope_with_c = median(slopes_with_c);
  out.c_hat = c_sum / static_cast<double>(out.replicas.size());
  out.verdict = all_stable ? Verdict::Stable : all_unstable ? Verdict::Unstable : Verdict::Inconclusive;
  return out;
}

BetaStar estimate_beta_star(const Scenario& s, double tolerance, const ProbeParams& params,
                            double low, double high) {
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidParameters, "tolerance must be > 0");
  if (!(low >= 0.0 && low < high && high <= 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "need 0 <= low < high <= 1");
  }
  BetaStar out;
  std::uint64_t probe_index = 0;
  auto probe = [&](double beta) {
    ProbeParams fresh = params;
    fresh.seed = split_seed(params.seed, 1000 + probe_index++);
    out.trail.push_back(stability_probe(s, beta, fresh));
    return out.trail.back().verdict;
  };

  if (low > 0.0 && probe(low) != Verdict::Stable) {
    throw Error(ErrorCode::InvalidParameters, "lower bracket is not stable");
  }
  if (probe(high) == Verdict::Stable) {
    // No unstable endpoint found: beta* >= high - tolerance.
    out.low = std::max(low, high - tolerance);
    out.high = high;
    out.bracketed = false;
  } else {
    out.bracketed = true;
    while (high - low > tolerance) {
      const double mid = 0.5 * (low + high);
      if (probe(mid) == Verdict::Stable) {
        low = mid;
      } else {
        high = mid;
      }
    }
    out.low = low;
    out.high = high;
  }

  for (const auto& a : out.trail) {
    for (const auto& b : out.trail) {
      if (a.verdict == Verdict::Stable && b.verdict == Verdict::Unstable && a.beta > b.beta) {
        out.monotone = false;
      }
    }
  }
  return out;
}

LatencyReport measure_latency(const Scenario& s, double beta, const LatencyParams& params) {
  if (params.ell == 0 || params.replicas < 1) {
    throw Error(ErrorCode::InvalidParameters, "latency needs ell >= 1 and replicas >= 1");
  }
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidParameters, "latency needs beta > 0");

  LatencyReport out;
  out.beta = beta;
  out.ell = params.ell;
  out.replicas.resize(params.replicas);
  std::vector<std::vector<std::int64_t>> latencies(params.replicas);

  for_replicas(params.replicas, params.exec, [&](int i) {
    LatencyReplica& rep = out.replicas[i];
    rep.replica = i;
    rep.seed = split_seed(params.seed, static_cast<std::uint64_t>(i));
    rep.ell = params.ell;
    SimConfig cfg = make_sim_config(s, beta, rep.seed);
    cfg.keep_payloads = false;
    Simulation sim(s.graph, s.tree, cfg);
    Metrics m;
    try {
      m = sim.run(StopCondition::after_rounds(params.ell));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SlotCapReached) throw;
      rep.inconclusive = true;
      m = sim.metrics();
    }
    rep.tau_app = m.tau_app;
    rep.tau_fk = m.tau_fk;
    rep.tau_bar = m.tau_bar;
    rep.c_hat = m.c_hat;
    rep.oracle_mismatches = m.oracle_mismatches;
    double sum = 0.0;
    std::uint64_t count = 0;
    for (std::uint64_t r = 0; r < m.ell; ++r) {
      const auto lat = m.rounds[r].completion - m.rounds[r].appearance_max;
      latencies[i].push_back(lat);
      sum += static_cast<double>(lat);
      ++count;
    }
    rep.mean_round_latency = count > 0 ? sum / static_cast<double>(count) : 0.0;
  });

  std::vector<double> taus;
  double round_sum = 0.0;
  double c_sum = 0.0;
  std::int64_t tau_app_max = 0;
  for (std::size_t i = 0; i < out.replicas.size(); ++i) {
    const auto& rep = out.replicas[i];
    out.inconclusive = out.inconclusive || rep.inconclusive;
    out.oracle_mismatches += rep.oracle_mismatches;
    taus.push_back(rep.tau_bar);
    round_sum += rep.mean_round_latency;
    c_sum += rep.c_hat;
    tau_app_max = std::max(tau_app_max, rep.tau_app);
    for (auto lat : latencies[i]) {
      std::int64_t bucket = 1;
      while (bucket <= lat) bucket <<= 1;
      ++out.latency_histogram[bucket >> 1];
    }
  }
  const auto count = static_cast<double>(out.replicas.size());
  out.tau_bar_mean = std::accumulate(taus.begin(), taus.end(), 0.0) / count;
  out.tau_bar_min = *std::min_element(taus.begin(), taus.end());
  out.tau_bar_max = *std::max_element(taus.begin(), taus.end());
  out.tau_bar_median = median(taus);
  out.round_latency_mean = round_sum / count;
  out.c_hat_mean = c_sum / count;
  const double shape = static_cast<double>(params.ell) * std::log(M_E * s.tree.k()) / beta;
  out.b_estimate = static_cast<double>(tau_app_max) / shape;
  return out;
}

std::vector<CompareRow> compare_bounds(const std::vector<Scenario>& scenarios,
                                       const CompareParams& params) {
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    CompareRow row;
    row.label = s.label;
    const int k = s.tree.k();
    const TransitionMatrix p = transition_matrix(s.graph);
    row.rate = theorem1_bounds(s.graph, std::max(k, 2), s.sink);
    ProbeParams probe = params.probe;
    probe.seed = split_seed(params.probe.seed, i);
    row.beta_star = estimate_beta_star(s, params.tolerance, probe);
    row.lower_ok = row.rate.rate_lower <= row.beta_star.low;
    row.upper_ok = row.beta_star.high <= row.rate.rate_upper + params.tolerance;

    row.latency_beta = 0.5 * row.beta_star.low;
    if (row.latency_beta > 0.0) {
      LatencyParams lat = params.latency;
      lat.seed = split_seed(params.latency.seed, i);
      row.latency = measure_latency(s, row.latency_beta, lat);
    }
    row.t_hit = hitting_times(p).worst;
    if (!is_periodic(p)) row.t_mix = mixing_time(p, params.mixing_eps);
    BoundInputs in{s.graph.n(), k, s.tree.height(), row.latency_beta, row.latency.c_hat_mean,
                   params.constants.alpha, params.base};
    row.fixed_bound = fixed_latency_bound(in, row.t_hit);
    if (row.t_mix) {
      in.constant = params.constants.alpha_hat;
      row.flexible_bound =
          flexible_latency_bound(in, static_cast<double>(*row.t_mix), nu(s.graph).value());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace incomp
