#include "incomp/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "incomp/error.hpp"

namespace incomp {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json jnum(double x) {
  if (!std::isfinite(x)) return fmt(x);
  return std::strtod(fmt(x).c_str(), nullptr);
}

namespace {

json jbound(const LatencyBound& b) {
  return {{"value", jnum(b.value)},
          {"diverges", b.diverges},
          {"arrival_term", jnum(b.arrival_term)},
          {"walk_term", jnum(b.walk_term)},
          {"log_k", jnum(b.log_k)}};
}

json header(const RunConfig& cfg) {
  return {{"config_hash", hex_hash(cfg.hash)}, {"seed", cfg.run.seed}};
}

std::string csv_banner(const RunConfig& cfg) {
  return "# config_hash=" + hex_hash(cfg.hash) + " seed=" + std::to_string(cfg.run.seed) + "\n";
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

ProbeParams probe_params(const RunConfig& cfg) {
  ProbeParams p;
  p.horizon = cfg.experiment.horizon;
  p.replicas = cfg.experiment.replicas;
  p.slope_threshold = cfg.experiment.slope_threshold;
  p.queue_cap_per_source = cfg.experiment.queue_cap_per_source;
  p.burn_in = cfg.experiment.burn_in;
  p.seed = cfg.run.seed;
  return p;
}

LatencyParams latency_params(const RunConfig& cfg) {
  LatencyParams p;
  p.ell = cfg.experiment.latency_rounds;
  p.replicas = cfg.experiment.latency_replicas;
  p.seed = cfg.run.seed;
  return p;
}

json verdict_json(const StabilityVerdict& v) {
  return {{"beta", jnum(v.beta)},
          {"verdict", to_string(v.verdict)},
          {"slope", jnum(v.slope)},
          {"slope_with_c", jnum(v.slope_with_c)},
          {"max_queue", v.max_queue},
          {"c_hat", jnum(v.c_hat)}};
}

void write_verdict_rows(std::ostream& out, const StabilityVerdict& v) {
  for (const auto& r : v.replicas) {
    out << fmt(v.beta) << ',' << r.seed << ',' << to_string(r.verdict) << ',' << fmt(r.slope) << ','
        << r.max_queue << ',' << fmt(r.c_hat) << '\n';
  }
}

json latency_json(const LatencyReport& r) {
  json hist = json::object();
  for (const auto& [bucket, count] : r.latency_histogram) hist[std::to_string(bucket)] = count;
  return {{"beta", jnum(r.beta)},
          {"ell", r.ell},
          {"tau_bar_mean", jnum(r.tau_bar_mean)},
          {"tau_bar_min", jnum(r.tau_bar_min)},
          {"tau_bar_median", jnum(r.tau_bar_median)},
          {"tau_bar_max", jnum(r.tau_bar_max)},
          {"round_latency_mean", jnum(r.round_latency_mean)},
          {"c_hat_mean", jnum(r.c_hat_mean)},
          {"b_estimate", jnum(r.b_estimate)},
          {"latency_histogram", hist},
          {"oracle_mismatches", r.oracle_mismatches},
          {"inconclusive", r.inconclusive}};
}

json beta_star_json(const BetaStar& b) {
  json trail = json::array();
  for (const auto& v : b.trail) trail.push_back(verdict_json(v));
  return {{"low", jnum(b.low)},
          {"high", jnum(b.high)},
          {"bracketed", b.bracketed},
          {"monotone", b.monotone},
          {"trail", trail}};
}

}  // namespace

RunConfig apply_overrides(const RunConfig& cfg, const Overrides& o, bool for_sweep) {
  RunConfig out = cfg;
  if (o.seed) out = with_override(out, "run.seed", *o.seed);
  if (o.replicas) {
    out = with_override(out, "experiment.replicas", *o.replicas);
    out = with_override(out, "experiment.latency_replicas", *o.replicas);
  }
  if (o.beta) out = with_override(out, "arrival.beta", *o.beta);
  if (o.ell) out = with_override(out, for_sweep ? "experiment.latency_rounds" : "run.rounds", *o.ell);
  if (o.slots) out = with_override(out, for_sweep ? "experiment.horizon" : "run.slots", *o.slots);
  return out;
}

json report_json(const BoundReport& r) {
  json per_node = json::array();
  for (double d : r.cut.per_node) per_node.push_back(std::isnan(d) ? json(nullptr) : jnum(d));
  json eig = json::array();
  for (double x : r.walk.eigenvalues) eig.push_back(jnum(x));
  json out = {
      {"n", r.diag.n},
      {"m", r.diag.m},
      {"d_min", r.diag.d_min},
      {"d_max", r.diag.d_max},
      {"avg_degree", jnum(r.diag.avg_degree)},
      {"bipartite", r.diag.bipartite},
      {"eigenvalues", eig},
      {"lambda2", jnum(r.walk.lambda2)},
      {"spectral_gap", jnum(r.walk.spectral_gap)},
      {"rate_lower", jnum(r.rate.rate_lower)},
      {"rate_upper", jnum(r.rate.rate_upper)},
      {"rate_consistent", r.rate.consistent},
      {"delta", jnum(r.cut.delta)},
      {"delta_argmin", r.cut.argmin},
      {"delta_per_node", per_node},
      {"t_hit", jnum(r.t_hit)},
      {"t_mix", r.t_mix ? json(*r.t_mix) : json(nullptr)},
      {"mixing_eps", jnum(r.mixing_eps)},
      {"nu", {{"num", r.nu_value.num}, {"den", r.nu_value.den}, {"value", jnum(r.nu_value.value())}}},
      {"l_star", jnum(r.l_star)},
      {"degree_s2", {{"sum_squares", r.s2.sum_squares}, {"via_nu", r.s2.via_nu}, {"holds", r.s2.holds}}},
      {"fixed_bound", jbound(r.fixed)},
      {"flexible_bound", r.flexible ? jbound(*r.flexible) : json(nullptr)},
      {"constants",
       {{"alpha", jnum(r.constants.alpha)},
        {"alpha_hat", jnum(r.constants.alpha_hat)},
        {"b", jnum(r.constants.b)},
        {"D", jnum(r.constants.d)}}},
      {"k", r.k},
      {"height", r.height},
      {"beta", jnum(r.beta)},
      {"c_hat", jnum(r.c_hat)},
  };
  return out;
}

fs::path run_analyze(const RunConfig& cfg, const fs::path& out) {
  const Scenario s = build_scenario(cfg);
  const BoundReport r = analyze(s.graph, s.tree.k(), s.tree.height(), s.sink, cfg.arrival.beta,
                                cfg.analytics.c_hat, cfg.constants, cfg.analytics.mixing_eps,
                                cfg.analytics.log_base);
  json j = header(cfg);
  j["report"] = report_json(r);
  const fs::path path = out / "report.json";
  write_json(path, j);
  return path;
}

fs::path run_simulate(const RunConfig& cfg, const fs::path& out, bool audit) {
  const Scenario s = build_scenario(cfg);
  SimConfig sc = make_sim_config(s, cfg.arrival.beta, cfg.run.seed);
  sc.keep_payloads = audit;
  Simulation sim(s.graph, s.tree, sc);
  const StopCondition stop =
      cfg.run.rounds > 0 ? StopCondition::after_rounds(cfg.run.rounds) : StopCondition::after_slots(cfg.run.slots);
  const Metrics m = sim.run(stop);

  const fs::path events = out / "events.csv";
  {
    auto f = open_out(events);
    f << csv_banner(cfg) << "round,appearance_slot_max,completion_slot\n";
    for (std::size_t r = 0; r < m.rounds.size(); ++r) {
      f << (r + 1) << ',' << m.rounds[r].appearance_max << ',' << m.rounds[r].completion << '\n';
    }
    f << "# summary slots=" << m.slots << " rounds_generated=" << m.rounds.size()
      << " completed=" << m.completed << " ell=" << m.ell << " tau_app=" << m.tau_app
      << " tau_fk=" << m.tau_fk << " tau_bar=" << fmt(m.tau_bar) << " c_hat=" << fmt(m.c_hat)
      << " oracle_mismatches=" << m.oracle_mismatches << '\n';
  }
  {
    auto f = open_out(out / "series.csv");
    f << csv_banner(cfg) << "slot,in_system,in_queues\n";
    for (std::size_t t = 0; t < m.in_system.size(); ++t) {
      f << (t + 1) << ',' << m.in_system[t] << ',' << m.in_queues[t] << '\n';
    }
  }
  if (audit) {
    auto f = open_out(out / "audit.txt");
    f << csv_banner(cfg);
    for (const auto& c : m.consumed) f << c.round << '\t' << c.slot << '\t' << c.payload.trace << '\n';
  }
  json max_q = json::array();
  for (auto q : m.max_queue) max_q.push_back(q);
  json j = header(cfg);
  j["metrics"] = {{"slots", m.slots},
                  {"rounds_generated", m.rounds.size()},
                  {"completed", m.completed},
                  {"ell", m.ell},
                  {"tau_app", m.tau_app},
                  {"tau_fk", m.tau_fk},
                  {"tau_bar", jnum(m.tau_bar)},
                  {"c_hat", jnum(m.c_hat)},
                  {"max_queue", max_q},
                  {"oracle_mismatches", m.oracle_mismatches}};
  write_json(out / "metrics.json", j);
  return events;
}

fs::path run_sweep(const RunConfig& cfg, const fs::path& out, bool latency) {
  const Scenario s = build_scenario(cfg);
  const ProbeParams probe = probe_params(cfg);
  json j = header(cfg);
  j["probe"] = {{"horizon", probe.horizon},
                {"replicas", probe.replicas},
                {"slope_threshold", jnum(probe.slope_threshold)},
                {"queue_cap", probe.queue_cap_per_source * s.tree.k()},
                {"burn_in", jnum(probe.burn_in)}};

  const fs::path sweep = out / "sweep.csv";
  {
    auto f = open_out(sweep);
    f << csv_banner(cfg) << "beta,seed,verdict,slope,max_queue,c_hat\n";
    if (!cfg.experiment.betas.empty()) {
      json grid = json::array();
      for (std::size_t i = 0; i < cfg.experiment.betas.size(); ++i) {
        ProbeParams p = probe;
        p.seed = split_seed(cfg.run.seed, i);
        const auto v = stability_probe(s, cfg.experiment.betas[i], p);
        write_verdict_rows(f, v);
        grid.push_back(verdict_json(v));
      }
      j["grid"] = grid;
    } else {
      const BetaStar b = estimate_beta_star(s, cfg.experiment.tolerance, probe);
      for (const auto& v : b.trail) write_verdict_rows(f, v);
      f << "# beta_star low=" << fmt(b.low) << " high=" << fmt(b.high) << " bracketed=" << b.bracketed
        << " monotone=" << b.monotone << '\n';
      j["beta_star"] = beta_star_json(b);
    }
  }

  if (latency) {
    const LatencyReport r = measure_latency(s, cfg.arrival.beta, latency_params(cfg));
    auto f = open_out(out / "latency.csv");
    f << csv_banner(cfg) << "replica,ell,tau_app,tau_fK,tau_bar\n";
    for (const auto& rep : r.replicas) {
      f << rep.replica << ',' << rep.ell << ',' << rep.tau_app << ',' << rep.tau_fk << ','
        << fmt(rep.tau_bar) << '\n';
    }
    j["latency"] = latency_json(r);
  }
  write_json(out / "sweep.json", j);
  return sweep;
}

fs::path run_compare(const std::vector<RunConfig>& cfgs, const fs::path& out) {
  if (cfgs.empty()) throw Error(ErrorCode::InvalidParameters, "compare needs at least one config");
  const RunConfig& first = cfgs.front();
  std::vector<Scenario> scenarios;
  for (const auto& c : cfgs) scenarios.push_back(build_scenario(c));
  CompareParams params;
  params.probe = probe_params(first);
  params.tolerance = first.experiment.tolerance;
  params.latency = latency_params(first);
  params.constants = first.constants;
  params.mixing_eps = first.analytics.mixing_eps;
  params.base = first.analytics.log_base;
  const auto rows = compare_bounds(scenarios, params);

  json hashes = json::array();
  for (const auto& c : cfgs) hashes.push_back(hex_hash(c.hash));
  json j = header(first);
  j["configs"] = hashes;
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"label", r.label},
                   {"rate_lower", jnum(r.rate.rate_lower)},
                   {"delta", jnum(r.rate.rate_upper)},
                   {"lambda2", jnum(r.rate.lambda2)},
                   {"beta_star", beta_star_json(r.beta_star)},
                   {"lower_ok", r.lower_ok},
                   {"upper_ok", r.upper_ok},
                   {"latency_beta", jnum(r.latency_beta)},
                   {"latency", r.latency_beta > 0.0 ? latency_json(r.latency) : json(nullptr)},
                   {"t_hit", jnum(r.t_hit)},
                   {"t_mix", r.t_mix ? json(*r.t_mix) : json(nullptr)},
                   {"fixed_bound", jbound(r.fixed_bound)},
                   {"flexible_bound", r.flexible_bound ? jbound(*r.flexible_bound) : json(nullptr)}});
  }
  j["rows"] = arr;
  const fs::path path = out / "compare.json";
  write_json(path, j);
  return path;
}

}  // namespace incomp
