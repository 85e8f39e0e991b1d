#include "incomp/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "incomp/analytics.hpp"
#include "incomp/commands.hpp"
#include "incomp/config.hpp"
#include "incomp/engine.hpp"
#include "incomp/error.hpp"
#include "incomp/experiments.hpp"
#include "incomp/rng.hpp"

namespace incomp {

namespace {

constexpr double kSpectralTol = 1e-9;
constexpr double kRateTol = 1e-9;
constexpr double kZBoundSlack = 1e-9;
constexpr double kHittingRelTol = 1e-6;
constexpr double kCutTol = 1e-12;
constexpr double kBetaStarSlack = 0.02;
constexpr double kChatSlack = 0.02;
constexpr double kTauRatioLow = 2.0;
constexpr double kTauRatioHigh = 8.0;
constexpr double kOracleBudget = 120.0;
constexpr double kSandwichBudget = 180.0;
constexpr double kLemma3Budget = 60.0;
constexpr double kLatencyBudget = 300.0;
constexpr int kConservationSamples = 1000;

const char* const kFig1b = "((y1*y2)+y3)*y4";

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << "FAIL " << what;
      pass = false;
    }
  }
};

Graph star(int n) { return build_topology({.kind = TopologyKind::Star, .n = n}); }
Graph cycle(int n) { return build_topology({.kind = TopologyKind::Cycle, .n = n}); }
Graph complete(int n) { return build_topology({.kind = TopologyKind::Complete, .n = n}); }

// Brute force over every vertex set containing i but not the sink.
double cut_enumeration_delta(const TransitionMatrix& p, NodeId sink) {
  const auto n = static_cast<int>(p.rows());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t set = 1; set < (1U << n); ++set) {
    if (set & (1U << sink)) continue;
    double cut = 0.0;
    for (int u = 0; u < n; ++u) {
      if (!(set & (1U << u))) continue;
      for (int v = 0; v < n; ++v) {
        if (!(set & (1U << v))) cut += p(u, v);
      }
    }
    best = std::min(best, cut);
  }
  return best;
}

struct OracleCase {
  std::string label;
  Scenario scenario;
};

std::vector<OracleCase> oracle_cases() {
  std::vector<OracleCase> out;
  const std::vector<std::pair<std::string, Graph>> graphs = {
      {"cycle16", cycle(16)}, {"star17", star(17)}, {"complete16", complete(16)}};
  for (const auto& [gname, g] : graphs) {
    for (Mode mode : {Mode::Fixed, Mode::Flexible}) {
      for (int schema = 0; schema < 2; ++schema) {
        SchemaTree tree = schema == 0 ? SchemaTree::complete(4, Op::Append) : SchemaTree::from_expression(kFig1b);
        Scenario s{.label = gname + "/" + to_string(mode) + (schema == 0 ? "/K4" : "/fig1b"),
                   .graph = g,
                   .tree = std::move(tree)};
        s.mode = mode;
        s.sink = 0;  // star centre is node 0
        s.sources = spread_sources(g.n(), s.tree.k(), s.sink);
        if (mode == Mode::Fixed) s.mapping = random_mapping(s.tree, g.n(), 11);
        out.push_back({s.label, std::move(s)});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void criterion1(Outcome& o) {
  constexpr double beta = 0.02;
  constexpr std::uint64_t ell = 500;
  const auto cases = oracle_cases();
  struct Run {
    std::uint64_t consumed = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t engine_mismatches = 0;
    std::string error;
  };
  std::vector<Run> runs(cases.size() * 3);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < runs.size(); ++i) {
    try {
      const Scenario& s = cases[i / 3].scenario;
      SimConfig cfg = make_sim_config(s, beta, i % 3 + 1);
      Simulation sim(s.graph, s.tree, cfg);
      const Metrics m = sim.run(StopCondition::after_rounds(ell));
      runs[i].consumed = m.consumed.size();
      runs[i].engine_mismatches = m.oracle_mismatches;
      for (const auto& root : m.consumed) {
        std::vector<Payload> leaves;
        for (int k = 1; k <= s.tree.k(); ++k) leaves.push_back(leaf_payload(s.tree, k, root.round));
        if (!(reference_evaluate(s.tree, leaves) == root.payload)) ++runs[i].mismatches;
      }
    } catch (const std::exception& e) {
      runs[i].error = e.what();
    }
  }
  std::uint64_t total = 0;
  std::uint64_t bad = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string where = cases[i / 3].label + " seed " + std::to_string(i % 3 + 1);
    o.check(runs[i].error.empty(), where + ": " + runs[i].error);
    o.check(runs[i].consumed >= ell, where + ": consumed " + std::to_string(runs[i].consumed));
    total += runs[i].consumed;
    bad += runs[i].mismatches + runs[i].engine_mismatches;
  }
  o.check(bad == 0, std::to_string(bad) + " mismatches");
  if (o.pass) o.detail << runs.size() << " runs, " << total << " roots, 0 mismatches";
}

void criterion2(Outcome& o) {
  for (int n : {4, 8, 16}) {
    const double got = spectrum(transition_matrix(complete(n))).lambda2;
    const double want = -1.0 / (n - 1);
    o.check(std::abs(got - want) <= kSpectralTol, "complete " + std::to_string(n) + " lambda2 " + fmt(got));
  }
  for (int n : {5, 17}) {
    const double got = spectrum(transition_matrix(star(n))).lambda2;
    o.check(std::abs(got) <= kSpectralTol, "star " + std::to_string(n) + " lambda2 " + fmt(got));
  }
  for (int n : {4, 8, 32}) {
    const double got = spectrum(transition_matrix(cycle(n))).lambda2;
    const double want = std::cos(2.0 * std::numbers::pi / n);
    o.check(std::abs(got - want) <= kSpectralTol, "cycle " + std::to_string(n) + " lambda2 " + fmt(got));
  }
  const double lower = theorem1_bounds(complete(4), 2, 0).rate_lower;
  const double want = 4.0 / (6.0 * std::sqrt(3.0));
  o.check(std::abs(lower - want) <= kRateTol, "complete 4 rate_lower " + fmt(lower));
  if (o.pass) o.detail << "complete/star/cycle lambda2 and rate_lower " << fmt(lower) << " match";
}

Scenario sandwich_scenario() {
  Scenario s{.label = "star5-leaf-sink", .graph = star(5), .tree = SchemaTree::from_expression("(x1+x2)+x3")};
  s.mode = Mode::Fixed;
  s.sink = 1;
  s.sources = spread_sources(5, 3, s.sink);
  // Root at the sink, the inner combination at the centre.
  s.mapping = {{SchemaNodeId{0, 0}, 1}, {SchemaNodeId{1, 0}, 0}};
  return s;
}

void criterion3(Outcome& o) {
  const Scenario s = sandwich_scenario();
  const TransitionMatrix p = transition_matrix(s.graph);
  const double oracle = cut_enumeration_delta(p, s.sink);
  const RateBounds rb = theorem1_bounds(s.graph, s.tree.k(), s.sink);
  o.check(std::abs(oracle - 0.25) <= kCutTol, "cut enumeration delta " + fmt(oracle));
  o.check(std::abs(rb.rate_upper - oracle) <= kCutTol, "max-flow delta " + fmt(rb.rate_upper));

  ProbeParams params;
  params.horizon = 200'000;
  params.replicas = 3;
  params.seed = 2024;
  const auto low = stability_probe(s, 0.05, params);
  params.seed = 2025;
  const auto high = stability_probe(s, 0.5, params);
  o.check(low.verdict == Verdict::Stable, std::string("beta=0.05 ") + to_string(low.verdict));
  o.check(high.verdict == Verdict::Unstable, std::string("beta=0.5 ") + to_string(high.verdict));

  params.seed = 7;
  const BetaStar b = estimate_beta_star(s, kBetaStarSlack, params);
  o.check(b.low >= rb.rate_lower, "beta* low " + fmt(b.low) + " < rate_lower " + fmt(rb.rate_lower));
  o.check(b.high <= oracle + kBetaStarSlack, "beta* high " + fmt(b.high) + " > delta + 0.02");
  o.detail << (o.pass ? "" : "; ") << "beta* in [" << fmt(b.low) << ", " << fmt(b.high) << "] within ["
           << fmt(rb.rate_lower) << ", " << fmt(oracle + kBetaStarSlack) << "]";
}

void criterion4(Outcome& o) {
  for (int n : {4, 8, 16}) {
    const double got = hitting_times(transition_matrix(complete(n))).worst;
    o.check(std::abs(got - (n - 1)) <= 1e-9 * n, "complete " + std::to_string(n) + " t_hit " + fmt(got));
  }
  for (int n : {4, 8, 16}) {
    const double got = hitting_times(transition_matrix(cycle(n))).worst;
    const double want = std::floor(n * n / 4.0);
    o.check(std::abs(got - want) <= 1e-9 * want, "cycle " + std::to_string(n) + " t_hit " + fmt(got));
  }
  const auto t = mixing_time(transition_matrix(complete(8)), 0.25);
  o.check(t == 1, "complete 8 t_mix " + std::to_string(t));
  bool raised = false;
  try {
    mixing_time(transition_matrix(cycle(8)), 0.25);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::PeriodicChain;
  }
  o.check(raised, "even cycle did not raise periodic-chain");
  if (o.pass) o.detail << "t_hit closed forms, t_mix(K8)=1, periodic error raised";
}

std::vector<Graph> lemma3_graphs() {
  std::vector<Graph> out;
  for (int i = 0; i < 10; ++i) {
    TopologySpec spec{.kind = TopologyKind::RandomRegular, .n = 16 + 4 * i, .degree = 3 + i % 3};
    if (spec.n * spec.degree % 2 != 0) ++spec.n;
    spec.seed = 100 + i;
    spec.self_loop = 0.5;
    out.push_back(build_topology(spec));
  }
  for (int i = 0; i < 10; ++i) {
    const int n = 20 + 4 * i;
    TopologySpec spec{.kind = TopologyKind::RandomGeometric, .n = n};
    spec.radius = 1.5 * std::sqrt(std::log(n) / (std::numbers::pi * n));
    spec.seed = 200 + i;
    spec.self_loop = 0.5;
    out.push_back(build_topology(spec));
  }
  return out;
}

void criterion5(Outcome& o) {
  const auto graphs = lemma3_graphs();
  double worst_rel = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const TransitionMatrix p = transition_matrix(graphs[gi]);
    const FundamentalReport f = fundamental_zvv(p);
    const Eigen::MatrixXd h = hitting_times(p).expected;
    const double lambda2 = spectrum(p).lambda2;
    for (Eigen::Index v = 0; v < p.rows(); ++v) {
      const double bound = 1.0 / (1.0 - lambda2);
      worst_margin = std::min(worst_margin, bound - f.z_vv(v));
      o.check(f.z_vv(v) <= bound + kZBoundSlack,
              "graph " + std::to_string(gi) + " Z_vv " + fmt(f.z_vv(v)) + " > " + fmt(bound));
      const double direct = f.pi.dot(h.col(v));
      const double via_z = f.z_vv(v) / f.pi(v);
      const double rel = std::abs(via_z - direct) / std::abs(direct);
      worst_rel = std::max(worst_rel, rel);
      o.check(rel <= kHittingRelTol, "graph " + std::to_string(gi) + " E_pi mismatch " + fmt(rel));
    }
  }
  o.detail << (o.pass ? "" : "; ") << graphs.size() << " lazy graphs, min bound margin " << fmt(worst_margin)
           << ", max rel err " << fmt(worst_rel);
}

void criterion6(Outcome& o) {
  std::vector<std::pair<std::string, Graph>> graphs = {
      {"cycle4", cycle(4)},       {"cycle8", cycle(8)},         {"cycle16", cycle(16)},
      {"cycle32", cycle(32)},     {"star5", star(5)},           {"star17", star(17)},
      {"complete4", complete(4)}, {"complete8", complete(8)},   {"complete16", complete(16)}};
  const auto random = lemma3_graphs();
  for (std::size_t i = 0; i < random.size(); ++i) graphs.emplace_back("random" + std::to_string(i), random[i]);
  for (const auto& [name, g] : graphs) {
    __int128 sum_sq = 0;
    for (int v = 0; v < g.n(); ++v) sum_sq += static_cast<__int128>(g.degree(v)) * g.degree(v);
    const Rational r = nu(g);
    const __int128 two_m = 2 * static_cast<__int128>(g.edge_count());
    // (2m)^2 nu / n == sum d^2  <=>  (2m)^2 num == sum d^2 * n * den
    o.check(two_m * two_m * r.num == sum_sq * g.n() * r.den, name + " d(S2) identity");
    o.check(degree_s2(g).holds, name + " degree_s2 report");
  }
  for (int n : {5, 17}) {
    const Rational got = nu(star(n));
    o.check(got == make_rational(static_cast<std::int64_t>(n) * n, 4 * static_cast<std::int64_t>(n - 1)),
            "nu(star " + std::to_string(n) + ") = " + std::to_string(got.num) + "/" + std::to_string(got.den));
  }
  if (o.pass) o.detail << graphs.size() << " topologies, nu(star) exact";
}

Scenario latency_scenario(Graph g) {
  const int n = g.n();
  Scenario s{.label = "latency", .graph = std::move(g), .tree = SchemaTree::complete(2, Op::Append)};
  s.mode = Mode::Fixed;
  s.sink = 0;
  s.sources = spread_sources(n, 2, 0);
  s.mapping = random_mapping(s.tree, n, 1);
  return s;
}

void criterion7(Outcome& o) {
  LatencyParams lp;
  lp.ell = 200;
  lp.replicas = 5;
  lp.seed = 31;
  const auto small = measure_latency(latency_scenario(cycle(8)), 0.01, lp);
  const auto large = measure_latency(latency_scenario(cycle(16)), 0.01, lp);
  const double ratio = large.tau_bar_mean / small.tau_bar_mean;
  o.check(ratio >= kTauRatioLow && ratio <= kTauRatioHigh,
          "tau_bar ratio cycle16/cycle8 " + fmt(ratio) + " outside [2, 8]");
  o.check(!small.inconclusive && !large.inconclusive, "latency run hit the slot cap");

  const Scenario k16 = latency_scenario(complete(16));
  const auto slow = measure_latency(k16, 0.01, lp);
  const auto fast = measure_latency(k16, 0.05, lp);
  o.check(slow.c_hat_mean <= fast.c_hat_mean + kChatSlack,
          "c_hat(0.01) " + fmt(slow.c_hat_mean) + " > c_hat(0.05) + 0.02");
  o.detail << (o.pass ? "" : "; ") << "tau_bar " << fmt(small.tau_bar_mean) << " -> " << fmt(large.tau_bar_mean)
           << " (ratio " << fmt(ratio) << "; per-round latency ratio "
           << fmt(large.round_latency_mean / small.round_latency_mean) << "), c_hat " << fmt(slow.c_hat_mean)
           << " vs " << fmt(fast.c_hat_mean);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion8(Outcome& o, const std::filesystem::path& scratch) {
  const auto doc = nlohmann::json::parse(R"({
    "topology": {"kind": "cycle", "n": 8},
    "schema": {"complete": 4, "op": "append"},
    "mode": "fixed",
    "mapping": "random",
    "mapping_seed": 3,
    "arrival": {"model": "bernoulli", "beta": 0.05},
    "run": {"slots": 20000, "seed": 7},
    "experiment": {"betas": [0.02, 0.4], "horizon": 10000, "replicas": 3, "latency_rounds": 50,
                   "latency_replicas": 3}
  })");
  const RunConfig cfg = config_from_json(doc);
  const auto a = scratch / "a";
  const auto b = scratch / "b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  for (const auto& dir : {a, b}) {
    run_simulate(cfg, dir / "simulate", true);
    run_sweep(cfg, dir / "sweep", true);
  }
  int files = 0;
  for (const char* f : {"simulate/events.csv", "simulate/series.csv", "simulate/audit.txt", "simulate/metrics.json",
                        "sweep/sweep.csv", "sweep/latency.csv", "sweep/sweep.json"}) {
    const std::string x = slurp(a / f);
    o.check(!x.empty(), std::string(f) + " empty");
    o.check(x == slurp(b / f), std::string(f) + " differs between runs");
    ++files;
  }
  if (o.pass) o.detail << files << " artifacts byte-identical";
}

void criterion9(Outcome& o) {
  const auto cases = oracle_cases();
  const int per_case = (kConservationSamples + static_cast<int>(cases.size()) - 1) / static_cast<int>(cases.size());
  constexpr std::int64_t horizon = 20'000;
  std::vector<std::string> errors(cases.size());
  std::vector<int> checked(cases.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      const Scenario& s = cases[i].scenario;
      Rng rng(split_seed(99, i));
      std::vector<std::int64_t> at;
      while (static_cast<int>(at.size()) < per_case) {
        const auto t = static_cast<std::int64_t>(uniform_index(rng, horizon)) + 1;
        if (std::find(at.begin(), at.end(), t) == at.end()) at.push_back(t);
      }
      std::sort(at.begin(), at.end());
      Simulation sim(s.graph, s.tree, make_sim_config(s, 0.02, 5 + i));
      for (auto t : at) {
        while (sim.slot() < t) sim.step();
        if (auto err = sim.check_leaf_cover()) {
          errors[i] = "slot " + std::to_string(t) + ": " + *err;
          break;
        }
        ++checked[i];
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  int total = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    o.check(errors[i].empty(), cases[i].label + " " + errors[i]);
    total += checked[i];
  }
  o.check(total >= kConservationSamples, "only " + std::to_string(total) + " slots checked");
  if (o.pass) o.detail << total << " sampled slots, 0 violations";
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << " (" << std::fixed;
  s.precision(1);
  s << r.seconds << "s)";
  return s.str();
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  const auto scratch = opts.scratch.empty() ? std::filesystem::temp_directory_path() / "incomp-acceptance"
                                            : opts.scratch;
  struct Entry {
    int id;
    const char* name;
    double budget;
    std::function<void(Outcome&)> body;
  };
  const std::vector<Entry> entries = {
      {1, "correctness oracle", kOracleBudget, criterion1},
      {2, "spectral reproduction", 0, criterion2},
      {3, "rate sandwich", kSandwichBudget, criterion3},
      {4, "hitting/mixing oracles", 0, criterion4},
      {5, "fundamental matrix bound", kLemma3Budget, criterion5},
      {6, "degree identity", 0, criterion6},
      {7, "latency scaling", kLatencyBudget, criterion7},
      {8, "determinism", 0, [&](Outcome& o) { criterion8(o, scratch); }},
      {9, "conservation", 0, criterion9},
  };
  std::vector<CriterionResult> out;
  for (const auto& e : entries) {
    if (!opts.only.empty() && !opts.only.count(e.id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      e.body(o);
    } catch (const std::exception& ex) {
      o.check(false, std::string("exception: ") + ex.what());
    }
    CriterionResult r;
    r.id = e.id;
    r.name = e.name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (e.budget > 0) o.check(r.seconds <= e.budget, "runtime over " + fmt(e.budget) + "s");
    r.pass = o.pass;
    r.detail = o.detail.str();
    if (opts.log) *opts.log << format_result(r) << std::endl;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace incomp
