#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <omp.h>

#include "incomp/analytics.hpp"
#include "incomp/experiments.hpp"
#include "incomp/reference.hpp"

using namespace incomp;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

void row(const std::string& what, double serial_ref, double serial, double parallel) {
  std::printf("%-34s %10.4f %10.4f %10.4f %8.2fx\n", what.c_str(), serial_ref, serial, parallel,
              serial_ref / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::stoi(argv[1]) : 128;
  std::printf("threads: %d, n = %d\n", omp_get_max_threads(), n);
  std::printf("%-34s %10s %10s %10s %9s\n", "kernel (seconds)", "reference", "serial", "parallel", "speedup");

  TopologySpec spec{.kind = TopologyKind::RandomRegular, .n = n, .degree = 4, .seed = 5};
  spec.self_loop = 0.5;
  const Graph g = build_topology(spec);
  const TransitionMatrix p = transition_matrix(g);

  row("hitting times", seconds([&] { reference::hitting_times(p); }, 1),
      seconds([&] { hitting_times(p, Exec::Serial); }, 1), seconds([&] { hitting_times(p, Exec::Parallel); }, 1));
  row("mixing time", seconds([&] { reference::mixing_time(p, 0.25); }, 1),
      seconds([&] { mixing_time(p, 0.25, Exec::Serial); }, 3),
      seconds([&] { mixing_time(p, 0.25, Exec::Parallel); }, 3));
  row("min-mincut", seconds([&] { reference::min_mincut(p, 0); }, 1),
      seconds([&] { min_mincut(p, 0, Exec::Serial); }, 1), seconds([&] { min_mincut(p, 0, Exec::Parallel); }, 1));

  Scenario s{.label = "bench", .graph = g, .tree = SchemaTree::complete(4, Op::Append)};
  s.mode = Mode::Fixed;
  s.sources = spread_sources(n, 4, 0);
  s.mapping = random_mapping(s.tree, n, 1);
  ProbeParams probe;
  probe.horizon = 50'000;
  probe.replicas = 4;
  const double serial_probe = seconds(
      [&] {
        ProbeParams q = probe;
        q.exec = Exec::Serial;
        stability_probe(s, 0.01, q);
      },
      1);
  const double parallel_probe = seconds([&] { stability_probe(s, 0.01, probe); }, 1);
  row("stability probe (4 replicas)", serial_probe, serial_probe, parallel_probe);
  return 0;
}
