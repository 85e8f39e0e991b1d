#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "incomp/analytics.hpp"
#include "incomp/engine.hpp"
#include "incomp/experiments.hpp"
#include "incomp/topology.hpp"

namespace incomp {

struct SchemaSpec {
  int complete = 0;              // K when building a complete tree
  std::vector<std::string> ops;  // one tag, or one per internal node
  std::string expression;
};

struct RunSection {
  std::int64_t slots = 10'000;
  std::uint64_t rounds = 0;  // when > 0: run until the first `rounds` rounds complete
  std::uint64_t seed = 1;
  double burn_in = 0.2;
  std::int64_t slot_cap = 100'000'000;
  bool cascade = false;
};

struct AnalyticsSection {
  double mixing_eps = 0.25;
  double laziness = 0.0;
  LogBase log_base = LogBase::Two;
  double c_hat = 0.0;
};

struct ExperimentSection {
  double slope_threshold = 1e-3;
  std::int64_t queue_cap_per_source = 50;
  int replicas = 3;
  double tolerance = 0.02;
  std::int64_t horizon = 200'000;
  double burn_in = 0.4;
  std::vector<double> betas;  // grid sweep; empty = bisection
  std::uint64_t latency_rounds = 200;
  int latency_replicas = 5;
};

struct RunConfig {
  TopologySpec topology;
  SchemaSpec schema;
  Mode mode = Mode::Fixed;
  std::optional<std::vector<NodeId>> sources;  // nullopt = auto spread
  NodeId sink = 0;
  bool mapping_random = true;
  std::uint64_t mapping_seed = 1;
  std::map<SchemaNodeId, NodeId> mapping;
  ArrivalModel arrival;
  RunSection run;
  AnalyticsSection analytics;
  ExperimentSection experiment;
  BoundConstants constants;

  nlohmann::json document;  // effective config, overrides applied
  std::uint64_t hash = 0;   // FNV-1a of document.dump()
};

/// Parses and validates; throws Error(Config) with a field path or line.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::string& path);
RunConfig config_from_json(nlohmann::json doc);

/// Sets a dotted key (e.g. "arrival.beta") and re-validates.
RunConfig with_override(const RunConfig& cfg, const std::string& dotted, nlohmann::json value);

Graph build_graph(const RunConfig& cfg);
SchemaTree build_schema(const RunConfig& cfg);
Scenario build_scenario(const RunConfig& cfg);

std::string hex_hash(std::uint64_t h);

}  // namespace incomp
