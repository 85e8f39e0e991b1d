#include "incomp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "incomp/error.hpp"

namespace incomp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::Config, path + ": " + msg);
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Object view that remembers which keys were read, so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(join(path_, key), "required key missing");
    return j_.at(key);
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(j_.at(key), path(key));
  }

  template <typename T>
  static T convert(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(where, "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(where, "expected an integer");
        if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
            v.get<std::int64_t>() < 0) {
          fail(where, "expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(where, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(where, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(where, e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(join(path_, key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check_prob(double x, const std::string& where, bool allow_one = true) {
  if (!(x >= 0.0 && (allow_one ? x <= 1.0 : x < 1.0))) {
    fail(where, "value " + std::to_string(x) + (allow_one ? " outside [0, 1]" : " outside [0, 1)"));
  }
}

void check_node(NodeId u, int n, const std::string& where) {
  if (u < 0 || u >= n) {
    fail(where, "node " + std::to_string(u) + " out of range for n = " + std::to_string(n));
  }
}

void read_topology(const json& j, RunConfig& cfg) {
  Section s(j, "topology");
  const std::string kind = Section::convert<std::string>(s.at("kind"), s.path("kind"));
  try {
    cfg.topology.kind = parse_topology_kind(kind);
  } catch (const Error& e) {
    fail(s.path("kind"), e.what());
  }
  s.get("n", cfg.topology.n);
  s.get("dim", cfg.topology.dim);
  s.get("degree", cfg.topology.degree);
  s.get("radius", cfg.topology.radius);
  s.get("seed", cfg.topology.seed);
  s.get("max_retries", cfg.topology.max_retries);
  if (s.has("edges")) {
    const json& edges = s.at("edges");
    if (!edges.is_array()) fail(s.path("edges"), "expected an array of [u, v] pairs");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string where = s.path("edges") + "[" + std::to_string(i) + "]";
      if (!edges[i].is_array() || edges[i].size() != 2) fail(where, "expected [u, v]");
      cfg.topology.edges.emplace_back(Section::convert<int>(edges[i][0], where),
                                      Section::convert<int>(edges[i][1], where));
    }
  }
  if (s.has("file")) {
    if (!cfg.topology.edges.empty()) fail(s.path("file"), "give either edges or file, not both");
    const auto path = Section::convert<std::string>(s.at("file"), s.path("file"));
    try {
      cfg.topology.edges = read_edge_list_file(path);
    } catch (const Error& e) {
      fail(s.path("file"), e.what());
    }
  }
  s.finish();
  if (cfg.topology.kind == TopologyKind::EdgeList) {
    if (cfg.topology.edges.empty()) fail("topology", "edge_list needs edges or file");
  } else if (cfg.topology.n < 1) {
    fail(s.path("n"), "must be >= 1");
  }
}

void read_schema(const json& j, RunConfig& cfg) {
  Section s(j, "schema");
  s.get("complete", cfg.schema.complete);
  s.get("expression", cfg.schema.expression);
  if (s.has("op")) cfg.schema.ops = {Section::convert<std::string>(s.at("op"), s.path("op"))};
  if (s.has("ops")) {
    if (!cfg.schema.ops.empty()) fail(s.path("ops"), "give either op or ops");
    cfg.schema.ops = Section::convert<std::vector<std::string>>(s.at("ops"), s.path("ops"));
  }
  s.finish();
  const bool complete = cfg.schema.complete != 0;
  if (complete == !cfg.schema.expression.empty()) {
    fail("schema", "give exactly one of complete or expression");
  }
  if (complete && cfg.schema.ops.empty()) cfg.schema.ops = {"+"};
  if (!complete && !cfg.schema.ops.empty()) fail("schema", "op/ops only apply to complete");
}

void read_mapping(const json& j, RunConfig& cfg) {
  if (j.is_string()) {
    if (j.get<std::string>() != "random") fail("mapping", "expected \"random\" or a list");
    cfg.mapping_random = true;
    return;
  }
  if (!j.is_array()) fail("mapping", "expected \"random\" or a list of {level, index, node}");
  cfg.mapping_random = false;
  std::set<NodeId> used;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "mapping[" + std::to_string(i) + "]";
    Section e(j[i], where);
    const int level = Section::convert<int>(e.at("level"), e.path("level"));
    const auto index = Section::convert<std::uint64_t>(e.at("index"), e.path("index"));
    const NodeId node = Section::convert<int>(e.at("node"), e.path("node"));
    e.finish();
    const SchemaNodeId id{level, index};
    if (!cfg.mapping.emplace(id, node).second) fail(where, "schema node " + to_string(id) + " mapped twice");
    if (!used.insert(node).second) {
      fail(where, "collision: node " + std::to_string(node) + " already hosts another schema node");
    }
  }
}

void read_arrival(const json& j, RunConfig& cfg) {
  Section s(j, "arrival");
  std::string model = "bernoulli";
  s.get("model", model);
  if (model == "bernoulli") {
    cfg.arrival.kind = ArrivalModel::Kind::Bernoulli;
  } else if (model == "clock_drift" || model == "drift") {
    cfg.arrival.kind = ArrivalModel::Kind::ClockDrift;
  } else {
    fail(s.path("model"), "unknown arrival model '" + model + "'");
  }
  s.get("beta", cfg.arrival.beta);
  s.get("gamma", cfg.arrival.gamma);
  s.finish();
  check_prob(cfg.arrival.beta, "arrival.beta");
  if (!(cfg.arrival.gamma >= 0.0)) fail("arrival.gamma", "must be >= 0");
}

void read_run(const json& j, RunConfig& cfg) {
  Section s(j, "run");
  s.get("slots", cfg.run.slots);
  s.get("rounds", cfg.run.rounds);
  s.get("seed", cfg.run.seed);
  s.get("burn_in", cfg.run.burn_in);
  s.get("slot_cap", cfg.run.slot_cap);
  s.get("cascade", cfg.run.cascade);
  s.finish();
  if (cfg.run.slots < 0) fail("run.slots", "must be >= 0");
  if (cfg.run.slot_cap < 1) fail("run.slot_cap", "must be >= 1");
  check_prob(cfg.run.burn_in, "run.burn_in", false);
}

void read_analytics(const json& j, RunConfig& cfg) {
  Section s(j, "analytics");
  s.get("mixing_eps", cfg.analytics.mixing_eps);
  s.get("laziness", cfg.analytics.laziness);
  s.get("c_hat", cfg.analytics.c_hat);
  if (s.has("log_base")) {
    const json& v = s.at("log_base");
    const std::string name = v.is_number() ? v.dump() : Section::convert<std::string>(v, s.path("log_base"));
    try {
      cfg.analytics.log_base = parse_log_base(name);
    } catch (const Error& e) {
      fail(s.path("log_base"), e.what());
    }
  }
  s.finish();
  if (!(cfg.analytics.mixing_eps > 0.0 && cfg.analytics.mixing_eps < 1.0)) {
    fail("analytics.mixing_eps", "must be in (0, 1)");
  }
  check_prob(cfg.analytics.laziness, "analytics.laziness", false);
  check_prob(cfg.analytics.c_hat, "analytics.c_hat");
}

void read_experiment(const json& j, RunConfig& cfg) {
  Section s(j, "experiment");
  auto& e = cfg.experiment;
  s.get("slope_threshold", e.slope_threshold);
  s.get("queue_cap", e.queue_cap_per_source);
  s.get("replicas", e.replicas);
  s.get("tolerance", e.tolerance);
  s.get("horizon", e.horizon);
  s.get("burn_in", e.burn_in);
  s.get("betas", e.betas);
  s.get("latency_rounds", e.latency_rounds);
  s.get("latency_replicas", e.latency_replicas);
  s.finish();
  if (!(e.slope_threshold > 0.0)) fail("experiment.slope_threshold", "must be > 0");
  if (e.queue_cap_per_source < 1) fail("experiment.queue_cap", "must be >= 1");
  if (e.replicas < 3) fail("experiment.replicas", "must be >= 3");
  if (!(e.tolerance > 0.0 && e.tolerance < 1.0)) fail("experiment.tolerance", "must be in (0, 1)");
  if (e.horizon < 10'000) fail("experiment.horizon", "must be >= 10000");
  check_prob(e.burn_in, "experiment.burn_in", false);
  for (std::size_t i = 0; i < e.betas.size(); ++i) {
    check_prob(e.betas[i], "experiment.betas[" + std::to_string(i) + "]");
  }
  if (e.latency_rounds < 1) fail("experiment.latency_rounds", "must be >= 1");
  if (e.latency_replicas < 1) fail("experiment.latency_replicas", "must be >= 1");
}

void read_constants(const json& j, RunConfig& cfg) {
  Section s(j, "constants");
  s.get("alpha", cfg.constants.alpha);
  s.get("alpha_hat", cfg.constants.alpha_hat);
  s.get("b", cfg.constants.b);
  s.get("D", cfg.constants.d);
  s.finish();
  for (auto [name, v] : {std::pair{"alpha", cfg.constants.alpha}, std::pair{"alpha_hat", cfg.constants.alpha_hat},
                         std::pair{"b", cfg.constants.b}, std::pair{"D", cfg.constants.d}}) {
    if (!(v > 0.0)) fail(std::string("constants.") + name, "must be > 0");
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig config_from_json(json doc) {
  RunConfig cfg;
  Section root(doc, "");
  read_topology(root.at("topology"), cfg);
  read_schema(root.at("schema"), cfg);
  if (root.has("mode")) {
    const auto name = Section::convert<std::string>(root.at("mode"), "mode");
    try {
      cfg.mode = parse_mode(name);
    } catch (const Error& e) {
      fail("mode", e.what());
    }
  }
  if (root.has("sources")) {
    const json& v = root.at("sources");
    if (v.is_string()) {
      if (v.get<std::string>() != "auto") fail("sources", "expected \"auto\" or a list of nodes");
    } else {
      cfg.sources = Section::convert<std::vector<NodeId>>(v, "sources");
    }
  }
  root.get("sink", cfg.sink);
  if (root.has("mapping")) {
    read_mapping(root.at("mapping"), cfg);
  } else if (cfg.mode == Mode::Fixed) {
    fail("mapping", "required in fixed mode (\"random\" or an explicit list)");
  }
  root.get("mapping_seed", cfg.mapping_seed);
  if (root.has("arrival")) read_arrival(root.at("arrival"), cfg);
  if (root.has("run")) read_run(root.at("run"), cfg);
  if (root.has("analytics")) read_analytics(root.at("analytics"), cfg);
  if (root.has("experiment")) read_experiment(root.at("experiment"), cfg);
  if (root.has("constants")) read_constants(root.at("constants"), cfg);
  root.finish();

  // Cross-field checks need the built graph and tree.
  Graph g = [&] {
    try {
      return build_graph(cfg);
    } catch (const Error& e) {
      fail("topology", e.what());
    }
  }();
  SchemaTree tree = [&] {
    try {
      return build_schema(cfg);
    } catch (const Error& e) {
      fail("schema", e.what());
    }
  }();
  const int n = g.n();
  check_node(cfg.sink, n, "sink");
  if (cfg.sources) {
    if (static_cast<int>(cfg.sources->size()) != tree.k()) {
      fail("sources", "expected " + std::to_string(tree.k()) + " nodes, got " +
                          std::to_string(cfg.sources->size()));
    }
    std::set<NodeId> seen;
    for (std::size_t i = 0; i < cfg.sources->size(); ++i) {
      const std::string where = "sources[" + std::to_string(i) + "]";
      check_node((*cfg.sources)[i], n, where);
      if (!seen.insert((*cfg.sources)[i]).second) fail(where, "sources must be distinct");
    }
  } else if (tree.k() > n) {
    fail("sources", "K exceeds n");
  }
  if (cfg.mode == Mode::Fixed) {
    if (cfg.mapping_random) {
      if (tree.internal_count() > static_cast<std::size_t>(n)) {
        fail("mapping", "more internal schema nodes than network nodes");
      }
    } else {
      for (const auto& [id, node] : cfg.mapping) {
        if (!tree.contains(id) || tree.node(id).source) {
          fail("mapping", to_string(id) + " is not an internal schema node");
        }
        check_node(node, n, "mapping " + to_string(id));
      }
      for (const auto& id : tree.internal_ids()) {
        if (!cfg.mapping.count(id)) fail("mapping", "internal node " + to_string(id) + " has no host");
      }
    }
  }

  cfg.document = std::move(doc);
  cfg.hash = fnv1a(cfg.document.dump());
  return cfg;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column with the offending line.
    const std::size_t at = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, text.size()) : 0;
    std::size_t line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    }
    const std::size_t line_end = text.find('\n', line_start);
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << (at - line_start + 1) << ": " << e.what() << "\n  "
        << text.substr(line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start);
    throw Error(ErrorCode::Config, msg.str());
  }
  try {
    return config_from_json(std::move(doc));
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, origin + ": " + e.what());
  }
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

RunConfig with_override(const RunConfig& cfg, const std::string& dotted, json value) {
  json doc = cfg.document;
  json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      break;
    }
    if (!cur->contains(key)) (*cur)[key] = json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
  return config_from_json(std::move(doc));
}

Graph build_graph(const RunConfig& cfg) {
  TopologySpec spec = cfg.topology;
  spec.self_loop = cfg.analytics.laziness;
  return build_topology(spec);
}

SchemaTree build_schema(const RunConfig& cfg) {
  if (!cfg.schema.expression.empty()) return SchemaTree::from_expression(cfg.schema.expression);
  std::vector<Op> ops;
  for (const auto& tag : cfg.schema.ops) ops.push_back(parse_op(tag));
  return SchemaTree::complete(cfg.schema.complete, ops);
}

Scenario build_scenario(const RunConfig& cfg) {
  Graph g = build_graph(cfg);
  SchemaTree tree = build_schema(cfg);
  const int n = g.n();
  const int k = tree.k();
  Scenario s{
      .label = std::string(to_string(cfg.topology.kind)) + "-n" + std::to_string(n),
      .graph = std::move(g),
      .tree = std::move(tree),
  };
  s.mode = cfg.mode;
  s.sink = cfg.sink;
  s.sources = cfg.sources ? *cfg.sources : spread_sources(n, k, cfg.sink);
  if (cfg.mode == Mode::Fixed) {
    s.mapping = cfg.mapping_random ? random_mapping(s.tree, n, cfg.mapping_seed) : cfg.mapping;
  }
  s.arrival = cfg.arrival.kind;
  s.gamma = cfg.arrival.gamma;
  s.cascade = cfg.run.cascade;
  s.c_hat_burn_in = cfg.run.burn_in;
  s.slot_cap = cfg.run.slot_cap;
  return s;
}

}  // namespace incomp
