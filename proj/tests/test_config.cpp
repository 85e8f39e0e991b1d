#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "incomp/commands.hpp"
#include "incomp/config.hpp"
#include "incomp/error.hpp"

using namespace incomp;
namespace fs = std::filesystem;

namespace {

const char* const kMinimal = R"({
  "topology": {"kind": "cycle", "n": 8},
  "schema": {"complete": 4, "op": "+"},
  "mode": "fixed",
  "mapping": "random",
  "arrival": {"beta": 0.05}
})";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "t.json");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(INCOMP_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("incomp-test-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config is valid") {
  const RunConfig c = parse_config_text(kMinimal);
  CHECK(c.topology.kind == TopologyKind::Cycle);
  CHECK(c.schema.complete == 4);
  CHECK(c.mapping_random);
  CHECK(c.arrival.beta == 0.05);
  const Scenario s = build_scenario(c);
  CHECK(s.tree.k() == 4);
  CHECK(s.mapping.size() == 3);
  CHECK(s.sources.size() == 4);
}

TEST_CASE("validation errors name the field") {
  CHECK(error_of(replace(kMinimal, "0.05", "1.5")).find("arrival.beta") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"n\": 8", "\"n\": 8, \"sides\": 2")).find("topology.sides: unknown key") !=
        std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"mode\"", "\"modee\"")).find("unknown key") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"mapping\": \"random\",", "")).find("mapping") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"mapping\": \"random\"",
                         R"("mapping": [{"level": 0, "index": 0, "node": 1},
                                        {"level": 1, "index": 0, "node": 1},
                                        {"level": 1, "index": 1, "node": 2}])"))
            .find("collision") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"mode\"", "\"sink\": 8, \"mode\"")).find("sink") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"mode\"", "\"sources\": [0, 1, 2], \"mode\"")).find("sources") !=
        std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"complete\": 4", "\"complete\": 3")).find("schema") != std::string::npos);
  CHECK(error_of(replace(kMinimal, "\"op\": \"+\"", "\"op\": \"+\", \"expression\": \"a+b\"")).find("schema") !=
        std::string::npos);
}

TEST_CASE("parse errors carry line context") {
  const std::string text = "{\n  \"topology\": {\"kind\": \"cycle\", \"n\": 8},\n  \"schema\": {complete: 4}\n}";
  const std::string err = error_of(text);
  CHECK(err.find("t.json:3:") != std::string::npos);
  CHECK(err.find("\"schema\": {complete: 4}") != std::string::npos);
}

TEST_CASE("explicit mapping and sources") {
  const RunConfig c = parse_config_text(replace(kMinimal, "\"mapping\": \"random\"",
                                                R"("sources": [1, 3, 5, 7], "sink": 0,
                                                   "mapping": [{"level": 0, "index": 0, "node": 0},
                                                               {"level": 1, "index": 0, "node": 2},
                                                               {"level": 1, "index": 1, "node": 6}])"));
  const Scenario s = build_scenario(c);
  CHECK(s.sources == std::vector<NodeId>{1, 3, 5, 7});
  CHECK(s.mapping.at(SchemaNodeId{1, 1}) == 6);
}

TEST_CASE("overrides re-validate and change the hash") {
  const RunConfig c = parse_config_text(kMinimal);
  CHECK(parse_config_text(kMinimal).hash == c.hash);
  const RunConfig d = with_override(c, "arrival.beta", 0.2);
  CHECK(d.arrival.beta == 0.2);
  CHECK(d.hash != c.hash);
  CHECK_THROWS_AS(with_override(c, "arrival.beta", 2.0), Error);
  Overrides o;
  o.seed = 9;
  o.slots = 12345;
  const RunConfig e = apply_overrides(c, o, false);
  CHECK(e.run.seed == 9);
  CHECK(e.run.slots == 12345);
  CHECK(apply_overrides(c, o, true).experiment.horizon == 12345);
}

TEST_CASE("shipped configs parse") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(PROJECT_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    CHECK_NOTHROW(parse_config(entry.path().string()));
    ++count;
  }
  CHECK(count >= 3);
}

TEST_CASE("number formatting") {
  CHECK(fmt(1.0 / 3.0) == "0.333333333333");
  CHECK(fmt(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(jnum(2.0 / 3.0).get<double>() == 0.666666666667);
  CHECK(jnum(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("analyze report on the complete graph") {
  const RunConfig c = parse_config_text(R"({
    "topology": {"kind": "complete", "n": 4},
    "schema": {"complete": 2},
    "mode": "flexible",
    "arrival": {"beta": 0.1}
  })");
  const auto dir = scratch("analyze");
  const auto path = run_analyze(c, dir);
  const auto j = nlohmann::json::parse(slurp(path));
  CHECK(j["report"]["lambda2"].get<double>() == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(j["config_hash"] == hex_hash(c.hash));
  CHECK(j["seed"] == 1);
}

TEST_CASE("simulate output is byte stable") {
  const RunConfig c = apply_overrides(parse_config_text(kMinimal), Overrides{.seed = 7, .slots = 5000}, false);
  const auto a = scratch("sim-a");
  const auto b = scratch("sim-b");
  run_simulate(c, a, true);
  run_simulate(c, b, true);
  for (const char* f : {"events.csv", "series.csv", "audit.txt", "metrics.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string events = slurp(a / "events.csv");
  CHECK(events.rfind("# config_hash=" + hex_hash(c.hash) + " seed=7\n", 0) == 0);
  CHECK(events.find("round,appearance_slot_max,completion_slot\n") != std::string::npos);
  CHECK(events.find("# summary ") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  const std::string cfg = (fs::path(PROJECT_DIR) / "configs" / "complete4_analyze.json").string();
  const auto out = scratch("cli");
  CHECK(run_cli("analyze --config " + cfg + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(run_cli("simulate --config " + cfg + " --out " + out.string() + " --seed 7 --slots 2000 --audit") == 0);
  CHECK(fs::exists(out / "audit.txt"));

  const fs::path bad = out / "bad.json";
  std::ofstream(bad) << replace(kMinimal, "0.05", "1.5");
  CHECK(run_cli("simulate --config " + bad.string() + " --out " + out.string()) == 1);
  CHECK(run_cli("simulate --config " + cfg + " --beta 7") == 1);
  CHECK(run_cli("bogus") == 1);
  CHECK(run_cli("verify --only 2 --only 6 --out " + out.string()) == 0);

  const fs::path capped = out / "capped.json";
  std::ofstream(capped) << R"({"topology": {"kind": "complete", "n": 4}, "schema": {"complete": 2},
    "mode": "flexible", "arrival": {"beta": 0.0}, "run": {"rounds": 1, "slot_cap": 100}})";
  CHECK(run_cli("simulate --config " + capped.string() + " --out " + out.string()) == 2);
}
