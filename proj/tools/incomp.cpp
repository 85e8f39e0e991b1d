#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incomp/acceptance.hpp"
#include "incomp/commands.hpp"
#include "incomp/config.hpp"
#include "incomp/error.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kVerification = 3 };

bool is_validation(incomp::ErrorCode c) {
  using incomp::ErrorCode;
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidParameters:
    case ErrorCode::ParseError:
    case ErrorCode::RepeatedOperand:
    case ErrorCode::NotPowerOfTwo:
    case ErrorCode::NonInjectiveMapping:
    case ErrorCode::SourcesNotDistinct:
    case ErrorCode::SizeMismatch:
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::ConnectivityFailure:
    case ErrorCode::HorizonTooShort:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-network computation simulator and bound toolbox"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  bool audit = false;
  bool latency = false;
  std::vector<std::string> compare_paths;
  std::vector<int> only;
  incomp::Overrides ov;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config,-c", config_path, "run configuration (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", out_dir, "output directory");
    sub->add_option("--seed", ov.seed, "global seed (overrides run.seed)");
    sub->add_option("--replicas", ov.replicas, "replica count");
  };

  auto* analyze = app.add_subcommand("analyze", "spectral, hitting, mixing, min-cut and bound report");
  add_common(analyze, true);
  analyze->add_option("--beta", ov.beta, "arrival rate used in the latency bounds");

  auto* simulate = app.add_subcommand("simulate", "run one simulation and write per-round events");
  add_common(simulate, true);
  simulate->add_option("--beta", ov.beta, "arrival rate");
  simulate->add_option("--ell,--rounds", ov.ell, "generate this many rounds and run until they complete");
  simulate->add_option("--slots", ov.slots, "slot horizon when no round count is set");
  simulate->add_flag("--audit", audit, "write round -> consumed trace audit file");

  auto* sweep = app.add_subcommand("sweep", "stability grid or beta* bisection, optional latency");
  add_common(sweep, true);
  sweep->add_option("--beta", ov.beta, "arrival rate for the latency measurement");
  sweep->add_option("--ell", ov.ell, "rounds per latency replica");
  sweep->add_option("--slots", ov.slots, "stability probe horizon");
  sweep->add_flag("--latency", latency, "also measure latency at arrival.beta");

  auto* compare = app.add_subcommand("compare", "measured beta* and latency against the bounds");
  compare->add_option("configs", compare_paths, "run configurations")->required()->check(CLI::ExistingFile);
  compare->add_option("--out,-o", out_dir, "output directory");
  compare->add_option("--seed", ov.seed, "global seed");
  compare->add_option("--replicas", ov.replicas, "replica count");

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--out,-o", out_dir, "scratch directory");
  verify->add_option("--only", only, "criterion numbers to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (verify->parsed()) {
      incomp::AcceptanceOptions opts;
      opts.only = {only.begin(), only.end()};
      opts.scratch = std::filesystem::path(out_dir) / "verify";
      opts.log = &std::cout;
      const auto results = incomp::run_acceptance(opts);
      int failed = 0;
      for (const auto& r : results) failed += r.pass ? 0 : 1;
      std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
      return failed == 0 ? kOk : kVerification;
    }
    if (compare->parsed()) {
      std::vector<incomp::RunConfig> cfgs;
      for (const auto& p : compare_paths) {
        cfgs.push_back(incomp::apply_overrides(incomp::parse_config(p), ov, true));
      }
      std::cout << incomp::run_compare(cfgs, out_dir).string() << "\n";
      return kOk;
    }
    const bool for_sweep = sweep->parsed();
    const auto cfg = incomp::apply_overrides(incomp::parse_config(config_path), ov, for_sweep);
    std::filesystem::path written;
    if (analyze->parsed()) {
      written = incomp::run_analyze(cfg, out_dir);
    } else if (simulate->parsed()) {
      written = incomp::run_simulate(cfg, out_dir, audit);
    } else {
      written = incomp::run_sweep(cfg, out_dir, latency);
    }
    std::cout << written.string() << "\n";
    return kOk;
  } catch (const incomp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation(e.code()) ? kValidation : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
