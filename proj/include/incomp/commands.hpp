#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "incomp/config.hpp"

namespace incomp {

/// %.12g; "inf"/"-inf"/"nan" for non-finite values.
std::string fmt(double x);

/// Rounds to 12 significant digits for JSON emission; non-finite values
/// become the strings "inf", "-inf", "nan".
nlohmann::json jnum(double x);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<double> beta;
  std::optional<std::uint64_t> ell;
  std::optional<std::int64_t> slots;
};

/// Applies command-line overrides to the config document and re-validates.
/// `ell` and `slots` target run.* for simulate and experiment.* for sweep.
RunConfig apply_overrides(const RunConfig& cfg, const Overrides& o, bool for_sweep);

nlohmann::json report_json(const BoundReport& r);

/// Each command writes its artifacts into `out` (created if missing) and
/// returns the path of the main artifact.
std::filesystem::path run_analyze(const RunConfig& cfg, const std::filesystem::path& out);
std::filesystem::path run_simulate(const RunConfig& cfg, const std::filesystem::path& out, bool audit);
std::filesystem::path run_sweep(const RunConfig& cfg, const std::filesystem::path& out, bool latency);
std::filesystem::path run_compare(const std::vector<RunConfig>& cfgs, const std::filesystem::path& out);

}  // namespace incomp
