#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace incomp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::set<int> only;                 // empty = all
  std::filesystem::path scratch;      // working dir for the determinism check
  std::ostream* log = nullptr;        // one line per criterion as it finishes
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// "[PASS] 3 name: detail (1.2s)".
std::string format_result(const CriterionResult& r);

}  // namespace incomp
