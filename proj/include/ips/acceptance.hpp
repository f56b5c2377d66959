#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ips {

struct AcceptanceOptions {
  std::uint64_t seed = 42;
  std::string out_dir = "acceptance";  // one CSV per criterion; empty disables output
  // Criterion ids, names or group tags to run; empty runs everything.
  std::vector<std::string> only;
  // Kernel literal for the d = 2 models; checked by the lattice gate first.
  std::string kernel2 = "nn(2)";
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct CriterionInfo {
  int id;
  const char* name;
  std::vector<const char*> tags;
};

const std::vector<CriterionInfo>& acceptance_criteria();

// Runs the selected criteria in id order and prints one PASS/FAIL line per
// criterion to `log` as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& log);

}  // namespace ips
