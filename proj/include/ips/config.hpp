#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ips {

/// Flat experiment description. Text form, one entry per line:
///
///   line    := blank | '#' comment | key '=' value
///   key     := [a-z_][a-z0-9_]*
///   value   := rest of the line, surrounding blanks trimmed
///
/// Keys may appear at most once; unknown keys are rejected with their line
/// and column. Lists are comma separated; a grid `a:b:step` expands to
/// a, a + step, ..., b.
struct ExperimentConfig {
  std::string command = "evolve";  // evolve | dual | cancellative | reaction | perc | verify
  std::string model = "voter";
  std::vector<int> lattice{16, 16};  // written as 16x16
  std::string init = "half";
  std::vector<double> times{0, 1, 2, 5, 10};
  std::uint64_t reps = 100;
  std::uint64_t seed = 42;
  std::string out;
  std::string probe;  // verify suite, or "fprime" for reaction
  std::string target = "pair";
  std::vector<double> u_grid{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1};
  double tmax = 2000;
  std::vector<double> densities{1 - 1.0 / 1296};
  int n = 200;
  int width = 512;
  int dim = 2;
  std::string mode = "slab1";  // slab1 | full
  std::vector<double> ks{1, 4, 16, 64};
  std::string snap_prefix;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& c);

// Assigns one key; `line` and `col` locate the entry for error messages.
void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value, int line = 0, int col = 0);
const std::vector<std::string>& config_keys();

std::vector<double> parse_grid(std::string_view text);
std::string format_list(const std::vector<double>& v);

// 64-bit FNV-1a, hex.
std::string fnv1a_hex(std::string_view data);

}  // namespace ips
