#pragma once

#include <string>

#include "ips/config.hpp"
#include "ips/lattice.hpp"
#include "ips/table.hpp"

namespace ips {

/// Dispatches a config to the matching module and returns its table. The
/// metadata block carries tool, version, command, seed, config_hash,
/// wall_time_s, pass (verify only) and the serialized config, one
/// `# config: key=value` line per entry. Everything except wall_time_s is a
/// function of the config alone.
ResultTable run(const ExperimentConfig& config);

// single | pair | triple | empty | explicit "(0,0);(1,0)" sites on the torus.
SiteSet parse_target(const std::string& text, const TorusLattice& lattice);

// Rebuilds the config from the `# config:` lines of a written table and
// checks it against the stored config_hash.
ExperimentConfig config_from_csv(const std::string& path);

}  // namespace ips
