#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/models.hpp"
#include "ips/stats.hpp"

namespace ips {

// Monte Carlo estimates of the two sides of the annihilating duality, and
// optionally the split form P(|xi_v cap zeta_u| odd) with v + u = t.
struct McDualityResult {
  double t = 0, v = 0, u = 0;
  Estimate lhs;    // P(|xi_t cap zeta_0| odd)
  Estimate rhs;    // P(|xi_0 cap zeta_t| odd)
  Estimate split;  // only when has_split
  bool has_split = false;
  double z = 0, z_split_lhs = 0, z_split_rhs = 0;
  std::uint64_t parity_violations = 0;
  bool pass = false;  // every |z| <= 3
};

McDualityResult mc_duality_check(const ModelSpec& m, const Configuration& xi0, const SiteSet& zeta0, double t,
                                 std::uint64_t reps, std::uint64_t seed, double split_v = -1);

struct NuHalfRow {
  double t = 0;
  Estimate odd;        // P(|xi_t cap A| odd), xi_0 ~ product(1/2)
  Estimate half_surv;  // P(zeta^A_t != empty) / 2
  double z = 0;
};

struct NuHalfResult {
  std::vector<NuHalfRow> rows;
  bool columns_agree = true;  // |z| <= 3 at every time
  bool monotone = true;       // odd column non-increasing within 2 joint standard errors
  std::uint64_t parity_violations = 0;
};

NuHalfResult nu_half_probe(const ModelSpec& m, LatticePtr lattice, const SiteSet& A, const std::vector<double>& times,
                           std::uint64_t reps, std::uint64_t seed);

struct OddgoalRow {
  std::size_t K = 0;
  std::size_t pairs = 0;  // |A(x0, xi_0)| as constructed
  Estimate p_odd;         // P(|xi_t cap A| odd)
  Estimate dev;           // |p_odd - 1/2| with the se of p_odd
};

struct OddgoalResult {
  std::vector<OddgoalRow> rows;
  bool decreasing = true;  // dev[i + 1] <= dev[i] + joint se
  double last_dev = 0;
  bool pass = false;  // decreasing and last_dev <= 0.05
};

// xi_0 is a background (ones or zeros) with K well separated pairs
// xi(y) = 1, xi(y + x0) = 0 and A = {y}. K = 0 uses xi_0 = 0 and A = {0}.
OddgoalResult oddgoal_probe(const ModelSpec& m, LatticePtr lattice, const Offset& x0, const std::vector<std::size_t>& Ks,
                            std::uint64_t reps, std::uint64_t seed, double t = 1.0, bool ones_background = true);

struct Flip2Row {
  double t = 0;
  std::size_t size = 0;
  Estimate p;  // P(|xi_t| > 0 and A(x0, xi_t) empty)
};

struct Flip2Result {
  std::vector<Flip2Row> rows;  // grouped by time, sizes ascending
  // at the last time the largest A has a smaller probability than the smallest
  bool decreasing = false;
};

// Targets are nested: the first `size` entries of a seeded random ordering of
// the sites.
Flip2Result flip2_probe(const ModelSpec& m, LatticePtr lattice, const Offset& x0, std::vector<std::size_t> sizes,
                        const std::vector<double>& times, std::uint64_t reps, std::uint64_t seed,
                        const std::string& init = "halfspace");

struct CctRow {
  std::string init;
  std::size_t a_size = 0;
  double T = 0;
  Estimate beta0, beta1, beta_inf;  // at T
  Estimate nu_odd, nu_odd_2T;       // P(|xi cap A| odd) from product(1/2) at T and 2T
  Estimate direct, predicted;       // at T
  Estimate direct_2T, predicted_2T;
  double z = 0, z_2T = 0;
  bool pass = false;  // |z| <= 3 at T
};

struct CctResult {
  std::vector<CctRow> rows;
  bool pass = true;
  bool horizon_sensitive = false;
};

// Direct P(|xi_T cap A| odd) against beta1 1{|A| odd} + beta_inf nu_odd.
CctResult complete_convergence_probe(const ModelSpec& m, LatticePtr lattice, const std::vector<std::string>& inits,
                                     const std::vector<SiteSet>& As, double T, std::uint64_t reps,
                                     std::uint64_t seed);

struct EngineComparison {
  Estimate gillespie, graphical;  // density at t
  double z = 0;
};

// Density at t from the uniformized engine and from the graphical
// construction, independent replicates on each side.
EngineComparison engine_equivalence(const ModelSpec& m, LatticePtr lattice, const std::string& init, double t,
                                    std::uint64_t reps, std::uint64_t seed);

struct PathwiseResult {
  std::uint64_t paths = 0;
  std::uint64_t sites_checked = 0;  // star-clean sites over all paths
  std::uint64_t violations = 0;     // xi_t(x) != xi_0(B^{x,t}_t) at a star-clean site
  std::uint64_t cluster_mismatches = 0;  // equal terminal site but different cluster label, or vice versa
};

// Runs the graphical construction on each path and traces every site back
// through the voter arrows.
PathwiseResult vmdual_pathwise_check(const ModelSpec& m, LatticePtr lattice, const std::string& init, double t,
                                     std::uint64_t paths, std::uint64_t seed);

// The sites y_1..y_K of the oddgoal construction, spread over a grid.
std::vector<std::uint32_t> separated_sites(const TorusLattice& L, std::size_t K, const Offset& x0);

}  // namespace ips
