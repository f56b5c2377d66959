#pragma once

#include <cstdint>
#include <vector>

#include "ips/alias.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"
#include "ips/rng.hpp"
#include "ips/stats.hpp"

namespace ips {

/// Rate-1 p-walks on a torus that move independently until they meet and
/// then move together.
class CoalescingWalks {
 public:
  CoalescingWalks(const Kernel& k, LatticePtr torus);

  struct Result {
    // labels[i][j]: cluster of start j at times[i]; clusters numbered in
    // order of first appearance
    std::vector<std::vector<std::uint8_t>> labels;
    std::vector<std::uint32_t> clusters;  // cluster count at each time
    std::vector<double> merge_times;
    std::uint32_t wrap_meetings = 0;  // meetings of walks whose unwrapped positions differ
    std::uint32_t monotone_violations = 0;
  };

  // Starts are offsets from site 0; times sorted ascending.
  Result run(const std::vector<Offset>& starts, const std::vector<double>& times, Rng& rng) const;

  const TorusLattice& torus() const { return *torus_; }
  const Kernel& kernel() const { return kernel_; }

 private:
  Kernel kernel_;
  LatticePtr torus_;
  AliasTable alias_;
  std::vector<std::uint32_t> nbr_;
};

// Default torus for walks: 64 per side in d = 3, wider in lower dimension.
LatticePtr default_walk_torus(int dim);

struct CoalescenceStats {
  std::vector<Offset> F;
  double t_max = 0;
  std::uint64_t reps = 0;
  std::vector<Estimate> dist;       // P(|A^F_{t_max}| = k), k = 0..|F|
  std::vector<Estimate> dist_half;  // same at t_max / 2
  double late_rate = 0;             // fraction of runs with a merge in the last 10% of the horizon
  std::uint64_t wrap_meetings = 0;
  std::uint32_t monotone_violations = 0;
  // every probability moved by less than 2 joint standard errors between t_max/2 and t_max
  bool horizon_stable = true;
};

CoalescenceStats coalescence_distribution(const Kernel& k, const std::vector<Offset>& F, double t_max,
                                          std::uint64_t reps, std::uint64_t seed, LatticePtr torus = nullptr);

struct WindowSample {
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> cluster;
  bool equilibrium = true;  // false in d <= 2, where P_u is trivial
  std::uint32_t wrap_meetings = 0;
};

// Cluster-coin sample of the P_u window marginal after running coalescing
// walks from W for t_max.
WindowSample sample_voter_equilibrium_window(const Kernel& k, const std::vector<Offset>& W, double u, double t_max,
                                             Rng& rng, LatticePtr torus = nullptr);
WindowSample sample_voter_equilibrium_window(const CoalescingWalks& walks, const std::vector<Offset>& W, double u,
                                             double t_max, Rng& rng);

struct ReactionRow {
  double u = 0;
  Estimate f_hat;       // coin sampling under P_u
  Estimate f_partition; // exact expectation over coins given the partition
  Estimate closed;      // triple-sum route (LV, GV); mean 0 and se 0 when unavailable
};

struct ReactionCurve {
  std::vector<ReactionRow> rows;
  bool closed_available = false;
  bool equilibrium = true;
  // least squares f_hat(u) = a u(1-u)(1-2u), per-realization so a carries an se
  Estimate cubic_coef;
  // LV only: a / (2(1 - alpha)) and the triple-sum value sum p p P(3 clusters) / 2
  Estimate p3_fit, p3_triple;
  std::vector<double> antisym_z;  // (f(u) + f(1-u)) / se for each grid u
  std::uint64_t wrap_meetings = 0;
  double late_rate = 0;
};

// f(u) = eps^2 < (1 - xi(0)) h_1 - xi(0) h_0 >_u with the eps -> 0 maps.
ReactionCurve estimate_f(const PerturbationView& view, const std::vector<double>& u_grid, std::uint64_t reps,
                         double t_max, std::uint64_t seed, LatticePtr torus = nullptr, int coins = 32);

struct FPrime {
  Estimate estimate;  // random-cluster derivative estimator
  Estimate closed;    // AV: eps^2 E(A - 1 - 1(A > 1)); LV, GV: triple-sum coefficient
  bool closed_available = false;
  std::vector<Estimate> a_dist;  // AV: law of A = |A^{N ∪ {0}}|
};

FPrime fprime_zero(const PerturbationView& view, std::uint64_t reps, double t_max, std::uint64_t seed,
                   LatticePtr torus = nullptr);

inline double cubic_phi(double u) { return u * (1 - u) * (1 - 2 * u); }

}  // namespace ips
