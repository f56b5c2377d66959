#pragma once

#include <cstdint>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/stats.hpp"

namespace ips {

/// Site variables theta(x, n) on the even space-time lattice
/// {(x, n): sum x_i + n even}, periodic in space, generations 0..n_max.
///
/// theta(x, n) = 1(U(x, n) < open_p) with U a stateless hash of the key, so
/// fields built from one key at different densities are coupled monotonically.
class PercField {
 public:
  PercField(LatticePtr space, int n_max, double open_p, std::uint64_t key);
  // Explicit bits indexed n * space.size() + site; wrong-parity entries are ignored.
  static PercField from_bits(LatticePtr space, int n_max, std::vector<std::uint8_t> bits);

  const TorusLattice& space() const { return *space_; }
  const LatticePtr& space_ptr() const { return space_; }
  int n_max() const { return n_max_; }
  double open_p() const { return open_p_; }

  bool on_lattice(std::size_t site, int n) const { return ((parity_[site] + n) & 1) == 0; }
  double uniform(std::size_t site, int n) const;
  bool open(std::size_t site, int n) const;

  // One byte per (n, site), zero off the parity sublattice.
  std::vector<std::uint8_t> materialize() const;
  // Fraction of open sites among parity-correct sites of generations 0..n_max-1.
  Estimate open_fraction() const;

 private:
  PercField() = default;

  LatticePtr space_;
  int n_max_ = 0;
  double open_p_ = 0;
  std::uint64_t key_ = 0;
  std::vector<std::uint8_t> parity_;
  std::vector<std::uint8_t> bits_;
};

PercField sample_field(std::vector<int> width, int n_max, double open_p, std::uint64_t seed, std::uint64_t rep = 0);

// slab_axis < 0 uses every axis; otherwise only +-e_k steps.
struct Front {
  int slab_axis = -1;
  std::vector<std::vector<std::uint32_t>> gens;  // W_0..W_m, each sorted
  std::uint64_t wrap_contacts = 0;               // steps across the seam opposite the origin
};

Front front_evolve(const PercField& field, const std::vector<std::uint32_t>& W0, int m, int slab_axis = -1);

struct PercParams {
  std::vector<int> width{512, 512};
  int n_max = 200;
  double open_p = 1 - 1.0 / 1296;
  int slab_axis = 0;
};

struct PercSurvivalRow {
  double open_p = 0;
  std::uint64_t alive = 0;
  Estimate rho;
};

struct PercSurvival {
  std::vector<PercSurvivalRow> rows;  // one per density, ascending
  std::uint64_t reps = 0;
  std::uint64_t wrap_contacts = 0;
  // replicates alive at a density but dead at a larger one; zero under the coupling
  std::uint64_t coupling_violations = 0;
  int max_spread = 0;  // largest |x|_inf reached from the origin
};

// Frequency of W^0_{n_max} != empty. Every density reuses the same uniforms.
PercSurvival survival_estimate(const PercParams& p, std::uint64_t reps, std::uint64_t seed);
PercSurvival survival_sweep(const PercParams& p, std::vector<double> densities, std::uint64_t reps,
                              std::uint64_t seed);

struct CoverageRow {
  std::size_t size = 0;  // |A|
  Estimate p;            // P(W^0_{2n} != empty, W^0_{2n} cap A = empty)
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  Estimate survival;  // P(W^0_{2n} != empty) on the same fields
  std::uint64_t wrap_contacts = 0;
};

// Nested targets: row i uses the first sizes[i] entries of A. A must lie in
// the even sublattice.
CoverageResult coverage_sweep(const PercParams& p, const std::vector<Offset>& A, const std::vector<std::size_t>& sizes,
                              int n, std::uint64_t reps, std::uint64_t seed);
Estimate coverage_probe(const PercParams& p, const std::vector<Offset>& A, int n, std::uint64_t reps,
                        std::uint64_t seed);

// (1 - gamma'^(1/Delta))^2 with Delta = (2K + 1)^(d + 1).
double dependent_to_iid_density(double gamma_prime, int K, int d);
double block_delta(int K, int d);
// Largest gamma' whose converted density reaches `target`: (1 - sqrt(target))^Delta.
// The log form avoids underflow for large Delta.
double iid_threshold_gamma_prime(double target, int K, int d);
double log_iid_threshold_gamma_prime(double target, int K, int d);

}  // namespace ips
