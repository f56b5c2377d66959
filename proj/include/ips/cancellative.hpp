#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

using OffsetSet = std::vector<Offset>;  // sorted, no duplicates

/// Cancellative representation
///   c(x, xi) = (k0/2) (1 - (2 xi(x) - 1) sum_A q0(A - x) H(xi, A)).
struct CancellativeSpec {
  struct Entry {
    OffsetSet set;
    double weight = 0;
  };
  double k0 = 0;
  int dim = 0;
  std::vector<Entry> q0;  // sorted lexicographically by set

  double total_mass() const;
  double weight(const OffsetSet& set) const;
  std::size_t max_set_size() const;
};

// In-place unnormalized Walsh-Hadamard transform; size must be a power of 2.
void walsh_hadamard(std::vector<double>& v);

// H(xi, A) = prod_{a in A} (2 xi(a) - 1)
int H(const Configuration& cfg, const SiteSet& A);
// Same on window masks: both arguments index the same window.
inline int H_mask(std::uint64_t xi, std::uint64_t A) {
  return (__builtin_popcountll(A & ~xi) & 1) ? -1 : 1;
}

CancellativeSpec extract_cancellative(const std::vector<Offset>& window, const std::vector<double>& table,
                                      int dim);
CancellativeSpec extract_cancellative(const ModelSpec& m);

// Rebuilds the rate table on `window` from a spec; every set must lie in the window.
std::vector<double> reconstruct_table(const CancellativeSpec& s, const std::vector<Offset>& window);

CancellativeSpec lv_closed_form(double alpha, const Kernel& k);

bool is_parity_preserving(const CancellativeSpec& s);

struct EquivalenceReport {
  bool zero_trap = false;
  bool parity = false;
  bool symmetric = false;
};

// Evaluates the three properties independently; throws EquivalenceViolated
// if they disagree.
EquivalenceReport check_trap_parity_symmetry_equivalence(const ModelSpec& m);

struct DominationReport {
  bool holds = true;
  std::vector<Offset> failing;
};

// q0({x}) > p(x) / (3 k0) for every x with p(x) > 0 and |x| < R1.
DominationReport dual_kernel_domination(const CancellativeSpec& s, const Kernel& k, double R1);

// Largest entrywise difference; sets missing on one side count as weight 0.
double spec_distance(const CancellativeSpec& a, const CancellativeSpec& b);

// CSV rows "set,weight" in lexicographic set order, preceded by k0.
void write_kernel_csv(std::ostream& os, const CancellativeSpec& s);

std::string set_literal(const OffsetSet& set, int dim);

}  // namespace ips
