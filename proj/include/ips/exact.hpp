#pragma once

#include <cstdint>
#include <vector>

#include "ips/cancellative.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"

namespace ips {

constexpr std::size_t kMaxExactSites = 12;

// Sparse generator without diagonal: row r holds (col, rate) pairs with
// col != r; the diagonal is minus the row sum.
struct SparseGenerator {
  std::vector<std::uint32_t> row_start;
  std::vector<std::uint32_t> col;
  std::vector<double> rate;
  std::vector<double> exit;

  std::size_t size() const { return exit.size(); }
  double max_exit() const;
};

/// Full generators of the spin system and of its annihilating dual on a
/// torus with at most 12 sites. States are bit masks over sites.
class ExactSystem {
 public:
  ExactSystem(const ModelSpec& m, LatticePtr lattice);

  std::size_t sites() const { return lattice_->size(); }
  std::size_t states() const { return std::size_t(1) << sites(); }
  const CancellativeSpec& spec() const { return spec_; }
  const SparseGenerator& forward() const { return fwd_; }
  const SparseGenerator& dual() const { return dual_; }

  // P(|xi_t ∩ zeta0| odd) for every initial xi0, by the backward equation.
  std::vector<double> forward_odd(std::uint32_t zeta0, double t) const;
  // P(|xi0 ∩ zeta_t| odd) for every xi0, from the law of zeta_t.
  std::vector<double> dual_odd(std::uint32_t zeta0, double t) const;
  // Law of zeta_t started from zeta0.
  std::vector<double> dual_law(std::uint32_t zeta0, double t) const;
  // Law of xi_t started from xi0.
  std::vector<double> forward_law(std::uint32_t xi0, double t) const;

  // Off-diagonal entries nonnegative and every jump from a set keeps its
  // size parity (only meaningful when the spec is parity preserving).
  bool generators_valid() const;
  bool dual_conserves_parity() const;

 private:
  LatticePtr lattice_;
  CancellativeSpec spec_;
  SparseGenerator fwd_;
  SparseGenerator dual_;
};

// Number of uniformization terms n such that the Poisson(lambda) tail
// P(N > n) is below tol; the truncated series error is at most this tail
// because every P^k f is bounded by sup|f|.
std::size_t poisson_truncation(double lambda, double tol);

// exp(tQ) f, with Q given by a sparse generator.
std::vector<double> semigroup_apply(const SparseGenerator& q, const std::vector<double>& f, double t,
                                    double tol = 1e-13);
// pi exp(tQ).
std::vector<double> semigroup_push(const SparseGenerator& q, const std::vector<double>& pi, double t,
                                   double tol = 1e-13);

struct ExactDualityRow {
  std::uint32_t xi0 = 0;
  std::uint32_t zeta0 = 0;
  double t = 0;
  double lhs = 0;
  double rhs = 0;
};

struct ExactDualityReport {
  double max_violation = 0;
  // violation maximised over all 2^V initial states for each zeta0 and t
  double max_violation_all_xi0 = 0;
  std::vector<ExactDualityRow> rows;
};

ExactDualityReport exact_duality_check(const ExactSystem& sys, const std::vector<double>& times,
                                       const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs);

}  // namespace ips
