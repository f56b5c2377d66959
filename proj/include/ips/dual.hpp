#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ips/alias.hpp"
#include "ips/cancellative.hpp"
#include "ips/lattice.hpp"
#include "ips/rng.hpp"
#include "ips/stats.hpp"

namespace ips {

constexpr std::uint64_t kDualEventBudget = 100'000'000;

/// A cancellative spec bound to a torus: translated targets of every set
/// are looked up in a table instead of recomputed.
class DualKernel {
 public:
  DualKernel(const CancellativeSpec& spec, LatticePtr lattice);

  double k0() const { return k0_; }
  const CancellativeSpec& spec() const { return spec_; }
  const TorusLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  bool parity_preserving() const { return parity_preserving_; }

  std::size_t sample_set(Rng& rng) const { return alias_.sample(rng); }
  std::size_t set_size(std::size_t k) const { return set_idx_[k].size(); }
  // Site x + A_k[j] on the torus.
  std::uint32_t target(std::uint32_t x, std::size_t k, std::size_t j) const {
    return table_[std::size_t(x) * n_off_ + set_idx_[k][j]];
  }

 private:
  CancellativeSpec spec_;
  LatticePtr lattice_;
  double k0_;
  bool parity_preserving_;
  AliasTable alias_;
  std::vector<std::vector<std::uint32_t>> set_idx_;
  std::size_t n_off_ = 0;
  std::vector<std::uint32_t> table_;
};

/// Finite set of sites with O(1) toggle and uniform sampling.
class DualState {
 public:
  explicit DualState(std::size_t n_sites) : pos_(n_sites, -1) {}
  DualState(std::size_t n_sites, const SiteSet& init);

  void toggle(std::uint32_t s) {
    const std::int32_t p = pos_[s];
    if (p < 0) {
      pos_[s] = std::int32_t(members_.size());
      members_.push_back(s);
    } else {
      const std::uint32_t last = members_.back();
      members_[std::size_t(p)] = last;
      pos_[last] = p;
      members_.pop_back();
      pos_[s] = -1;
    }
  }
  bool contains(std::uint32_t s) const { return pos_[s] >= 0; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::uint32_t sample(Rng& rng) const { return members_[rng.below(members_.size())]; }
  const std::vector<std::uint32_t>& members() const { return members_; }
  void clear();
  SiteSet to_siteset() const { return SiteSet(members_); }

 private:
  std::vector<std::int32_t> pos_;
  std::vector<std::uint32_t> members_;
};

// One transition of the chain: waiting time ~ Exp(k0 |state|), a uniform
// particle x is removed and x + A toggled. Throws EmptyState.
double dual_step(const DualKernel& kernel, DualState& state, Rng& rng);
std::pair<double, SiteSet> dual_step(const DualKernel& kernel, const SiteSet& state, Rng& rng);

struct DualTrajectory {
  SiteSet initial;
  std::vector<double> times;         // event times
  std::vector<std::uint32_t> sizes;  // size after each event
  std::vector<std::pair<double, SiteSet>> snapshots;
  std::uint64_t events = 0;
  std::uint64_t parity_violations = 0;
  SiteSet final_state;
};

DualTrajectory run_dual(const DualKernel& kernel, const SiteSet& init, double horizon, Rng& rng,
                        const std::vector<double>& snapshot_times = {}, bool record_path = true,
                        std::uint64_t budget = kDualEventBudget);

struct SurvivalRow {
  double t = 0;
  std::uint64_t n_alive = 0;
  std::uint64_t n_total = 0;
  Estimate p;
};

struct SurvivalResult {
  std::vector<SurvivalRow> rows;
  std::uint64_t parity_violations = 0;
  std::uint64_t max_size = 0;
  // p_hat non-increasing within 2 joint standard errors
  bool monotone = true;
  Estimate at_horizon() const { return rows.empty() ? Estimate{} : rows.back().p; }
};

SurvivalResult dual_survival(const DualKernel& kernel, const SiteSet& init, const std::vector<double>& times,
                             std::uint64_t reps, std::uint64_t seed);

struct GrowthResult {
  std::vector<SurvivalRow> rows;  // p = P(0 < |zeta_t| <= K)
  bool decreasing = true;         // within 2 joint standard errors
  std::size_t torus_sites = 0;
};

GrowthResult dual_growth_profile(const DualKernel& kernel, const SiteSet& B, std::size_t K,
                                 const std::vector<double>& times, std::uint64_t reps, std::uint64_t seed);

// Graphical construction: every site carries a rate-k0 clock; an event at x
// with set A sends the path count at x along arrows to x + A (a delta mark
// blocks x itself unless 0 is in A). zeta holds sites with odd path count,
// zeta_bar sites reached by any path.
struct GraphicalDual {
  SiteSet zeta;
  SiteSet zeta_bar;
  std::uint64_t events = 0;
};

GraphicalDual dual_graphical(const DualKernel& kernel, const SiteSet& B, double horizon, Rng& rng,
                             std::uint64_t budget = kDualEventBudget);

}  // namespace ips
