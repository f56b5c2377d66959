#include "ips/dual.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "ips/error.hpp"
#include "ips/parallel.hpp"

namespace ips {

DualKernel::DualKernel(const CancellativeSpec& spec, LatticePtr lattice)
    : spec_(spec), lattice_(std::move(lattice)), k0_(spec.k0), parity_preserving_(is_parity_preserving(spec)) {
  if (spec.q0.empty()) throw Error(Errc::InvalidModel, "dual kernel has no sets");
  if (spec.dim != lattice_->dim()) throw Error(Errc::InvalidModel, "dual kernel dimension differs from lattice");
  std::map<Offset, std::uint32_t> idx;
  std::vector<Offset> offs;
  std::vector<double> w;
  for (const auto& e : spec.q0) {
    std::vector<std::uint32_t> s;
    for (const auto& z : e.set) {
      for (int i = 0; i < spec.dim; ++i)
        if (2 * std::abs(z[i]) >= lattice_->sides()[i])
          throw Error(Errc::SupportTooLargeForTorus, "dual set offset " + z.str(spec.dim) + " does not fit");
      auto [it, fresh] = idx.emplace(z, std::uint32_t(offs.size()));
      if (fresh) offs.push_back(z);
      s.push_back(it->second);
    }
    set_idx_.push_back(std::move(s));
    w.push_back(e.weight);
  }
  alias_ = AliasTable(w);
  n_off_ = offs.size();
  table_ = lattice_->neighbor_table(offs);
}

DualState::DualState(std::size_t n_sites, const SiteSet& init) : pos_(n_sites, -1) {
  for (auto s : init) toggle(s);
}

void DualState::clear() {
  for (auto s : members_) pos_[s] = -1;
  members_.clear();
}

double dual_step(const DualKernel& kernel, DualState& state, Rng& rng) {
  if (state.empty()) throw Error(Errc::EmptyState, "dual step from the empty set");
  const double wait = rng.exponential(kernel.k0() * double(state.size()));
  const std::uint32_t x = state.sample(rng);
  const std::size_t k = kernel.sample_set(rng);
  state.toggle(x);
  for (std::size_t j = 0; j < kernel.set_size(k); ++j) state.toggle(kernel.target(x, k, j));
  return wait;
}

std::pair<double, SiteSet> dual_step(const DualKernel& kernel, const SiteSet& state, Rng& rng) {
  DualState s(kernel.lattice().size(), state);
  const double w = dual_step(kernel, s, rng);
  return {w, s.to_siteset()};
}

DualTrajectory run_dual(const DualKernel& kernel, const SiteSet& init, double horizon, Rng& rng,
                        const std::vector<double>& snapshot_times, bool record_path, std::uint64_t budget) {
  DualTrajectory tr;
  tr.initial = init;
  DualState s(kernel.lattice().size(), init);
  const std::size_t parity0 = init.size() & 1;
  std::vector<double> snaps = snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  double t = 0;
  while (!s.empty()) {
    const double wait = rng.exponential(kernel.k0() * double(s.size()));
    if (t + wait > horizon) break;
    while (next_snap < snaps.size() && snaps[next_snap] < t + wait) {
      tr.snapshots.emplace_back(snaps[next_snap], s.to_siteset());
      ++next_snap;
    }
    t += wait;
    const std::uint32_t x = s.sample(rng);
    const std::size_t k = kernel.sample_set(rng);
    s.toggle(x);
    for (std::size_t j = 0; j < kernel.set_size(k); ++j) s.toggle(kernel.target(x, k, j));
    ++tr.events;
    if (kernel.parity_preserving() && (s.size() & 1) != parity0) ++tr.parity_violations;
    if (record_path) {
      tr.times.push_back(t);
      tr.sizes.push_back(std::uint32_t(s.size()));
    }
    if (tr.events > budget) throw Error(Errc::BudgetExceeded, "dual trajectory exceeded the event budget");
  }
  while (next_snap < snaps.size() && snaps[next_snap] <= horizon) {
    tr.snapshots.emplace_back(snaps[next_snap], s.to_siteset());
    ++next_snap;
  }
  tr.final_state = s.to_siteset();
  return tr;
}

namespace {

// Runs replicates and records |zeta_t| at each grid time.
struct GridRun {
  std::vector<std::uint32_t> size_at;
  std::uint64_t parity_violations = 0;
  std::uint64_t max_size = 0;
};

GridRun grid_run(const DualKernel& kernel, const SiteSet& init, const std::vector<double>& times, Rng& rng,
                 DualState& s) {
  GridRun g;
  g.size_at.assign(times.size(), 0);
  s.clear();
  for (auto x : init) s.toggle(x);
  const std::size_t parity0 = init.size() & 1;
  g.max_size = s.size();
  double t = 0;
  std::size_t gi = 0;
  std::uint64_t events = 0;
  const double horizon = times.empty() ? 0 : times.back();
  while (gi < times.size()) {
    if (s.empty()) break;
    const double wait = rng.exponential(kernel.k0() * double(s.size()));
    while (gi < times.size() && times[gi] < t + wait) g.size_at[gi++] = std::uint32_t(s.size());
    if (t + wait > horizon) break;
    t += wait;
    const std::uint32_t x = s.sample(rng);
    const std::size_t k = kernel.sample_set(rng);
    s.toggle(x);
    for (std::size_t j = 0; j < kernel.set_size(k); ++j) s.toggle(kernel.target(x, k, j));
    if (kernel.parity_preserving() && (s.size() & 1) != parity0) ++g.parity_violations;
    g.max_size = std::max<std::uint64_t>(g.max_size, s.size());
    if (++events > kDualEventBudget) throw Error(Errc::BudgetExceeded, "dual trajectory exceeded the event budget");
  }
  return g;
}

std::vector<GridRun> run_grid(const DualKernel& kernel, const SiteSet& init, const std::vector<double>& times,
                              std::uint64_t reps, std::uint64_t seed) {
  std::vector<GridRun> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    DualState s(kernel.lattice().size());
    Rng rng = Rng::derive(seed, Tag::Dual, r);
    out[r] = grid_run(kernel, init, times, rng, s);
  });
  return out;
}

bool non_increasing(const std::vector<SurvivalRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].p.mean > rows[i - 1].p.mean + 2 * joint_se(rows[i].p, rows[i - 1].p)) return false;
  return true;
}

}  // namespace

SurvivalResult dual_survival(const DualKernel& kernel, const SiteSet& init, const std::vector<double>& times,
                             std::uint64_t reps, std::uint64_t seed) {
  std::vector<double> grid = times;
  std::sort(grid.begin(), grid.end());
  SurvivalResult res;
  if (init.empty()) {
    for (double t : grid) res.rows.push_back({t, 0, reps, {0, 0}});
    return res;
  }
  const auto runs = run_grid(kernel, init, grid, reps, seed);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::uint64_t alive = 0;
    for (const auto& g : runs) alive += g.size_at[i] > 0;
    res.rows.push_back({grid[i], alive, reps, binomial_estimate(alive, reps)});
  }
  for (const auto& g : runs) {
    res.parity_violations += g.parity_violations;
    res.max_size = std::max(res.max_size, g.max_size);
  }
  res.monotone = non_increasing(res.rows);
  return res;
}

GrowthResult dual_growth_profile(const DualKernel& kernel, const SiteSet& B, std::size_t K,
                                 const std::vector<double>& times, std::uint64_t reps, std::uint64_t seed) {
  if (B.empty()) throw Error(Errc::EmptyState, "growth profile needs a nonempty initial set");
  if (K < 1) throw Error(Errc::InvalidModel, "growth profile needs K >= 1");
  std::vector<double> grid = times;
  std::sort(grid.begin(), grid.end());
  GrowthResult res;
  res.torus_sites = kernel.lattice().size();
  const auto runs = run_grid(kernel, B, grid, reps, seed);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::uint64_t hits = 0;
    for (const auto& g : runs) hits += g.size_at[i] > 0 && g.size_at[i] <= K;
    res.rows.push_back({grid[i], hits, reps, binomial_estimate(hits, reps)});
  }
  res.decreasing = non_increasing(res.rows);
  return res;
}

GraphicalDual dual_graphical(const DualKernel& kernel, const SiteSet& B, double horizon, Rng& rng,
                             std::uint64_t budget) {
  const std::size_t n = kernel.lattice().size();
  std::vector<std::uint8_t> odd(n, 0), reached(n, 0);
  for (auto b : B) odd[b] = reached[b] = 1;
  GraphicalDual out;
  const double total = kernel.k0() * double(n);
  double t = rng.exponential(total);
  while (t <= horizon) {
    const std::uint32_t x = std::uint32_t(rng.below(n));
    const std::size_t k = kernel.sample_set(rng);
    const std::uint8_t c = odd[x], r = reached[x];
    odd[x] = 0;
    reached[x] = 0;
    for (std::size_t j = 0; j < kernel.set_size(k); ++j) {
      const std::uint32_t y = kernel.target(x, k, j);
      odd[y] ^= c;
      reached[y] |= r;
    }
    if (++out.events > budget) throw Error(Errc::BudgetExceeded, "graphical dual exceeded the event budget");
    t += rng.exponential(total);
  }
  std::vector<std::uint32_t> z, zb;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (odd[s]) z.push_back(s);
    if (reached[s]) zb.push_back(s);
  }
  out.zeta = SiteSet(std::move(z));
  out.zeta_bar = SiteSet(std::move(zb));
  return out;
}

}  // namespace ips
