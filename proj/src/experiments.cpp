#include "ips/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "ips/cancellative.hpp"
#include "ips/dual.hpp"
#include "ips/error.hpp"
#include "ips/forward.hpp"
#include "ips/parallel.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

using InitFn = std::function<Configuration(Rng&)>;

bool odd_on(const Configuration& cfg, const SiteSet& A) {
  int c = 0;
  for (auto s : A) c ^= int(cfg.get(s));
  return c;
}

bool odd_overlap(const Configuration& cfg, const SiteSet& z) { return odd_on(cfg, z); }

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// P(|xi_t cap A| odd) for every (time, A), one forward run per replicate.
std::vector<std::vector<Estimate>> forward_odd(const GillespieEngine& engine, const InitFn& init,
                                               const std::vector<SiteSet>& As, const std::vector<double>& times,
                                               std::uint64_t reps, std::uint64_t seed, std::uint64_t stream) {
  const std::size_t nt = times.size(), na = As.size();
  std::vector<std::uint8_t> bits(reps * nt * na, 0);
  const double T = times.empty() ? 0 : times.back();
  parallel_for(reps, [&](std::size_t r) {
    auto irng = Rng::derive(seed, Tag::Init, r, stream);
    auto rng = Rng::derive(seed, Tag::Experiment, r, stream);
    Configuration cfg = init(irng);
    std::uint8_t* out = &bits[r * nt * na];
    engine.evolve(cfg, T, rng, times, [&](std::size_t i, double, const Configuration& c) {
      for (std::size_t a = 0; a < na; ++a) out[i * na + a] = odd_on(c, As[a]);
    });
  });
  std::vector<std::vector<Estimate>> est(nt, std::vector<Estimate>(na));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t a = 0; a < na; ++a) {
      std::uint64_t hits = 0;
      for (std::uint64_t r = 0; r < reps; ++r) hits += bits[(r * nt + i) * na + a];
      est[i][a] = binomial_estimate(hits, reps);
    }
  return est;
}

Configuration product_half(LatticePtr lattice, Rng& rng) {
  Configuration c(std::move(lattice));
  for (std::size_t i = 0; i < c.size(); ++i) c.set(i, rng.uniform() < 0.5);
  return c;
}

// Variance of a beta1 + nu beta_inf from the multinomial hitting law plus the
// error in nu.
Estimate mixture(const HittingRow& h, double a, const Estimate& nu, std::uint64_t reps) {
  const double b1 = h.beta1.mean, bi = h.beta_inf.mean;
  const double mean = a * b1 + nu.mean * bi;
  const double second = a * a * b1 + nu.mean * nu.mean * bi;
  const double var = std::max(0.0, second - mean * mean) / double(std::max<std::uint64_t>(reps, 1)) +
                     bi * bi * nu.se * nu.se;
  return {mean, std::sqrt(var)};
}

}  // namespace

McDualityResult mc_duality_check(const ModelSpec& m, const Configuration& xi0, const SiteSet& zeta0, double t,
                                 std::uint64_t reps, std::uint64_t seed, double split_v) {
  if (t < 0) throw Error(Errc::ConfigError, "duality time must be nonnegative");
  const auto lattice = xi0.lattice_ptr();
  GillespieEngine engine(m, lattice);
  DualKernel kernel(extract_cancellative(m), lattice);
  McDualityResult res;
  res.t = t;

  const auto lhs = forward_odd(engine, [&](Rng&) { return xi0; }, {zeta0}, {t}, reps, seed, 0);
  res.lhs = lhs[0][0];

  std::vector<std::uint8_t> rhs(reps, 0);
  std::vector<std::uint64_t> viol(reps, 0);
  parallel_for(reps, [&](std::size_t r) {
    auto rng = Rng::derive(seed, Tag::Dual, r, 1);
    const auto tr = run_dual(kernel, zeta0, t, rng, {}, false);
    rhs[r] = odd_overlap(xi0, tr.final_state);
    viol[r] = tr.parity_violations;
  });
  res.rhs = binomial_estimate(std::accumulate(rhs.begin(), rhs.end(), std::uint64_t(0)), reps);
  res.parity_violations = std::accumulate(viol.begin(), viol.end(), std::uint64_t(0));
  res.z = z_score(res.lhs, res.rhs);
  res.pass = std::fabs(res.z) <= 3;

  if (split_v > 0 && split_v < t) {
    res.has_split = true;
    res.v = split_v;
    res.u = t - split_v;
    std::vector<std::uint8_t> sp(reps, 0);
    parallel_for(reps, [&](std::size_t r) {
      auto frng = Rng::derive(seed, Tag::Experiment, r, 2);
      auto drng = Rng::derive(seed, Tag::Dual, r, 2);
      Configuration xi = xi0;
      engine.evolve(xi, res.v, frng);
      const auto tr = run_dual(kernel, zeta0, res.u, drng, {}, false);
      sp[r] = odd_overlap(xi, tr.final_state);
    });
    res.split = binomial_estimate(std::accumulate(sp.begin(), sp.end(), std::uint64_t(0)), reps);
    res.z_split_lhs = z_score(res.split, res.lhs);
    res.z_split_rhs = z_score(res.split, res.rhs);
    res.pass = res.pass && std::fabs(res.z_split_lhs) <= 3 && std::fabs(res.z_split_rhs) <= 3;
  }
  return res;
}

NuHalfResult nu_half_probe(const ModelSpec& m, LatticePtr lattice, const SiteSet& A, const std::vector<double>& times,
                           std::uint64_t reps, std::uint64_t seed) {
  const auto grid = sorted(times);
  NuHalfResult res;
  if (A.empty()) {
    for (double t : grid) res.rows.push_back({t, {0, 0}, {0, 0}, 0});
    return res;
  }
  GillespieEngine engine(m, lattice);
  DualKernel kernel(extract_cancellative(m), lattice);
  const auto odd = forward_odd(engine, [&](Rng& r) { return product_half(lattice, r); }, {A}, grid, reps, seed, 3);
  const auto surv = dual_survival(kernel, A, grid, reps, seed);
  res.parity_violations = surv.parity_violations;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    NuHalfRow row;
    row.t = grid[i];
    row.odd = odd[i][0];
    row.half_surv = {surv.rows[i].p.mean / 2, surv.rows[i].p.se / 2};
    row.z = z_score(row.odd, row.half_surv);
    res.columns_agree = res.columns_agree && std::fabs(row.z) <= 3;
    if (i > 0) {
      const auto& prev = res.rows.back().odd;
      if (row.odd.mean > prev.mean + 2 * joint_se(row.odd, prev)) res.monotone = false;
    }
    res.rows.push_back(row);
  }
  return res;
}

std::vector<std::uint32_t> separated_sites(const TorusLattice& L, std::size_t K, const Offset& x0) {
  const int d = L.dim();
  std::vector<std::uint32_t> out;
  if (K == 0) return out;
  std::size_t per = 1;
  while (std::pow(double(per), d) < double(K)) ++per;
  std::vector<int> spacing(d);
  for (int i = 0; i < d; ++i) spacing[i] = L.sides()[i] / int(per);
  Offset c;
  std::vector<std::uint8_t> used(L.size(), 0);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t rem = k;
    for (int i = d - 1; i >= 0; --i) {
      c[i] = int(rem % per) * spacing[i];
      rem /= per;
    }
    const auto y = std::uint32_t(L.index(c));
    const auto z = std::uint32_t(L.index(c + x0));
    if (used[y] || used[z] || y == z)
      throw Error(Errc::ConfigError, "torus too small for " + std::to_string(K) + " separated pairs");
    used[y] = used[z] = 1;
    out.push_back(y);
  }
  return out;
}

OddgoalResult oddgoal_probe(const ModelSpec& m, LatticePtr lattice, const Offset& x0, const std::vector<std::size_t>& Ks,
                            std::uint64_t reps, std::uint64_t seed, double t, bool ones_background) {
  if (m.has_kernel() && m.kernel().weight(x0) <= 0)
    throw Error(Errc::ConfigError, "oddgoal needs p(x0) > 0 for x0 = " + x0.str(m.dim()));
  GillespieEngine engine(m, lattice);
  OddgoalResult res;
  for (std::size_t j = 0; j < Ks.size(); ++j) {
    const std::size_t K = Ks[j];
    Configuration xi0(lattice, K > 0 && ones_background);
    SiteSet A;
    if (K == 0) {
      A = SiteSet({0});
    } else {
      const auto ys = separated_sites(*lattice, K, x0);
      for (auto y : ys) {
        xi0.set(y, true);
        xi0.set(lattice->translate(y, x0), false);
      }
      A = SiteSet(ys);
    }
    OddgoalRow row;
    row.K = K;
    row.pairs = pair_set(xi0, A, x0).size();
    row.p_odd = forward_odd(engine, [&](Rng&) { return xi0; }, {A}, {t}, reps, seed, 100 + j)[0][0];
    row.dev = {std::fabs(row.p_odd.mean - 0.5), row.p_odd.se};
    if (!res.rows.empty()) {
      const auto& prev = res.rows.back().dev;
      if (row.dev.mean > prev.mean + joint_se(row.dev, prev)) res.decreasing = false;
    }
    res.rows.push_back(row);
  }
  res.last_dev = res.rows.empty() ? 0.5 : res.rows.back().dev.mean;
  res.pass = res.decreasing && res.last_dev <= 0.05;
  return res;
}

Flip2Result flip2_probe(const ModelSpec& m, LatticePtr lattice, const Offset& x0, std::vector<std::size_t> sizes,
                        const std::vector<double>& times, std::uint64_t reps, std::uint64_t seed,
                        const std::string& init) {
  const auto grid = sorted(times);
  std::sort(sizes.begin(), sizes.end());
  const std::size_t n = lattice->size();
  for (auto s : sizes)
    if (s > n) throw Error(Errc::ConfigError, "target larger than the torus");
  // nested targets from a seeded shuffle of the sites
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  auto srng = Rng::derive(seed, Tag::Experiment, 0, 7, 1);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[srng.below(i)]);
  std::vector<std::uint32_t> shift(n);
  for (std::size_t s = 0; s < n; ++s) shift[s] = std::uint32_t(lattice->translate(s, x0));

  GillespieEngine engine(m, lattice);
  const std::size_t nt = grid.size();
  // per (rep, time): -1 if xi_t is empty, else position in `order` of the first pair site
  std::vector<std::int64_t> first(reps * nt, -1);
  const double T = grid.empty() ? 0 : grid.back();
  parallel_for(reps, [&](std::size_t r) {
    auto irng = Rng::derive(seed, Tag::Init, r, 8);
    auto rng = Rng::derive(seed, Tag::Experiment, r, 8);
    Configuration cfg = make_initial(init, lattice, irng);
    engine.evolve(cfg, T, rng, grid, [&](std::size_t i, double, const Configuration& c) {
      if (c.all_zero()) return;
      std::int64_t f = std::int64_t(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto y = order[k];
        if (c.get(y) && !c.get(shift[y])) {
          f = std::int64_t(k);
          break;
        }
      }
      first[r * nt + i] = f;
    });
  });
  Flip2Result res;
  for (std::size_t i = 0; i < nt; ++i)
    for (auto s : sizes) {
      std::uint64_t hits = 0;
      for (std::uint64_t r = 0; r < reps; ++r) hits += first[r * nt + i] >= std::int64_t(s);
      res.rows.push_back({grid[i], s, binomial_estimate(hits, reps)});
    }
  if (!sizes.empty() && nt > 0) {
    const auto& lo = res.rows[(nt - 1) * sizes.size()];
    const auto& hi = res.rows.back();
    res.decreasing = hi.p.mean < lo.p.mean;
  }
  return res;
}

CctResult complete_convergence_probe(const ModelSpec& m, LatticePtr lattice, const std::vector<std::string>& inits,
                                     const std::vector<SiteSet>& As, double T, std::uint64_t reps,
                                     std::uint64_t seed) {
  if (T <= 0) throw Error(Errc::ConfigError, "probe horizon must be positive");
  GillespieEngine engine(m, lattice);
  const std::vector<double> grid{T, 2 * T};
  const auto nu = forward_odd(engine, [&](Rng& r) { return product_half(lattice, r); }, As, grid, reps, seed, 20);
  CctResult res;
  for (std::size_t j = 0; j < inits.size(); ++j) {
    auto irng = Rng::derive(seed, Tag::Init, 0, 21, j);
    const Configuration cfg0 = make_initial(inits[j], lattice, irng);
    const auto hit = hitting_probabilities(m, cfg0, T, reps, Rng::derive(seed, Tag::Experiment, j, 22).next_u64());
    res.horizon_sensitive = res.horizon_sensitive || hit.horizon_sensitive;
    const auto direct = forward_odd(engine, [&](Rng&) { return cfg0; }, As, grid, reps, seed, 30 + j);
    for (std::size_t a = 0; a < As.size(); ++a) {
      CctRow row;
      row.init = inits[j];
      row.a_size = As[a].size();
      row.T = T;
      row.beta0 = hit.at_h.beta0;
      row.beta1 = hit.at_h.beta1;
      row.beta_inf = hit.at_h.beta_inf;
      row.nu_odd = nu[0][a];
      row.nu_odd_2T = nu[1][a];
      const double ind = double(As[a].size() & 1);
      row.direct = direct[0][a];
      row.direct_2T = direct[1][a];
      row.predicted = mixture(hit.at_h, ind, row.nu_odd, reps);
      row.predicted_2T = mixture(hit.at_2h, ind, row.nu_odd_2T, reps);
      row.z = z_score(row.direct, row.predicted);
      row.z_2T = z_score(row.direct_2T, row.predicted_2T);
      row.pass = std::fabs(row.z) <= 3;
      res.pass = res.pass && row.pass;
      res.rows.push_back(row);
    }
  }
  return res;
}

}  // namespace ips

namespace ips {

EngineComparison engine_equivalence(const ModelSpec& m, LatticePtr lattice, const std::string& init, double t,
                                    std::uint64_t reps, std::uint64_t seed) {
  const GillespieEngine engine(m, lattice);
  const auto view = perturbation_view(m);
  std::vector<double> g(reps), h(reps);
  parallel_for(reps, [&](std::size_t r) {
    auto irng = Rng::derive(seed, Tag::Init, r, 40);
    auto c = make_initial(init, lattice, irng);
    auto rng = Rng::derive(seed, Tag::Forward, r, 40);
    engine.evolve(c, t, rng);
    g[r] = double(c.count()) / double(c.size());
    auto jrng = Rng::derive(seed, Tag::Init, r, 41);
    const auto c0 = make_initial(init, lattice, jrng);
    const auto c1 = evolve_graphical(view, c0, t, hash_words({seed, std::uint64_t(Tag::Graphical), r, 41}));
    h[r] = double(c1.count()) / double(c1.size());
  });
  Welford wg, wh;
  for (std::uint64_t r = 0; r < reps; ++r) {
    wg.add(g[r]);
    wh.add(h[r]);
  }
  EngineComparison out;
  out.gillespie = wg.estimate();
  out.graphical = wh.estimate();
  out.z = z_score(out.gillespie, out.graphical);
  return out;
}

PathwiseResult vmdual_pathwise_check(const ModelSpec& m, LatticePtr lattice, const std::string& init, double t,
                                     std::uint64_t paths, std::uint64_t seed) {
  const auto view = perturbation_view(m);
  std::vector<std::uint32_t> all(lattice->size());
  std::iota(all.begin(), all.end(), 0u);
  std::vector<std::array<std::uint64_t, 3>> per(paths);
  parallel_for(paths, [&](std::size_t r) {
    const EventLog log(view, lattice, hash_words({seed, std::uint64_t(Tag::Graphical), r, 42}));
    auto irng = Rng::derive(seed, Tag::Init, r, 42);
    const auto c0 = make_initial(init, lattice, irng);
    auto c = c0;
    evolve_graphical(log, c, t);
    const auto w = walk_dual(log, all, t);
    std::uint64_t clean = 0, bad = 0, mismatch = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!w.star_clean[i]) continue;
      ++clean;
      bad += c.get(all[i]) != c0.get(w.terminal[i]);
    }
    // cluster labels and terminal sites carry the same partition
    std::unordered_map<std::uint32_t, std::uint32_t> label_of, site_of;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto a = label_of.emplace(w.terminal[i], w.cluster[i]);
      const auto b = site_of.emplace(w.cluster[i], w.terminal[i]);
      mismatch += a.first->second != w.cluster[i] || b.first->second != w.terminal[i];
    }
    per[r] = {clean, bad, mismatch};
  });
  PathwiseResult out;
  out.paths = paths;
  for (const auto& p : per) {
    out.sites_checked += p[0];
    out.violations += p[1];
    out.cluster_mismatches += p[2];
  }
  return out;
}

}  // namespace ips
