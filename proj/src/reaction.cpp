#include "ips/reaction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "ips/error.hpp"
#include "ips/parallel.hpp"

namespace ips {

CoalescingWalks::CoalescingWalks(const Kernel& k, LatticePtr torus) : kernel_(k), torus_(std::move(torus)) {
  if (k.dim() != torus_->dim()) throw Error(Errc::InvalidModel, "kernel and torus dimensions differ");
  k.check_fits(*torus_);
  std::vector<Offset> offs;
  std::vector<double> w;
  for (const auto& e : k.entries()) {
    offs.push_back(e.offset);
    w.push_back(e.weight);
  }
  alias_ = AliasTable(w);
  nbr_ = torus_->neighbor_table(offs);
}

CoalescingWalks::Result CoalescingWalks::run(const std::vector<Offset>& starts, const std::vector<double>& times,
                                             Rng& rng) const {
  const std::size_t n = starts.size();
  if (n == 0 || n > 255) throw Error(Errc::InvalidModel, "coalescing walks need 1..255 starts");
  const std::size_t kk = kernel_.entries().size();
  std::vector<std::uint32_t> pos(n);
  std::vector<Offset> unw(starts);
  std::vector<std::uint32_t> parent(n);
  std::vector<std::uint32_t> active;
  Result res;
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = std::uint32_t(torus_->index(starts[i]));
    parent[i] = std::uint32_t(i);
    bool merged = false;
    for (auto b : active)
      if (pos[b] == pos[i]) {
        if (unw[b] != unw[i]) ++res.wrap_meetings;
        parent[i] = b;
        merged = true;
        break;
      }
    if (!merged) active.push_back(std::uint32_t(i));
  }
  auto root = [&](std::uint32_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  auto record = [&] {
    std::vector<std::uint8_t> lab(n);
    std::vector<std::uint32_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t r = root(std::uint32_t(i));
      auto it = std::find(seen.begin(), seen.end(), r);
      lab[i] = std::uint8_t(it - seen.begin());
      if (it == seen.end()) seen.push_back(r);
    }
    if (!res.clusters.empty() && seen.size() > res.clusters.back()) ++res.monotone_violations;
    res.labels.push_back(std::move(lab));
    res.clusters.push_back(std::uint32_t(seen.size()));
  };
  double t = 0;
  std::size_t ti = 0;
  while (ti < times.size()) {
    if (active.size() == 1) {
      while (ti < times.size()) {
        record();
        ++ti;
      }
      break;
    }
    const double dt = rng.exponential(double(active.size()));
    while (ti < times.size() && times[ti] < t + dt) {
      record();
      ++ti;
    }
    if (ti == times.size()) break;
    t += dt;
    const std::size_t ai = std::size_t(rng.below(active.size()));
    const std::uint32_t a = active[ai];
    const std::size_t j = alias_.sample(rng);
    pos[a] = nbr_[std::size_t(pos[a]) * kk + j];
    unw[a] = unw[a] + kernel_.entries()[j].offset;
    for (std::size_t bi = 0; bi < active.size(); ++bi) {
      const std::uint32_t b = active[bi];
      if (b == a || pos[b] != pos[a]) continue;
      if (unw[b] != unw[a]) ++res.wrap_meetings;
      parent[a] = b;
      active[ai] = active.back();
      active.pop_back();
      res.merge_times.push_back(t);
      break;
    }
  }
  return res;
}

LatticePtr default_walk_torus(int dim) {
  switch (dim) {
    case 1: return make_torus({1 << 16});
    case 2: return make_torus({1024, 1024});
    case 3: return make_torus({64, 64, 64});
    default: return make_torus(std::vector<int>(std::size_t(dim), 24));
  }
}

CoalescenceStats coalescence_distribution(const Kernel& k, const std::vector<Offset>& F, double t_max,
                                          std::uint64_t reps, std::uint64_t seed, LatticePtr torus) {
  if (F.empty()) throw Error(Errc::EmptyState, "coalescence needs a nonempty start set");
  if (!(t_max > 0)) throw Error(Errc::ConfigError, "t_max must be positive");
  if (!torus) torus = default_walk_torus(k.dim());
  CoalescingWalks walks(k, torus);
  struct Out {
    std::uint32_t half = 0, full = 0, wraps = 0, mono = 0;
    bool late = false;
  };
  std::vector<Out> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = Rng::derive(seed, Tag::Reaction, r, 1);
    const auto res = walks.run(F, {t_max / 2, t_max}, rng);
    out[r] = {res.clusters[0], res.clusters[1], res.wrap_meetings, res.monotone_violations, false};
    for (double m : res.merge_times) out[r].late |= m > 0.9 * t_max;
  });
  CoalescenceStats st;
  st.F = F;
  st.t_max = t_max;
  st.reps = reps;
  std::vector<std::uint64_t> ch(F.size() + 1, 0), cf(F.size() + 1, 0);
  std::uint64_t late = 0;
  for (const auto& o : out) {
    ++ch[o.half];
    ++cf[o.full];
    st.wrap_meetings += o.wraps;
    st.monotone_violations += o.mono;
    late += o.late;
  }
  for (std::size_t i = 0; i <= F.size(); ++i) {
    st.dist.push_back(binomial_estimate(cf[i], reps));
    st.dist_half.push_back(binomial_estimate(ch[i], reps));
    const double se = joint_se(st.dist[i], st.dist_half[i]);
    if (std::fabs(st.dist[i].mean - st.dist_half[i].mean) > 2 * se && se > 0) st.horizon_stable = false;
  }
  st.late_rate = double(late) / double(reps);
  return st;
}

WindowSample sample_voter_equilibrium_window(const Kernel& k, const std::vector<Offset>& W, double u, double t_max,
                                             Rng& rng, LatticePtr torus) {
  if (!torus) torus = default_walk_torus(k.dim());
  return sample_voter_equilibrium_window(CoalescingWalks(k, torus), W, u, t_max, rng);
}

WindowSample sample_voter_equilibrium_window(const CoalescingWalks& walks, const std::vector<Offset>& W, double u,
                                             double t_max, Rng& rng) {
  if (u < 0 || u > 1) throw Error(Errc::ConfigError, "u must lie in [0, 1]");
  const auto res = walks.run(W, {t_max}, rng);
  WindowSample s;
  s.cluster = res.labels[0];
  s.equilibrium = walks.kernel().dim() >= 3;
  s.wrap_meetings = res.wrap_meetings;
  std::vector<std::uint8_t> coin(res.clusters[0]);
  for (auto& c : coin) c = rng.uniform() < u;
  for (auto c : s.cluster) s.bits.push_back(coin[c]);
  return s;
}

namespace {

// Integrand (1 - xi(0)) h_1 - xi(0) h_0 on window masks, limit maps.
struct Integrand {
  const PerturbationView& v;
  std::vector<double> table;

  explicit Integrand(const PerturbationView& view) : v(view) {
    const std::size_t w = v.model.window_size();
    if (w <= 20) {
      table.resize(std::size_t(1) << w);
      for (std::uint64_t m = 0; m < table.size(); ++m) table[m] = direct(m);
    }
  }
  double direct(std::uint64_t m) const { return (m & 1u) ? -v.h(0, m, true) : v.h(1, m, true); }
  double operator()(std::uint64_t m) const { return table.empty() ? direct(m) : table[m]; }
};

std::uint64_t mask_from(const std::vector<std::uint8_t>& lab, std::uint64_t cluster_bits) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < lab.size(); ++i) m |= ((cluster_bits >> lab[i]) & 1u) << i;
  return m;
}

// sum over y != z of p(y) p(z) 1{0, y, z in three distinct clusters}
double triple_sum(const PerturbationView& v, const std::vector<std::uint8_t>& lab) {
  double s = 0;
  const auto l0 = lab[0];
  for (std::size_t a = 0; a < v.kernel_idx.size(); ++a) {
    const auto la = lab[v.kernel_idx[a]];
    if (la == l0) continue;
    for (std::size_t b = 0; b < v.kernel_idx.size(); ++b) {
      if (a == b) continue;
      const auto lb = lab[v.kernel_idx[b]];
      if (lb != l0 && lb != la) s += v.kernel_w[a] * v.kernel_w[b];
    }
  }
  return s;
}

// Factor kappa in f = eps^2 kappa phi(u) sum p p P(3 clusters).
bool closed_factor(const PerturbationView& v, double& kappa) {
  switch (v.model.kind()) {
    case ModelKind::LV: kappa = 1; return true;
    case ModelKind::GV: kappa = double(v.model.neighborhood().size()) / 2; return true;
    default: return false;
  }
}

void check_view(const PerturbationView& v) {
  if (v.model.window_size() > 64) throw Error(Errc::WindowTooLarge, "window too large for reaction sampling");
}

}  // namespace

ReactionCurve estimate_f(const PerturbationView& view, const std::vector<double>& u_grid, std::uint64_t reps,
                         double t_max, std::uint64_t seed, LatticePtr torus, int coins) {
  check_view(view);
  if (!torus) torus = default_walk_torus(view.model.dim());
  const auto& W = view.model.window();
  const std::size_t G = u_grid.size();
  const double e2 = view.eps * view.eps;
  Integrand F(view);
  CoalescingWalks walks(view.kernel, torus);
  double kappa = 0;
  const bool closed = closed_factor(view, kappa);
  double phi2 = 0;
  for (double u : u_grid) phi2 += cubic_phi(u) * cubic_phi(u);

  std::vector<double> y(reps * G), yp(reps * G, 0.0), yc(reps * G, 0.0), coef(reps), tri(reps);
  std::vector<std::uint32_t> wraps(reps);
  std::vector<std::uint8_t> late(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = Rng::derive(seed, Tag::Reaction, r, 2);
    const auto res = walks.run(W, {t_max}, rng);
    const auto& lab = res.labels[0];
    const std::uint32_t K = res.clusters[0];
    wraps[r] = res.wrap_meetings;
    late[r] = 0;
    for (double m : res.merge_times) late[r] |= m > 0.9 * t_max;
    double* yr = &y[r * G];
    std::fill(yr, yr + G, 0.0);
    std::vector<double> U(K);
    for (int c = 0; c < coins; ++c) {
      for (auto& x : U) x = rng.uniform();
      for (std::size_t g = 0; g < G; ++g) {
        std::uint64_t bits = 0;
        for (std::uint32_t k = 0; k < K; ++k) bits |= std::uint64_t(U[k] < u_grid[g]) << k;
        yr[g] += F(mask_from(lab, bits));
      }
    }
    double a = 0;
    for (std::size_t g = 0; g < G; ++g) {
      yr[g] *= e2 / coins;
      a += yr[g] * cubic_phi(u_grid[g]);
    }
    coef[r] = phi2 > 0 ? a / phi2 : 0.0;
    if (K <= 12) {
      std::vector<double> fv(std::size_t(1) << K);
      for (std::uint64_t b = 0; b < fv.size(); ++b) fv[b] = F(mask_from(lab, b));
      for (std::size_t g = 0; g < G; ++g) {
        const double u = u_grid[g];
        double s = 0;
        for (std::uint64_t b = 0; b < fv.size(); ++b) {
          const int ones = std::popcount(b);
          s += std::pow(u, ones) * std::pow(1 - u, int(K) - ones) * fv[b];
        }
        yp[r * G + g] = e2 * s;
      }
    }
    tri[r] = closed ? triple_sum(view, lab) : 0.0;
    for (std::size_t g = 0; g < G; ++g) yc[r * G + g] = closed ? e2 * kappa * tri[r] * cubic_phi(u_grid[g]) : 0.0;
  });

  ReactionCurve c;
  c.closed_available = closed;
  c.equilibrium = view.model.dim() >= 3;
  for (std::size_t g = 0; g < G; ++g) {
    Welford a, b, d;
    for (std::size_t r = 0; r < reps; ++r) {
      a.add(y[r * G + g]);
      b.add(yp[r * G + g]);
      d.add(yc[r * G + g]);
    }
    c.rows.push_back({u_grid[g], a.estimate(), b.estimate(), d.estimate()});
  }
  Welford wc, wt;
  for (std::size_t r = 0; r < reps; ++r) {
    wc.add(coef[r]);
    wt.add(tri[r] / 2);
    c.wrap_meetings += wraps[r];
    c.late_rate += late[r];
  }
  c.late_rate /= double(reps);
  c.cubic_coef = wc.estimate();
  if (view.model.kind() == ModelKind::LV && view.model.alpha() < 1) {
    const double s = 2 * (1 - view.model.alpha());
    c.p3_fit = {c.cubic_coef.mean / s, c.cubic_coef.se / s};
    c.p3_triple = wt.estimate();
  }
  for (std::size_t g = 0; g < G; ++g) {
    std::size_t h = G;
    for (std::size_t k = 0; k < G; ++k)
      if (std::fabs(u_grid[k] - (1 - u_grid[g])) < 1e-9) h = k;
    if (h == G) {
      c.antisym_z.push_back(std::nan(""));
      continue;
    }
    Welford s;
    for (std::size_t r = 0; r < reps; ++r) s.add(h == g ? y[r * G + g] : y[r * G + g] + y[r * G + h]);
    const auto e = s.estimate();
    c.antisym_z.push_back(e.se > 0 ? e.mean / e.se : (e.mean == 0 ? 0.0 : std::copysign(INFINITY, e.mean)));
  }
  return c;
}

FPrime fprime_zero(const PerturbationView& view, std::uint64_t reps, double t_max, std::uint64_t seed,
                   LatticePtr torus) {
  check_view(view);
  if (!torus) torus = default_walk_torus(view.model.dim());
  const auto& W = view.model.window();
  const double e2 = view.eps * view.eps;
  Integrand F(view);
  CoalescingWalks walks(view.kernel, torus);
  double kappa = 0;
  const bool tri_closed = closed_factor(view, kappa);
  const bool av = view.model.kind() == ModelKind::AV;
  std::vector<std::uint32_t> nidx;
  if (av)
    for (const auto& z : view.model.neighborhood().points())
      nidx.push_back(std::uint32_t(std::find(W.begin(), W.end(), z) - W.begin()));

  std::vector<double> est(reps), cl(reps);
  std::vector<std::uint32_t> A(reps, 0);
  const double f0 = F(0);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = Rng::derive(seed, Tag::Reaction, r, 3);
    const auto res = walks.run(W, {t_max}, rng);
    const auto& lab = res.labels[0];
    const std::uint32_t K = res.clusters[0];
    // d/du at 0 of E_u[F | partition] is the sum over clusters of F(1_c) - F(0);
    // one uniformly chosen cluster, weighted by K, estimates it without bias
    const std::uint32_t c = std::uint32_t(rng.below(K));
    est[r] = e2 * double(K) * (F(mask_from(lab, std::uint64_t(1) << c)) - f0);
    if (av) {
      std::vector<std::uint8_t> seen{lab[0]};
      for (auto i : nidx)
        if (std::find(seen.begin(), seen.end(), lab[i]) == seen.end()) seen.push_back(lab[i]);
      A[r] = std::uint32_t(seen.size());
      cl[r] = e2 * (double(A[r]) - 1 - (A[r] > 1 ? 1 : 0));
    } else if (tri_closed) {
      cl[r] = e2 * kappa * triple_sum(view, lab);
    }
  });
  FPrime out;
  out.closed_available = av || tri_closed;
  Welford a, b;
  for (std::size_t r = 0; r < reps; ++r) {
    a.add(est[r]);
    b.add(cl[r]);
  }
  out.estimate = a.estimate();
  if (out.closed_available) out.closed = b.estimate();
  if (av) {
    std::vector<std::uint64_t> cnt(nidx.size() + 2, 0);
    for (auto x : A) ++cnt[x];
    for (auto x : cnt) out.a_dist.push_back(binomial_estimate(x, reps));
  }
  return out;
}

}  // namespace ips
