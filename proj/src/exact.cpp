#include "ips/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ips/error.hpp"

namespace ips {

double SparseGenerator::max_exit() const {
  double m = 0;
  for (double e : exit) m = std::max(m, e);
  return m;
}

namespace {

SparseGenerator build(std::size_t n, const std::vector<std::map<std::uint32_t, double>>& rows) {
  SparseGenerator g;
  g.row_start.reserve(n + 1);
  g.exit.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    g.row_start.push_back(std::uint32_t(g.col.size()));
    for (const auto& [c, w] : rows[r]) {
      if (c == r || w == 0) continue;
      g.col.push_back(c);
      g.rate.push_back(w);
      g.exit[r] += w;
    }
  }
  g.row_start.push_back(std::uint32_t(g.col.size()));
  return g;
}

// Poisson(lambda) pmf for k = 0..n computed in log space.
std::vector<double> poisson_weights(double lambda, std::size_t n) {
  std::vector<double> w(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    w[k] = lambda == 0 ? (k == 0 ? 1.0 : 0.0)
                       : std::exp(double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1));
  return w;
}

}  // namespace

std::size_t poisson_truncation(double lambda, double tol) {
  if (lambda <= 0) return 0;
  // accumulate the pmf until the remaining mass 1 - cdf drops below tol
  double cdf = 0;
  std::size_t k = 0;
  while (true) {
    cdf += std::exp(double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1));
    if (1 - cdf < tol && double(k) > lambda) return k;
    ++k;
    if (k > 100000 + std::size_t(20 * lambda)) return k;
  }
}

std::vector<double> semigroup_apply(const SparseGenerator& q, const std::vector<double>& f, double t, double tol) {
  const double lam = q.max_exit();
  if (lam == 0 || t == 0) return f;
  const std::size_t n = poisson_truncation(lam * t, tol);
  const auto w = poisson_weights(lam * t, n);
  std::vector<double> cur = f, next(f.size()), out(f.size(), 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += w[k] * cur[i];
    // P = I + Q / lam
    for (std::size_t r = 0; r < f.size(); ++r) {
      double s = (1 - q.exit[r] / lam) * cur[r];
      for (std::uint32_t j = q.row_start[r]; j < q.row_start[r + 1]; ++j) s += q.rate[j] / lam * cur[q.col[j]];
      next[r] = s;
    }
    std::swap(cur, next);
  }
  return out;
}

std::vector<double> semigroup_push(const SparseGenerator& q, const std::vector<double>& pi, double t, double tol) {
  const double lam = q.max_exit();
  if (lam == 0 || t == 0) return pi;
  const std::size_t n = poisson_truncation(lam * t, tol);
  const auto w = poisson_weights(lam * t, n);
  std::vector<double> cur = pi, next(pi.size()), out(pi.size(), 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < pi.size(); ++i) out[i] += w[k] * cur[i];
    for (std::size_t r = 0; r < pi.size(); ++r) next[r] = (1 - q.exit[r] / lam) * cur[r];
    for (std::size_t r = 0; r < pi.size(); ++r)
      for (std::uint32_t j = q.row_start[r]; j < q.row_start[r + 1]; ++j) next[q.col[j]] += cur[r] * q.rate[j] / lam;
    std::swap(cur, next);
  }
  return out;
}

ExactSystem::ExactSystem(const ModelSpec& m, LatticePtr lattice) : lattice_(std::move(lattice)) {
  const std::size_t v = lattice_->size();
  if (v > kMaxExactSites) throw Error(Errc::StateSpaceTooLarge, "exact system limited to 12 sites");
  if (m.dim() != lattice_->dim()) throw Error(Errc::InvalidModel, "model and lattice dimensions differ");
  spec_ = extract_cancellative(m);
  const std::size_t n = std::size_t(1) << v;

  std::vector<std::map<std::uint32_t, double>> rows(n);
  Configuration cfg(lattice_);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t x = 0; x < v; ++x) cfg.set(x, (s >> x) & 1u);
    for (std::size_t x = 0; x < v; ++x) {
      const double c = flip_rate(m, x, cfg);
      if (c > 0) rows[s][std::uint32_t(s ^ (std::size_t(1) << x))] += c;
    }
  }
  fwd_ = build(n, rows);

  // x + A as a mask; offsets landing on the same site cancel
  std::vector<std::vector<std::uint32_t>> shifted(v, std::vector<std::uint32_t>(spec_.q0.size(), 0));
  for (std::size_t x = 0; x < v; ++x)
    for (std::size_t k = 0; k < spec_.q0.size(); ++k)
      for (const auto& z : spec_.q0[k].set) shifted[x][k] ^= std::uint32_t(1) << lattice_->translate(x, z);
  std::vector<std::map<std::uint32_t, double>> drows(n);
  for (std::size_t F = 1; F < n; ++F)
    for (std::size_t x = 0; x < v; ++x) {
      if (!((F >> x) & 1u)) continue;
      const std::uint32_t base = std::uint32_t(F) & ~(std::uint32_t(1) << x);
      for (std::size_t k = 0; k < spec_.q0.size(); ++k)
        drows[F][base ^ shifted[x][k]] += spec_.k0 * spec_.q0[k].weight;
    }
  dual_ = build(n, drows);
}

std::vector<double> ExactSystem::forward_odd(std::uint32_t zeta0, double t) const {
  std::vector<double> g(states());
  for (std::size_t s = 0; s < g.size(); ++s) g[s] = double(std::popcount(std::uint32_t(s) & zeta0) & 1);
  return semigroup_apply(fwd_, g, t);
}

std::vector<double> ExactSystem::dual_law(std::uint32_t zeta0, double t) const {
  std::vector<double> pi(states(), 0.0);
  pi[zeta0] = 1;
  return semigroup_push(dual_, pi, t);
}

std::vector<double> ExactSystem::forward_law(std::uint32_t xi0, double t) const {
  std::vector<double> pi(states(), 0.0);
  pi[xi0] = 1;
  return semigroup_push(fwd_, pi, t);
}

std::vector<double> ExactSystem::dual_odd(std::uint32_t zeta0, double t) const {
  // P(odd) = (1 - sum_F pi(F) (-1)^{|xi0 ∩ F|}) / 2, the sum being a Walsh transform of pi
  std::vector<double> w = dual_law(zeta0, t);
  for (std::size_t h = 1; h < w.size(); h <<= 1)
    for (std::size_t i = 0; i < w.size(); i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = w[j], b = w[j + h];
        w[j] = a + b;
        w[j + h] = a - b;
      }
  for (auto& x : w) x = (1 - x) / 2;
  return w;
}

bool ExactSystem::generators_valid() const {
  for (const auto* g : {&fwd_, &dual_}) {
    for (double r : g->rate)
      if (!(r > 0)) return false;
    for (std::size_t r = 0; r < g->size(); ++r) {
      double s = 0;
      for (std::uint32_t j = g->row_start[r]; j < g->row_start[r + 1]; ++j) s += g->rate[j];
      if (std::fabs(s - g->exit[r]) > 1e-12 * std::max(1.0, s)) return false;
    }
  }
  return true;
}

bool ExactSystem::dual_conserves_parity() const {
  for (std::size_t r = 0; r < dual_.size(); ++r)
    for (std::uint32_t j = dual_.row_start[r]; j < dual_.row_start[r + 1]; ++j)
      if ((std::popcount(std::uint32_t(r)) & 1) != (std::popcount(dual_.col[j]) & 1)) return false;
  return true;
}

ExactDualityReport exact_duality_check(const ExactSystem& sys, const std::vector<double>& times,
                                       const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  ExactDualityReport rep;
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_zeta;
  for (const auto& [xi, zeta] : pairs) {
    if (xi >= sys.states() || zeta >= sys.states()) throw Error(Errc::InvalidModel, "state mask out of range");
    by_zeta[zeta].push_back(xi);
  }
  for (double t : times)
    for (const auto& [zeta, xis] : by_zeta) {
      const auto lhs = sys.forward_odd(zeta, t);
      const auto rhs = sys.dual_odd(zeta, t);
      for (std::size_t s = 0; s < lhs.size(); ++s)
        rep.max_violation_all_xi0 = std::max(rep.max_violation_all_xi0, std::fabs(lhs[s] - rhs[s]));
      for (auto xi : xis) {
        rep.rows.push_back({xi, zeta, t, lhs[xi], rhs[xi]});
        rep.max_violation = std::max(rep.max_violation, std::fabs(lhs[xi] - rhs[xi]));
      }
    }
  return rep;
}

}  // namespace ips
