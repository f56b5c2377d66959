#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "doctest.h"
#include "gen.hpp"
#include "ips/error.hpp"
#include "ips/parallel.hpp"
#include "ips/percolation.hpp"

using namespace ips;

namespace {

int coord_sum(const Offset& c, int dim) {
  int s = 0;
  for (int i = 0; i < dim; ++i) s += c[i];
  return s;
}

// Random even-parity starting set.
std::vector<std::uint32_t> random_even_set(const PercField& f, Rng& r, std::size_t max_size) {
  std::vector<std::uint32_t> out;
  const std::size_t k = std::size_t(r.below(max_size + 1));
  while (out.size() < k) {
    const auto s = std::uint32_t(r.below(f.space().size()));
    if (f.on_lattice(s, 0)) out.push_back(s);
  }
  return out;
}

bool subset(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("closed and fully open fields") {
  const auto closed = sample_field({16, 16}, 10, 0.0, 1);
  for (auto b : closed.materialize()) CHECK(b == 0);
  const auto fc = front_evolve(closed, {0}, 4);
  CHECK(fc.gens[0].size() == 1);
  for (int m = 1; m <= 4; ++m) CHECK(fc.gens[m].empty());

  // all open: W_{2n} is the diamond |y|_1 <= 2n of even sites
  const auto open = sample_field({32, 32}, 10, 1.0, 1);
  const auto fo = front_evolve(open, {0}, 10);
  std::set<std::uint32_t> diamond;
  for (int a = -10; a <= 10; ++a)
    for (int b = -10; b <= 10; ++b)
      if (std::abs(a) + std::abs(b) <= 10 && ((a + b) & 1) == 0) diamond.insert(open.space().index(Offset{a, b}));
  CHECK(std::set<std::uint32_t>(fo.gens[10].begin(), fo.gens[10].end()) == diamond);
  CHECK(fo.wrap_contacts == 0);
}

TEST_CASE("open fraction matches the density") {
  const auto f = sample_field({64, 64}, 40, 0.7, 2);
  const auto est = f.open_fraction();
  CHECK(std::fabs(est.mean - 0.7) < 3 * est.se);
  // wrong-parity sites are never open
  const auto bits = f.materialize();
  for (int n = 0; n <= 40; ++n)
    for (std::size_t s = 0; s < f.space().size(); ++s)
      if (!f.on_lattice(s, n)) CHECK(bits[std::size_t(n) * f.space().size() + s] == 0);
}

TEST_CASE("empty start stays empty") {
  const auto f = sample_field({16, 16}, 8, 0.9, 3);
  const auto w = front_evolve(f, {}, 8);
  for (const auto& g : w.gens) CHECK(g.empty());
}

TEST_CASE("front follows a single open column") {
  auto space = make_torus({32});
  const int n_max = 12;
  std::vector<std::uint8_t> bits(space->size() * (n_max + 1), 0);
  // column at x = 0 on even n and x = 1 on odd n
  for (int n = 0; n <= n_max; ++n) bits[std::size_t(n) * space->size() + (n & 1)] = 1;
  const auto f = PercField::from_bits(space, n_max, bits);
  const auto w = front_evolve(f, {0}, n_max);
  for (int m = 1; m <= n_max; ++m) {
    const int prev = (m - 1) & 1;
    const std::vector<std::uint32_t> want{std::uint32_t(prev + 1), std::uint32_t((prev - 1 + 32) % 32)};
    CHECK(std::set<std::uint32_t>(w.gens[m].begin(), w.gens[m].end()) ==
          std::set<std::uint32_t>(want.begin(), want.end()));
  }
}

TEST_CASE("front properties on random fields") {
  auto r = gen::rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const double q = 0.3 + 0.6 * r.uniform();
    const int dim = 1 + int(r.below(2));
    const std::vector<int> width(dim, dim == 1 ? 64 : 16);
    const auto f = sample_field(width, 12, q, 100 + trial);
    const auto A = random_even_set(f, r, 5);
    const auto B = random_even_set(f, r, 5);
    std::vector<std::uint32_t> AB = A;
    AB.insert(AB.end(), B.begin(), B.end());
    const auto wa = front_evolve(f, A, 12);
    const auto wb = front_evolve(f, B, 12);
    const auto wab = front_evolve(f, AB, 12);
    const auto slab = front_evolve(f, AB, 12, 0);
    for (int m = 0; m <= 12; ++m) {
      // additivity
      std::vector<std::uint32_t> u;
      std::set_union(wa.gens[m].begin(), wa.gens[m].end(), wb.gens[m].begin(), wb.gens[m].end(),
                     std::back_inserter(u));
      CHECK(u == wab.gens[m]);
      // monotone in the initial set
      CHECK(subset(wa.gens[m], wab.gens[m]));
      // slab clusters sit inside full clusters
      CHECK(subset(slab.gens[m], wab.gens[m]));
      // parity
      for (auto s : wab.gens[m]) CHECK(((coord_sum(f.space().coords(s), dim) + m) & 1) == 0);
      // W_{m+1} lies in the neighbours of open sites of W_m
      if (m > 0)
        for (auto y : wab.gens[m]) {
          bool found = false;
          for (auto x : wab.gens[m - 1]) {
            if (!f.open(x, m - 1)) continue;
            const Offset d = f.space().coords(y) - f.space().coords(x);
            int moved = 0;
            for (int i = 0; i < dim; ++i) {
              const int side = width[i];
              const int di = ((d[i] % side) + side) % side;
              if (di == 1 || di == side - 1) ++moved;
              else if (di != 0) moved = 99;
            }
            found = found || moved == 1;
          }
          CHECK(found);
        }
    }
  }
}

TEST_CASE("fronts are monotone in the density under shared uniforms") {
  auto r = gen::rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double lo = 0.4 + 0.3 * r.uniform(), hi = lo + 0.2 * r.uniform();
    const auto a = sample_field({16, 16}, 14, lo, 7, trial);
    const auto b = sample_field({16, 16}, 14, hi, 7, trial);
    const auto wa = front_evolve(a, {0}, 14);
    const auto wb = front_evolve(b, {0}, 14);
    for (int m = 0; m <= 14; ++m) CHECK(subset(wa.gens[m], wb.gens[m]));
  }
}

TEST_CASE("rejects odd-parity starts and bad densities") {
  const auto f = sample_field({16, 16}, 4, 0.5, 8);
  CHECK_THROWS_AS(front_evolve(f, {1}, 2), Error);
  CHECK_THROWS_AS(sample_field({16, 16}, 4, 1.5, 8), Error);
  CHECK_THROWS_AS(front_evolve(f, {0}, 5), Error);
}

TEST_CASE("survival decays when subcritical and is monotone in the density") {
  PercParams p;
  p.width = {256};
  p.open_p = 0.3;
  p.n_max = 10;
  const auto short_run = survival_estimate(p, 4000, 9);
  p.n_max = 40;
  const auto long_run = survival_estimate(p, 4000, 9);
  CHECK(long_run.rows[0].rho.mean < short_run.rows[0].rho.mean);
  CHECK(long_run.rows[0].rho.mean < 0.01);

  p.n_max = 60;
  const auto sweep = survival_sweep(p, {0.9, 0.5, 0.7, 0.6}, 2000, 10);
  CHECK(sweep.coupling_violations == 0);
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    CHECK(sweep.rows[i].open_p > sweep.rows[i - 1].open_p);
    CHECK(sweep.rows[i].alive >= sweep.rows[i - 1].alive);
  }
}

TEST_CASE("slab survival is positive at the threshold density") {
  PercParams p;
  p.width = {256, 8};
  p.n_max = 100;
  const auto s = survival_estimate(p, 2000, 11);
  CHECK(s.rows[0].rho.lo95() > 0);
  CHECK(s.wrap_contacts == 0);
  CHECK(s.max_spread <= 100);
}

TEST_CASE("results do not depend on the worker count") {
  PercParams p;
  p.width = {128};
  p.n_max = 50;
  p.open_p = 0.7;
  set_default_threads(1);
  const auto a = survival_estimate(p, 500, 12);
  set_default_threads(4);
  const auto b = survival_estimate(p, 500, 12);
  set_default_threads(0);
  CHECK(a.rows[0].alive == b.rows[0].alive);
}

TEST_CASE("coverage probe") {
  PercParams p;
  p.width = {64, 64};
  p.open_p = 0.8;
  p.slab_axis = -1;
  // empty target reduces to survival
  const auto none = coverage_sweep(p, {}, {0}, 8, 1000, 13);
  CHECK(none.rows[0].p.mean == none.survival.mean);

  // every even site of a small torus: a live front always hits it
  PercParams small = p;
  small.width = {8, 8};
  std::vector<Offset> all_even;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      if (((a + b) & 1) == 0) all_even.push_back(Offset{a, b});
  const auto full = coverage_sweep(small, all_even, {all_even.size()}, 6, 1000, 14);
  CHECK(full.rows[0].p.mean == 0.0);
  CHECK(full.survival.mean > 0.5);

  // nested random targets inside the reachable diamond
  auto r = gen::rng(15);
  std::vector<Offset> A;
  while (A.size() < 40) {
    const Offset z = gen::random_offset(r, 2, 8);
    if ((coord_sum(z, 2) & 1) == 0 && std::find(A.begin(), A.end(), z) == A.end()) A.push_back(z);
  }
  const auto sweep = coverage_sweep(p, A, {0, 1, 5, 10, 20, 40}, 8, 2000, 16);
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) CHECK(sweep.rows[i].p.mean <= sweep.rows[i - 1].p.mean);
  CHECK(sweep.rows.back().p.mean < sweep.rows.front().p.mean);
  CHECK(coverage_probe(p, A, 8, 2000, 16).mean == sweep.rows.back().p.mean);

  CHECK_THROWS_AS(coverage_probe(p, {Offset{1, 0}}, 4, 10, 1), Error);
}

TEST_CASE("dependent-to-iid density conversion") {
  CHECK(block_delta(1, 2) == 27);
  CHECK(block_delta(2, 3) == 625);
  // (1 - 10^(-30/27))^2, evaluated to 30 digits
  CHECK(dependent_to_iid_density(1e-30, 1, 2) == doctest::Approx(0.851142105966963998).epsilon(1e-12));
  CHECK(dependent_to_iid_density(1e-300, 1, 1) > 0.999);
  const double target = 1 - 1.0 / 1296;
  // 27 log(1 - sqrt(target))
  CHECK(log_iid_threshold_gamma_prime(target, 1, 2) == doctest::Approx(-212.219786710727885).epsilon(1e-12));
  const double g = iid_threshold_gamma_prime(target, 1, 2);
  CHECK(g == doctest::Approx(6.82523612620265788e-93).epsilon(1e-10));
  CHECK(dependent_to_iid_density(0.9 * g, 1, 2) > target);
  CHECK(dependent_to_iid_density(1.1 * g, 1, 2) < target);
  CHECK(dependent_to_iid_density(1e-30, 1, 2) < target);
  CHECK_THROWS_AS(dependent_to_iid_density(0.0, 1, 2), Error);
  CHECK_THROWS_AS(dependent_to_iid_density(0.5, 0, 2), Error);
}
