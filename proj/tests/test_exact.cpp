#include <bit>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gen.hpp"
#include "ips/error.hpp"
#include "ips/exact.hpp"

using namespace ips;

namespace {

using Dense = std::vector<std::vector<double>>;

Dense dense_of(const SparseGenerator& g) {
  Dense q(g.size(), std::vector<double>(g.size(), 0.0));
  for (std::size_t r = 0; r < g.size(); ++r) {
    q[r][r] = -g.exit[r];
    for (auto j = g.row_start[r]; j < g.row_start[r + 1]; ++j) q[r][g.col[j]] += g.rate[j];
  }
  return q;
}

Dense mul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// exp(tQ) by scaling and squaring of a Taylor polynomial.
Dense expm(Dense q, double t) {
  const std::size_t n = q.size();
  int squarings = 0;
  double norm = 0;
  for (const auto& row : q)
    for (double v : row) norm = std::max(norm, std::fabs(v) * t);
  while (norm > 0.05) {
    norm /= 2;
    ++squarings;
  }
  const double h = t / std::ldexp(1.0, squarings);
  Dense e(n, std::vector<double>(n, 0.0)), term(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) e[i][i] = term[i][i] = 1;
  for (int k = 1; k <= 20; ++k) {
    term = mul(term, q);
    for (auto& row : term)
      for (auto& v : row) v *= h / k;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) e = mul(e, e);
  return e;
}

std::vector<ModelSpec> gate_models() {
  return {ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)), ModelSpec::av(0.9, Neighborhood::nearest_neighbor(2)),
          ModelSpec::gv(0.9, Neighborhood::nearest_neighbor(2)), ModelSpec::voter(Kernel::nearest_neighbor(2))};
}

}  // namespace

TEST_CASE("poisson truncation bounds the tail") {
  for (double lam : {0.1, 1.0, 9.0, 90.0}) {
    const std::size_t n = poisson_truncation(lam, 1e-12);
    // tail from n+1 summed forward in log space
    double tail = 0;
    for (std::size_t k = n + 1; k < n + 2000; ++k)
      tail += std::exp(double(k) * std::log(lam) - lam - std::lgamma(double(k) + 1));
    CHECK(tail < 1e-12);
  }
}

TEST_CASE("uniformized semigroup equals a dense matrix exponential") {
  auto lat = make_small_torus({3});
  ExactSystem sys(ModelSpec::lv(0.7, Kernel::nearest_neighbor(1)), lat);
  for (double t : {0.1, 1.0, 5.0}) {
    const Dense e = expm(dense_of(sys.forward()), t);
    std::vector<double> f(sys.states());
    auto r = gen::rng(30);
    for (auto& v : f) v = r.uniform();
    const auto u = semigroup_apply(sys.forward(), f, t);
    for (std::size_t i = 0; i < f.size(); ++i) {
      double ref = 0;
      for (std::size_t j = 0; j < f.size(); ++j) ref += e[i][j] * f[j];
      CHECK(u[i] == doctest::Approx(ref).epsilon(1e-11));
    }
    const Dense ed = expm(dense_of(sys.dual()), t);
    const auto law = sys.dual_law(0b011, t);
    for (std::size_t j = 0; j < law.size(); ++j) CHECK(law[j] == doctest::Approx(ed[0b011][j]).epsilon(1e-11));
  }
}

TEST_CASE("generators are valid and laws are normalized") {
  auto lat = make_small_torus({3, 3});
  for (const auto& m : gate_models()) {
    ExactSystem sys(m, lat);
    CHECK(sys.generators_valid());
    CHECK(sys.dual_conserves_parity());
    // traps
    CHECK(sys.forward().exit[0] == 0);
    CHECK(sys.forward().exit[sys.states() - 1] == 0);
    CHECK(sys.dual().exit[0] == 0);
    const auto law = sys.forward_law(0b000010011, 1.0);
    CHECK(std::accumulate(law.begin(), law.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("duality degenerate cases") {
  auto lat = make_small_torus({3, 3});
  ExactSystem sys(ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)), lat);
  for (double t : {0.1, 1.0}) {
    const auto l = sys.forward_odd(0, t), r = sys.dual_odd(0, t);
      // exact on the backward side; the dual side carries the series truncation error
    for (std::size_t s = 0; s < l.size(); ++s) {
      CHECK(std::fabs(l[s]) < 1e-12);
      CHECK(std::fabs(r[s]) < 1e-12);
    }
    const std::uint32_t ones = std::uint32_t(sys.states() - 1);
    for (std::uint32_t z : {0b1u, 0b11u, 0b10101u}) {
      const double expect = std::popcount(z) & 1;
      CHECK(sys.forward_odd(z, t)[ones] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(sys.dual_odd(z, t)[ones] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact duality on the 3x3 torus") {
  auto lat = make_small_torus({3, 3});
  auto r = gen::rng(31);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(std::uint32_t(r.below(512)), std::uint32_t(1 + r.below(511)));
  for (const auto& m : gate_models()) {
    ExactSystem sys(m, lat);
    const auto rep = exact_duality_check(sys, {0.1, 1.0, 10.0}, pairs);
    CHECK(rep.rows.size() == 60);
    CHECK(rep.max_violation <= 1e-8);
    CHECK(rep.max_violation_all_xi0 <= 1e-8);
  }
}

TEST_CASE("state space limit") {
  const auto lv = ModelSpec::lv(0.9, Kernel::nearest_neighbor(2));
  ExactSystem ok(lv, make_small_torus({3, 4}));
  CHECK(ok.states() == 4096);
  CHECK_THROWS_AS(ExactSystem(lv, make_small_torus({4, 4})), Error);
}
