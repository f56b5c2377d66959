#include <cmath>

#include "doctest.h"
#include "gen.hpp"
#include "ips/error.hpp"
#include "ips/reaction.hpp"

using namespace ips;

namespace {

const std::vector<double> kGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

// Agreement within 4 joint standard errors; the floor covers rows where both
// sides vanish up to rounding.
bool agree(const Estimate& a, const Estimate& b) { return std::fabs(a.mean - b.mean) <= 4 * joint_se(a, b) + 1e-12; }

}  // namespace

TEST_CASE("a single walk is one cluster") {
  const auto s = coalescence_distribution(Kernel::nearest_neighbor(2), {Offset{}}, 50, 200, 60, make_torus({32, 32}));
  CHECK(s.dist[1].mean == 1.0);
  CHECK(s.monotone_violations == 0);
}

TEST_CASE("walks in d = 1 coalesce") {
  const auto s = coalescence_distribution(Kernel::nearest_neighbor(1), {Offset{0}, Offset{1}}, 10000, 2000, 61);
  CHECK(s.dist[1].mean > 0.9);
  const auto early = coalescence_distribution(Kernel::nearest_neighbor(1), {Offset{0}, Offset{1}}, 10, 2000, 61);
  CHECK(early.dist[1].mean < s.dist[1].mean);
}

TEST_CASE("cluster counts never increase") {
  CoalescingWalks w(Kernel::nearest_neighbor(2), make_torus({16, 16}));
  auto rng = gen::rng(62);
  std::vector<Offset> F;
  for (int i = 0; i < 6; ++i) F.push_back(Offset{i, 0});
  for (int r = 0; r < 200; ++r) {
    const auto res = w.run(F, {1, 2, 5, 10, 20, 50}, rng);
    CHECK(res.monotone_violations == 0);
    for (std::size_t i = 1; i < res.clusters.size(); ++i) CHECK(res.clusters[i] <= res.clusters[i - 1]);
    // labels at a later time coarsen earlier ones
    for (std::size_t i = 1; i < res.labels.size(); ++i)
      for (std::size_t a = 0; a < F.size(); ++a)
        for (std::size_t b = 0; b < F.size(); ++b)
          if (res.labels[i - 1][a] == res.labels[i - 1][b]) CHECK(res.labels[i][a] == res.labels[i][b]);
  }
}

TEST_CASE("pair escape probability in d = 3 matches the Polya constant") {
  // the difference of two rate-1 walks is a rate-2 simple walk started next to
  // the origin; it ever hits the origin with the return probability 0.3405
  const auto s = coalescence_distribution(Kernel::nearest_neighbor(3), {Offset{}, Offset{1, 0, 0}}, 400, 20000, 63);
  CHECK(s.dist[2].mean == doctest::Approx(1 - 0.340537).epsilon(0.03));
  CHECK(s.late_rate < 0.01);
  CHECK(s.horizon_stable);
}

TEST_CASE("window sampler edge cases") {
  auto rng = gen::rng(64);
  const std::vector<Offset> W{Offset{}, Offset{1, 0, 0}, Offset{0, 1, 0}, Offset{}};
  auto torus = make_torus({16, 16, 16});
  for (int i = 0; i < 50; ++i) {
    const auto z = sample_voter_equilibrium_window(Kernel::nearest_neighbor(3), W, 0.0, 20, rng, torus);
    for (auto b : z.bits) CHECK(b == 0);
    const auto o = sample_voter_equilibrium_window(Kernel::nearest_neighbor(3), W, 1.0, 20, rng, torus);
    for (auto b : o.bits) CHECK(b == 1);
    const auto h = sample_voter_equilibrium_window(Kernel::nearest_neighbor(3), W, 0.5, 20, rng, torus);
    CHECK(h.bits[0] == h.bits[3]);
    CHECK(h.equilibrium);
  }
  const auto low = sample_voter_equilibrium_window(Kernel::nearest_neighbor(2), {Offset{}, Offset{1, 0}}, 0.5, 5, rng);
  CHECK(!low.equilibrium);
}

TEST_CASE("pair expectation two ways") {
  const Kernel k = Kernel::nearest_neighbor(3);
  const std::vector<Offset> xy{Offset{}, Offset{2, 1, 0}};
  auto torus = make_torus({32, 32, 32});
  const double u = 0.3, t = 200;
  const int reps = 20000;
  CoalescingWalks walks(k, torus);
  Welford direct;
  for (int r = 0; r < reps; ++r) {
    auto rng = Rng::derive(65, Tag::Test, std::uint64_t(r));
    const auto s = sample_voter_equilibrium_window(walks, xy, u, t, rng);
    direct.add(double(s.bits[0] * (1 - s.bits[1])));
  }
  const auto cs = coalescence_distribution(k, xy, t, reps, 66, torus);
  const Estimate via{u * (1 - u) * cs.dist[2].mean, u * (1 - u) * cs.dist[2].se};
  CHECK(std::fabs(z_score(direct.estimate(), via)) < 3);
}

TEST_CASE("LV reaction curve is the cubic") {
  const auto v = perturbation_view(ModelSpec::lv(0.5, Kernel::nearest_neighbor(3)));
  const auto c = estimate_f(v, kGrid, 3000, 200, 67, make_torus({32, 32, 32}));
  REQUIRE(c.closed_available);
  CHECK(c.rows.front().f_hat.mean == 0.0);
  CHECK(c.rows.back().f_hat.mean == 0.0);
  for (const auto& row : c.rows) {
    CHECK(agree(row.f_hat, row.f_partition));
    CHECK(agree(row.f_partition, row.closed));
  }
  for (double z : c.antisym_z) CHECK(std::fabs(z) < 3);
  CHECK(c.cubic_coef.mean > 0);
  CHECK(std::fabs(z_score(c.p3_fit, c.p3_triple)) < 4);
}

TEST_CASE("GV reaction matches the triple sum with the |N|/2 factor") {
  const auto v = perturbation_view(ModelSpec::gv(0.9, Neighborhood::nearest_neighbor(3)));
  const auto c = estimate_f(v, {0.2, 0.5, 0.8}, 3000, 200, 68, make_torus({32, 32, 32}));
  for (const auto& row : c.rows) CHECK(agree(row.f_partition, row.closed));
  CHECK(c.rows[0].f_hat.mean > 0);
}

TEST_CASE("AV derivative at zero") {
  const auto n = Neighborhood::make({Offset{1, 0, 0}, Offset{-1, 0, 0}}, 3);
  const auto v = perturbation_view(ModelSpec::av(0.9, n, Kernel::nearest_neighbor(3)));
  const auto f = fprime_zero(v, 20000, 200, 69, make_torus({32, 32, 32}));
  REQUIRE(f.closed_available);
  CHECK(std::fabs(z_score(f.estimate, f.closed)) < 3);
  CHECK(f.closed.lo95() > 0);
  // A in {1, 2, 3}; the integrand is 1 only at A = 3
  CHECK(f.a_dist.size() == 4);
  CHECK(f.closed.mean == doctest::Approx(0.1 * f.a_dist[3].mean).epsilon(1e-12));
}

TEST_CASE("pure voter has zero reaction") {
  const auto v = perturbation_view(ModelSpec::lv(1.0, Kernel::nearest_neighbor(3)));
  const auto f = fprime_zero(v, 100, 50, 70, make_torus({16, 16, 16}));
  CHECK(f.estimate.mean == 0.0);
  CHECK(f.closed.mean == 0.0);
}

TEST_CASE("AV derivative in d = 1 decays with the horizon") {
  const auto v = perturbation_view(ModelSpec::av(0.5, Neighborhood::nearest_neighbor(1)));
  const auto a = fprime_zero(v, 4000, 5, 71);
  const auto b = fprime_zero(v, 4000, 2000, 71);
  CHECK(b.closed.mean < a.closed.mean);
  CHECK(b.closed.mean < 0.05);
}
