#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gen.hpp"
#include "ips/error.hpp"
#include "ips/exact.hpp"
#include "ips/forward.hpp"
#include "ips/parallel.hpp"

using namespace ips;

namespace {

double density(const Configuration& c) { return double(c.count()) / double(c.size()); }

// P(xi_t(site) = 1) from the exact forward law.
double exact_one_prob(const ExactSystem& sys, std::uint32_t xi0, double t, std::size_t site) {
  const auto law = sys.forward_law(xi0, t);
  double p = 0;
  for (std::size_t s = 0; s < law.size(); ++s)
    if ((s >> site) & 1u) p += law[s];
  return p;
}

std::uint32_t mask_of(const Configuration& c) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < c.size(); ++i) m |= std::uint32_t(c.get(i)) << i;
  return m;
}

}  // namespace

TEST_CASE("traps are preserved") {
  auto lat = make_torus({8, 8});
  auto rng = gen::rng(40);
  for (const auto& m : {ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)), ModelSpec::gv(0.5, Neighborhood::box(1, 2)),
                        ModelSpec::av(0.8, Neighborhood::nearest_neighbor(2))}) {
    CHECK(evolve_gillespie(m, Configuration(lat), 50, rng).all_zero());
    CHECK(evolve_gillespie(m, Configuration(lat, true), 50, rng).all_one());
    const auto v = perturbation_view(m);
    CHECK(evolve_graphical(v, Configuration(lat), 20, 3).all_zero());
    CHECK(evolve_graphical(v, Configuration(lat, true), 20, 3).all_one());
  }
}

TEST_CASE("Gillespie matches the exact semigroup on a 3x3 torus") {
  auto lat = make_small_torus({3, 3});
  for (const auto& m : {ModelSpec::lv(0.5, Kernel::nearest_neighbor(2)), ModelSpec::gv(0.3, Neighborhood::nearest_neighbor(2))}) {
    ExactSystem sys(m, lat);
    GillespieEngine eng(m, lat);
    Configuration c0(lat);
    c0.set(0, true);
    c0.set(1, true);
    c0.set(4, true);
    const double t = 1.5;
    const double p = exact_one_prob(sys, mask_of(c0), t, 4);
    const int reps = 20000;
    std::uint64_t hits = 0;
    for (int r = 0; r < reps; ++r) {
      Configuration c = c0;
      auto rng = Rng::derive(41, Tag::Test, std::uint64_t(r));
      eng.evolve(c, t, rng);
      hits += c.get(4);
    }
    const auto est = binomial_estimate(hits, reps);
    CHECK(std::fabs(est.mean - p) < 4 * std::sqrt(p * (1 - p) / reps));
  }
}

TEST_CASE("graphical engine matches the exact semigroup on a 3x3 torus") {
  auto lat = make_small_torus({3, 3});
  for (const auto& m : {ModelSpec::lv(0.5, Kernel::nearest_neighbor(2)), ModelSpec::gv(0.3, Neighborhood::nearest_neighbor(2)),
                        ModelSpec::av(0.4, Neighborhood::nearest_neighbor(2))}) {
    ExactSystem sys(m, lat);
    const auto v = perturbation_view(m);
    Configuration c0(lat);
    c0.set(0, true);
    c0.set(3, true);
    c0.set(5, true);
    const double t = 1.5;
    const double p = exact_one_prob(sys, mask_of(c0), t, 4);
    const int reps = 20000;
    std::uint64_t hits = 0;
    for (int r = 0; r < reps; ++r) hits += evolve_graphical(v, c0, t, 1000 + std::uint64_t(r)).get(4);
    const auto est = binomial_estimate(hits, reps);
    CHECK(std::fabs(est.mean - p) < 4 * std::sqrt(p * (1 - p) / reps));
  }
}

TEST_CASE("voter density is a martingale") {
  auto lat = make_torus({64});
  const auto m = ModelSpec::voter(Kernel::nearest_neighbor(1));
  Welford w;
  for (int r = 0; r < 2000; ++r) {
    auto rng = Rng::derive(42, Tag::Test, std::uint64_t(r));
    const auto c0 = make_initial("half", lat, rng);
    const auto c = evolve_gillespie(m, c0, 20, rng);
    w.add(density(c));
  }
  CHECK(std::fabs(w.mean() - 0.5) < 3 * w.se());
}

TEST_CASE("eps = 0 runs arrows only") {
  auto lat = make_torus({8, 8});
  EventLog log(perturbation_view(ModelSpec::voter(Kernel::nearest_neighbor(2))), lat, 43);
  auto rng = gen::rng(43);
  auto c = make_initial("half", lat, rng);
  const auto st = evolve_graphical(log, c, 10);
  CHECK(st.star_events == 0);
  CHECK(st.voter_events > 0);
}

TEST_CASE("a site with no events keeps its value") {
  auto lat = make_torus({8, 8});
  const auto v = perturbation_view(ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)));
  const double T = 0.5;
  std::size_t quiet = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EventLog log(v, lat, seed);
    auto rng = gen::rng(44, seed);
    const auto c0 = make_initial("half", lat, rng);
    auto c = c0;
    evolve_graphical(log, c, T);
    std::vector<GraphicalEvent> ev;
    for (std::uint32_t x = 0; x < lat->size(); ++x) {
      ev.clear();
      log.site_window(x, 0, ev);
      bool any = false;
      for (const auto& e : ev) any |= e.t <= T;
      if (any) continue;
      ++quiet;
      CHECK(c.get(x) == c0.get(x));
    }
  }
  CHECK(quiet > 100);
}

TEST_CASE("event log is reproducible and sorted") {
  auto lat = make_torus({8, 8});
  const auto v = perturbation_view(ModelSpec::gv(0.8, Neighborhood::nearest_neighbor(2)));
  EventLog a(v, lat, 45), b(v, lat, 45);
  std::vector<GraphicalEvent> ea, eb;
  for (std::uint32_t x = 0; x < 64; x += 5)
    for (std::uint64_t w = 0; w < 4; ++w) {
      ea.clear();
      eb.clear();
      a.site_window(x, w, ea);
      b.site_window(x, w, eb);
      REQUIRE(ea.size() == eb.size());
      for (std::size_t i = 0; i < ea.size(); ++i) {
        CHECK(ea[i].t == eb[i].t);
        CHECK(ea[i].arg == eb[i].arg);
        CHECK(ea[i].t >= double(w));
        CHECK(ea[i].t < double(w + 1));
        if (i) CHECK(ea[i - 1].t <= ea[i].t);
      }
    }
}

TEST_CASE("walks without time stay put") {
  auto lat = make_torus({8, 8});
  EventLog log(perturbation_view(ModelSpec::lv(0.9, Kernel::nearest_neighbor(2))), lat, 46);
  const std::vector<std::uint32_t> sites{0, 5, 17, 63};
  const auto r = walk_dual(log, sites, 0.0);
  CHECK(r.terminal == sites);
  CHECK(r.cluster == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("pathwise walk duality on star-clean sites") {
  auto lat = make_torus({16, 16});
  for (const auto& m : {ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)), ModelSpec::gv(0.9, Neighborhood::nearest_neighbor(2)),
                        ModelSpec::av(0.9, Neighborhood::nearest_neighbor(2))}) {
    const auto v = perturbation_view(m);
    std::vector<std::uint32_t> all(lat->size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    std::size_t clean = 0, violations = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      EventLog log(v, lat, 4700 + seed);
      auto rng = gen::rng(47, seed);
      const auto c0 = make_initial("half", lat, rng);
      auto c = c0;
      const double t = 3.0;
      evolve_graphical(log, c, t);
      const auto w = walk_dual(log, all, t);
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (!w.star_clean[i]) continue;
        ++clean;
        violations += c.get(all[i]) != c0.get(w.terminal[i]);
      }
      // coalesced walks share the terminal site and label
      for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); j += 17)
          CHECK((w.cluster[i] == w.cluster[j]) == (w.terminal[i] == w.terminal[j]));
    }
    CHECK(clean > 1000);
    CHECK(violations == 0);
  }
}

TEST_CASE("walk jump counts are Poisson") {
  auto lat = make_torus({32, 32});
  const auto v = perturbation_view(ModelSpec::lv(0.8, Kernel::nearest_neighbor(2)));
  const double t = 4.0, lam = v.voter_rate() * t;
  std::vector<double> counts(12, 0.0);
  std::size_t n = 0;
  // one walk per log keeps the counts independent
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    EventLog log(v, lat, 4800 + seed);
    const auto w = walk_dual(log, {std::uint32_t(seed % lat->size())}, t);
    counts[std::min<std::size_t>(w.jumps[0], 11)] += 1;
    ++n;
  }
  double chi2 = 0;
  double tail = 1;
  for (std::size_t k = 0; k < 12; ++k) {
    double p = std::exp(double(k) * std::log(lam) - lam - std::lgamma(double(k) + 1));
    if (k == 11) p = tail;
    tail -= p;
    const double e = p * double(n);
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  boost::math::chi_squared dist(11);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("engines agree on LV density") {
  auto lat = make_torus({16, 16});
  const auto m = ModelSpec::lv(0.9, Kernel::nearest_neighbor(2));
  const auto v = perturbation_view(m);
  GillespieEngine eng(m, lat);
  Welford g, h;
  for (int r = 0; r < 1500; ++r) {
    auto rng = Rng::derive(49, Tag::Test, std::uint64_t(r));
    auto c0 = make_initial("half", lat, rng);
    auto c = c0;
    eng.evolve(c, 5, rng);
    g.add(density(c));
    h.add(density(evolve_graphical(v, c0, 5, 4900 + std::uint64_t(r))));
  }
  CHECK(std::fabs(z_score(g.estimate(), h.estimate())) < 4);
}

TEST_CASE("complement equivariance") {
  auto lat = make_torus({16, 16});
  const auto m = ModelSpec::gv(0.8, Neighborhood::nearest_neighbor(2));
  GillespieEngine eng(m, lat);
  Welford a, b;
  Configuration c0(lat);
  for (std::size_t i = 0; i < c0.size(); ++i) c0.set(i, lat->coords(i)[0] < 5);
  for (int r = 0; r < 1000; ++r) {
    auto r1 = Rng::derive(50, Tag::Test, std::uint64_t(r), 1);
    auto r2 = Rng::derive(50, Tag::Test, std::uint64_t(r), 2);
    auto c = c0;
    eng.evolve(c, 4, r1);
    a.add(density(c));
    auto d = c0.complement();
    eng.evolve(d, 4, r2);
    b.add(1 - density(d));
  }
  CHECK(std::fabs(z_score(a.estimate(), b.estimate())) < 4);
}

TEST_CASE("observers fire at requested times") {
  auto lat = make_torus({8, 8});
  auto rng = gen::rng(51);
  std::vector<double> seen;
  const auto m = ModelSpec::lv(0.7, Kernel::nearest_neighbor(2));
  evolve_gillespie(m, make_initial("half", lat, rng), 3, rng, {0, 1, 2, 3},
                   [&](std::size_t i, double t, const Configuration&) {
                     CHECK(i == seen.size());
                     seen.push_back(t);
                   });
  CHECK(seen == std::vector<double>{0, 1, 2, 3});
  seen.clear();
  // trapped runs still report every time
  evolve_gillespie(m, Configuration(lat), 3, rng, {0, 1, 2, 3},
                   [&](std::size_t, double t, const Configuration&) { seen.push_back(t); });
  CHECK(seen.size() == 4);
}

TEST_CASE("hitting probabilities") {
  auto lat = make_torus({4, 4});
  const auto m = ModelSpec::lv(0.5, Kernel::nearest_neighbor(2));
  const auto z = hitting_probabilities(m, Configuration(lat), 5, 100, 52);
  CHECK(z.at_h.beta0.mean == 1.0);
  CHECK(z.at_h.beta1.mean == 0.0);
  CHECK(z.at_h.beta_inf.mean == 0.0);
  auto rng = gen::rng(52);
  const auto checker = make_initial("checker", lat, rng);
  const auto h = hitting_probabilities(m, checker, 40, 4000, 53);
  CHECK(h.at_h.beta0.mean + h.at_h.beta1.mean + h.at_h.beta_inf.mean == 1.0);
  CHECK(std::fabs(z_score(h.at_2h.beta0, h.at_2h.beta1)) < 3);
  set_default_threads(1);
  const auto a = hitting_probabilities(m, checker, 10, 300, 54);
  set_default_threads(4);
  const auto b = hitting_probabilities(m, checker, 10, 300, 54);
  set_default_threads(0);
  CHECK(a.at_h.beta0.mean == b.at_h.beta0.mean);
  CHECK(a.at_2h.beta1.mean == b.at_2h.beta1.mean);
}

TEST_CASE("initial conditions and snapshots") {
  auto lat = make_torus({4, 6});
  auto rng = gen::rng(55);
  CHECK(make_initial("zeros", lat, rng).all_zero());
  CHECK(make_initial("ones", lat, rng).all_one());
  CHECK(make_initial("single", lat, rng).count() == 1);
  CHECK(make_initial("checker", lat, rng).count() == 12);
  CHECK(make_initial("halfspace", lat, rng).count() == 12);
  CHECK_THROWS_AS(make_initial("bogus", lat, rng), Error);
  const auto c = make_initial("half", lat, rng);
  std::stringstream ss;
  write_snapshot(ss, c);
  CHECK(read_snapshot(ss, lat) == c);
  std::stringstream bad("0 0 2\n");
  CHECK_THROWS_AS(read_snapshot(bad, lat), Error);
}
