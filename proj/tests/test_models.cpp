#include <cmath>

#include "doctest.h"
#include "gen.hpp"
#include "ips/error.hpp"
#include "ips/models.hpp"

using namespace ips;

namespace {

std::vector<ModelSpec> named_models() {
  return {ModelSpec::voter(Kernel::nearest_neighbor(2)),
          ModelSpec::lv(0.9, Kernel::nearest_neighbor(2)),
          ModelSpec::lv(0.5, Kernel::box(1, 2)),
          ModelSpec::av(0.9, Neighborhood::nearest_neighbor(2)),
          ModelSpec::av(0.7, Neighborhood::nearest_neighbor(3), Kernel::nearest_neighbor(3)),
          ModelSpec::gv(0.9, Neighborhood::nearest_neighbor(2)),
          ModelSpec::gv(0.5, Neighborhood::box(1, 2)),
          ModelSpec::gv(1.0, Neighborhood::nearest_neighbor(3))};
}

// f_1 at the origin from the window state, by looking each window offset up
// in the kernel.
double f1_of(const ModelSpec& m, const Kernel& k, std::uint64_t mask) {
  double f = 0;
  for (std::size_t i = 0; i < m.window_size(); ++i)
    if ((mask >> i) & 1u) f += k.weight(m.window()[i]);
  return f;
}

}  // namespace

TEST_CASE("LV at alpha = 1 is the voter model") {
  const auto lv = ModelSpec::lv(1.0, Kernel::nearest_neighbor(2));
  const auto vm = ModelSpec::voter(Kernel::nearest_neighbor(2));
  REQUIRE(lv.window_size() == 5);
  for (std::uint64_t s = 0; s < 32; ++s) CHECK(lv.rate_of_mask(s) == doctest::Approx(vm.rate_of_mask(s)).epsilon(1e-15));
}

TEST_CASE("LV rates follow the displayed formula") {
  const Kernel k = Kernel::box(1, 2);
  for (double alpha : {0.0, 0.3, 0.9, 1.7}) {
    const auto m = ModelSpec::lv(alpha, k);
    for (std::uint64_t s = 0; s < (1u << m.window_size()); ++s) {
      const double f1 = f1_of(m, k, s), f0 = 1 - f1;
      const double expect = (s & 1u) ? f0 * (f1 + alpha * f0) : f1 * (f0 + alpha * f1);
      CHECK(m.rate_of_mask(s) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("traps at all-zeros and all-ones") {
  for (const auto& m : named_models()) {
    const std::uint64_t full = (std::uint64_t(1) << m.window_size()) - 1;
    CHECK(m.rate_of_mask(0) == 0.0);
    CHECK(m.rate_of_mask(full) == 0.0);
  }
  auto lat = make_torus({8, 8});
  Configuration z(lat);
  for (const auto& m : named_models())
    if (m.dim() == 2)
      for (std::size_t x = 0; x < lat->size(); x += 7) CHECK(flip_rate(m, x, z) == 0.0);
}

TEST_CASE("GV with every neighbour disagreeing flips at rate 1") {
  for (double theta : {0.0, 0.1, 0.5, 0.9, 0.999, 1.0}) {
    const auto m = ModelSpec::gv(theta, Neighborhood::box(1, 2));
    // origin 0, all neighbours 1
    const std::uint64_t s = ((std::uint64_t(1) << m.window_size()) - 1) & ~std::uint64_t(1);
    CHECK(m.rate_of_mask(s) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("GV formula and its theta = 1 limit") {
  const auto n = Neighborhood::nearest_neighbor(2);
  const auto m = ModelSpec::gv(0.8, n);
  for (std::uint64_t s = 0; s < 32; ++s) {
    int j = 0;
    for (int i = 1; i < 5; ++i) j += int(((s >> i) & 1u) != (s & 1u));
    CHECK(m.rate_of_mask(s) == doctest::Approx((1 - std::pow(0.8, j)) / (1 - std::pow(0.8, 4))));
    CHECK(ModelSpec::gv(1.0, n).rate_of_mask(s) == doctest::Approx(j / 4.0));
  }
}

TEST_CASE("AV spot value") {
  const double alpha = 0.6;
  const auto m = ModelSpec::av(alpha, Neighborhood::nearest_neighbor(2), Kernel::nearest_neighbor(2));
  auto lat = make_torus({6, 6});
  Configuration c(lat);
  const std::size_t x = lat->index(Offset{2, 2});
  c.set(lat->translate(x, Offset{0, 1}), true);
  CHECK(flip_rate(m, x, c) == doctest::Approx(alpha * 0.25 + (1 - alpha)));
}

TEST_CASE("threshold voter") {
  const auto m = ModelSpec::threshold_voter(Neighborhood::nearest_neighbor(2));
  CHECK(m.rate_of_mask(0) == 0);
  CHECK(m.rate_of_mask(0b10) == 1);
  CHECK(m.rate_of_mask(0b11101) == 1);
  CHECK(m.rate_of_mask(0b11111) == 0);
}

TEST_CASE("symmetric models are exactly symmetric") {
  for (const auto& m : named_models()) {
    const std::uint64_t full = (std::uint64_t(1) << m.window_size()) - 1;
    for (std::uint64_t s = 0; s <= full; ++s) CHECK(m.rate_of_mask(s) == m.rate_of_mask(full ^ s));
  }
}

TEST_CASE("max rate is the table maximum") {
  for (const auto& m : named_models()) {
    double mx = 0;
    for (std::uint64_t s = 0; s < (std::uint64_t(1) << m.window_size()); ++s) mx = std::max(mx, m.rate_of_mask(s));
    CHECK(m.max_rate() == mx);
  }
  CHECK(ModelSpec::lv(0.95, Kernel::nearest_neighbor(2)).max_rate() == doctest::Approx(0.95));
  // |W| > 22 falls back to the analytic bound
  const auto big = ModelSpec::lv(0.2, Kernel::box(2, 2));
  CHECK(!big.tabulated());
  CHECK(big.max_rate() == doctest::Approx(1 / (4 * 0.8)));
  CHECK_THROWS_AS(big.rate_table(), Error);
}

TEST_CASE("rates ignore sites outside the window") {
  auto lat = make_torus({10, 10});
  auto r = gen::rng(11);
  for (const auto& m : named_models()) {
    if (m.dim() != 2) continue;
    for (int n = 0; n < 100; ++n) {
      auto c = gen::random_config(lat, r);
      const std::size_t x = r.below(lat->size());
      const double before = flip_rate(m, x, c);
      const std::size_t y = r.below(lat->size());
      bool inside = false;
      for (const auto& w : m.window()) inside |= lat->translate(x, w) == y;
      if (inside) continue;
      c.flip(y);
      CHECK(flip_rate(m, x, c) == before);
    }
  }
}

TEST_CASE("model literals") {
  const auto m = parse_model("lv(alpha=0.95, kernel=nn(2))");
  CHECK(m.kind() == ModelKind::LV);
  CHECK(m.alpha() == 0.95);
  CHECK(parse_model(m.literal()).rate_table() == m.rate_table());
  const auto g = parse_model("gv(theta=0.9, nbhd=box(1,d=3))");
  CHECK(g.neighborhood().size() == 26);
  CHECK(g.window_size() == 27);
  const auto a = parse_model("av(alpha=0.9, nbhd={(1,0,0),(-1,0,0)}, kernel=nn(3))");
  CHECK(a.neighborhood().size() == 2);
  CHECK(a.window_size() == 7);
  CHECK(parse_model(a.literal()).rate_table() == a.rate_table());
  CHECK_THROWS_AS(parse_model("zz(1)"), Error);
  CHECK_THROWS_AS(parse_model("av(alpha=0.9, nbhd={(1,0)})"), Error);
}

TEST_CASE("neighbourhood validation") {
  CHECK_THROWS_AS(Neighborhood::make({}, 2), Error);
  CHECK_THROWS_AS(Neighborhood::make({Offset{0, 0}, Offset{1, 0}, Offset{-1, 0}}, 2), Error);
  CHECK_THROWS_AS(Neighborhood::make({Offset{1, 0}}, 2), Error);
}

TEST_CASE("perturbation views reconstruct the rates") {
  for (const auto& m : named_models()) {
    const auto v = perturbation_view(m);
    for (std::uint64_t s = 0; s < (std::uint64_t(1) << m.window_size()); ++s)
      CHECK(v.reconstruct(s) == doctest::Approx(m.rate_of_mask(s)).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
      for (double g : v.g_eps[i]) CHECK(g >= 0);
  }
}

TEST_CASE("LV view: h_i = -f_i^2") {
  const Kernel k = Kernel::nearest_neighbor(3);
  const auto m = ModelSpec::lv(0.8, k);
  const auto v = perturbation_view(m);
  CHECK(v.eps == doctest::Approx(std::sqrt(0.2)));
  CHECK(v.voter_rate() == doctest::Approx(0.8));
  for (std::uint64_t s = 0; s < 128; ++s) {
    const double f1 = f1_of(m, k, s), f0 = 1 - f1;
    CHECK(v.h(1, s, true) == doctest::Approx(-f1 * f1));
    CHECK(v.h(0, s, true) == doctest::Approx(-f0 * f0));
  }
}

TEST_CASE("AV view matches its h") {
  const auto n = Neighborhood::nearest_neighbor(2);
  const auto m = ModelSpec::av(0.75, n);
  const auto v = perturbation_view(m);
  for (std::uint64_t s = 0; s < 32; ++s) {
    const double f1 = f1_of(m, m.kernel(), s);
    const bool any1 = (s >> 1) != 0, any0 = (s >> 1) != 0xF;
    CHECK(v.h(1, s, false) == doctest::Approx(-f1 + any1));
    CHECK(v.h(0, s, false) == doctest::Approx(-(1 - f1) + any0));
  }
}

TEST_CASE("GV view: leading order and residual") {
  const auto n = Neighborhood::nearest_neighbor(2);
  double prev = -1;
  for (double theta : {0.99, 0.999, 0.9999}) {
    const auto v = perturbation_view(ModelSpec::gv(theta, n));
    const double e4 = std::pow(1 - theta, 2);
    CHECK(v.residual_max > 0);
    if (prev > 0) CHECK(v.residual_max / e4 == doctest::Approx(prev).epsilon(0.05));
    prev = v.residual_max / e4;
    for (std::uint64_t s = 0; s < 32; ++s) {
      const double f1 = f1_of(v.model, v.kernel, s);
      CHECK(v.h(1, s, true) == doctest::Approx(2 * f1 * (1 - f1)));
    }
  }
}

TEST_CASE("degenerate and non-perturbation views") {
  const auto v = perturbation_view(ModelSpec::voter(Kernel::nearest_neighbor(2)));
  CHECK(v.eps == 0);
  CHECK(v.star_rate() == 0);
  CHECK(perturbation_view(ModelSpec::lv(1.0, Kernel::nearest_neighbor(2))).star_rate() == 0);
  CHECK_THROWS_AS(perturbation_view(ModelSpec::threshold_voter(Neighborhood::nearest_neighbor(2))), Error);
  CHECK_THROWS_AS(perturbation_view(ModelSpec::lv(1.5, Kernel::nearest_neighbor(2))), Error);
  std::vector<double> t(8, 0.0);
  t[1] = 1;
  CHECK_THROWS_AS(perturbation_view(ModelSpec::custom({Offset{}, Offset{1}, Offset{-1}}, t, 1)), Error);
}
