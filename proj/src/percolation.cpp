#include "ips/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "ips/error.hpp"
#include "ips/parallel.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

std::uint64_t field_key(std::uint64_t seed, std::uint64_t rep) {
  return hash_words({seed, std::uint64_t(Tag::Percolation), rep});
}

std::vector<std::uint8_t> parity_table(const TorusLattice& L) {
  std::vector<std::uint8_t> p(L.size());
  for (std::size_t s = 0; s < L.size(); ++s) {
    const Offset c = L.coords(s);
    int sum = 0;
    for (int i = 0; i < L.dim(); ++i) sum += c[i];
    p[s] = std::uint8_t(sum & 1);
  }
  return p;
}

// Generation-by-generation propagation with a stamp array reused across runs.
class FrontRunner {
 public:
  explicit FrontRunner(const TorusLattice& L) : L_(L), stamp_(L.size(), 0) {
    stride_.assign(L.dim(), 1);
    for (int i = L.dim() - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * std::size_t(L.sides()[i + 1]);
  }

  // cur holds W_n; fills next with W_{n+1}.
  template <class Open>
  void step(const std::vector<std::uint32_t>& cur, int n, int slab_axis, Open&& open,
            std::vector<std::uint32_t>& next, std::uint64_t& wraps) {
    next.clear();
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    const int a0 = slab_axis < 0 ? 0 : slab_axis;
    const int a1 = slab_axis < 0 ? L_.dim() : slab_axis + 1;
    for (const std::uint32_t x : cur) {
      if (!open(x, n)) continue;
      for (int a = a0; a < a1; ++a) {
        const std::size_t st = stride_[a];
        const std::size_t side = std::size_t(L_.sides()[a]);
        const std::size_t xa = (x / st) % side;
        const std::size_t up = xa + 1 == side ? x - (side - 1) * st : x + st;
        const std::size_t down = xa == 0 ? x + (side - 1) * st : x - st;
        // the seam of the origin-centred box sits between side/2 - 1 and side/2
        wraps += (xa + 1 == side / 2) + (xa == side / 2);
        visit(std::uint32_t(up), next);
        visit(std::uint32_t(down), next);
      }
    }
  }

 private:
  void visit(std::uint32_t y, std::vector<std::uint32_t>& next) {
    if (stamp_[y] != epoch_) {
      stamp_[y] = epoch_;
      next.push_back(y);
    }
  }

  const TorusLattice& L_;
  std::vector<std::size_t> stride_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

void check_density(double p) {
  if (!(p >= 0 && p <= 1)) throw Error(Errc::ConfigError, "open probability must lie in [0, 1]");
}

void check_params(const PercParams& p) {
  if (p.n_max < 0) throw Error(Errc::ConfigError, "generation count must be nonnegative");
  if (p.slab_axis >= int(p.width.size())) throw Error(Errc::ConfigError, "slab axis out of range");
  check_density(p.open_p);
}

int spread(const TorusLattice& L, const std::vector<std::uint32_t>& sites) {
  int m = 0;
  for (auto s : sites) {
    const Offset c = L.coords(s);
    for (int i = 0; i < L.dim(); ++i) m = std::max(m, std::min(c[i], L.sides()[i] - c[i]));
  }
  return m;
}

constexpr std::size_t kBlock = 64;

}  // namespace

PercField::PercField(LatticePtr space, int n_max, double open_p, std::uint64_t key)
    : space_(std::move(space)), n_max_(n_max), open_p_(open_p), key_(key) {
  check_density(open_p);
  if (n_max < 0) throw Error(Errc::ConfigError, "generation count must be nonnegative");
  parity_ = parity_table(*space_);
}

PercField PercField::from_bits(LatticePtr space, int n_max, std::vector<std::uint8_t> bits) {
  if (bits.size() != space->size() * std::size_t(n_max + 1))
    throw Error(Errc::ConfigError, "field bits have the wrong length");
  PercField f;
  f.space_ = std::move(space);
  f.n_max_ = n_max;
  f.parity_ = parity_table(*f.space_);
  std::uint64_t open = 0, total = 0;
  for (int n = 0; n <= n_max; ++n)
    for (std::size_t s = 0; s < f.space_->size(); ++s)
      if (f.on_lattice(s, n)) {
        ++total;
        open += bits[std::size_t(n) * f.space_->size() + s] != 0;
      }
  f.open_p_ = total ? double(open) / double(total) : 0;
  f.bits_ = std::move(bits);
  return f;
}

double PercField::uniform(std::size_t site, int n) const {
  return u01_from_bits(philox_word(key_, site, std::uint64_t(n)));
}

bool PercField::open(std::size_t site, int n) const {
  if (!on_lattice(site, n)) return false;
  if (!bits_.empty()) return bits_[std::size_t(n) * space_->size() + site] != 0;
  return uniform(site, n) < open_p_;
}

std::vector<std::uint8_t> PercField::materialize() const {
  std::vector<std::uint8_t> out(space_->size() * std::size_t(n_max_ + 1), 0);
  for (int n = 0; n <= n_max_; ++n)
    for (std::size_t s = 0; s < space_->size(); ++s) out[std::size_t(n) * space_->size() + s] = open(s, n);
  return out;
}

Estimate PercField::open_fraction() const {
  std::uint64_t open_count = 0, total = 0;
  for (int n = 0; n < n_max_; ++n)
    for (std::size_t s = 0; s < space_->size(); ++s)
      if (on_lattice(s, n)) {
        ++total;
        open_count += open(s, n);
      }
  return binomial_estimate(open_count, total);
}

PercField sample_field(std::vector<int> width, int n_max, double open_p, std::uint64_t seed, std::uint64_t rep) {
  return PercField(make_torus(std::move(width)), n_max, open_p, field_key(seed, rep));
}

Front front_evolve(const PercField& field, const std::vector<std::uint32_t>& W0, int m, int slab_axis) {
  const auto& L = field.space();
  if (m < 0 || m > field.n_max()) throw Error(Errc::ConfigError, "front length exceeds the field");
  if (slab_axis >= L.dim()) throw Error(Errc::ConfigError, "slab axis out of range");
  Front f;
  f.slab_axis = slab_axis;
  std::vector<std::uint32_t> cur;
  for (auto s : W0) {
    if (s >= L.size()) throw Error(Errc::ConfigError, "initial site outside the field");
    if (!field.on_lattice(s, 0)) throw Error(Errc::ConfigError, "initial site has odd parity");
    cur.push_back(s);
  }
  std::sort(cur.begin(), cur.end());
  cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
  FrontRunner run(L);
  f.gens.push_back(cur);
  std::vector<std::uint32_t> next;
  auto open = [&](std::uint32_t x, int n) { return field.open(x, n); };
  for (int n = 0; n < m; ++n) {
    run.step(cur, n, slab_axis, open, next, f.wrap_contacts);
    std::sort(next.begin(), next.end());
    f.gens.push_back(next);
    std::swap(cur, next);
  }
  return f;
}

PercSurvival survival_estimate(const PercParams& p, std::uint64_t reps, std::uint64_t seed) {
  return survival_sweep(p, {p.open_p}, reps, seed);
}

PercSurvival survival_sweep(const PercParams& p, std::vector<double> densities, std::uint64_t reps,
                              std::uint64_t seed) {
  check_params(p);
  for (double d : densities) check_density(d);
  std::sort(densities.begin(), densities.end());
  const auto space = make_torus(p.width);
  const auto parity = parity_table(*space);
  const std::size_t nd = densities.size();
  std::vector<std::uint8_t> alive(reps * nd, 0);
  std::vector<std::uint64_t> wraps(reps, 0);
  std::vector<int> spreads(reps, 0);
  const std::size_t blocks = (reps + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    FrontRunner run(*space);
    std::vector<std::uint32_t> cur, next;
    for (std::uint64_t r = b * kBlock; r < std::min<std::uint64_t>(reps, (b + 1) * kBlock); ++r) {
      const std::uint64_t key = field_key(seed, r);
      for (std::size_t i = 0; i < nd; ++i) {
        const double q = densities[i];
        auto open = [&](std::uint32_t x, int n) {
          return ((parity[x] + n) & 1) == 0 && u01_from_bits(philox_word(key, x, std::uint64_t(n))) < q;
        };
        cur.assign(1, 0);
        for (int n = 0; n < p.n_max && !cur.empty(); ++n) {
          run.step(cur, n, p.slab_axis, open, next, wraps[r]);
          std::swap(cur, next);
        }
        alive[r * nd + i] = !cur.empty();
        if (i + 1 == nd) spreads[r] = spread(*space, cur);
      }
    }
  });
  PercSurvival res;
  res.reps = reps;
  for (std::size_t i = 0; i < nd; ++i) {
    std::uint64_t a = 0;
    for (std::uint64_t r = 0; r < reps; ++r) a += alive[r * nd + i];
    res.rows.push_back({densities[i], a, binomial_estimate(a, reps)});
  }
  for (std::uint64_t r = 0; r < reps; ++r) {
    res.wrap_contacts += wraps[r];
    res.max_spread = std::max(res.max_spread, spreads[r]);
    for (std::size_t i = 0; i + 1 < nd; ++i) res.coupling_violations += alive[r * nd + i] > alive[r * nd + i + 1];
  }
  return res;
}

CoverageResult coverage_sweep(const PercParams& p, const std::vector<Offset>& A, const std::vector<std::size_t>& sizes,
                              int n, std::uint64_t reps, std::uint64_t seed) {
  check_params(p);
  if (n < 0) throw Error(Errc::ConfigError, "coverage time must be nonnegative");
  const auto space = make_torus(p.width);
  const int dim = space->dim();
  const auto parity = parity_table(*space);
  // position of each site in A; the first entry wins for duplicates
  std::vector<std::int64_t> pos_in_a(space->size(), -1);
  for (std::size_t j = 0; j < A.size(); ++j) {
    int sum = 0;
    for (int i = 0; i < dim; ++i) sum += A[j][i];
    if (sum & 1) throw Error(Errc::ConfigError, "target " + A[j].str(dim) + " is not in the even sublattice");
    const std::size_t s = space->index(A[j]);
    if (pos_in_a[s] < 0) pos_in_a[s] = std::int64_t(j);
  }
  for (auto k : sizes)
    if (k > A.size()) throw Error(Errc::ConfigError, "coverage size exceeds the target list");
  // per replicate: -2 dead, else index of the first target hit (A.size() if none)
  std::vector<std::int64_t> first_hit(reps, -2);
  std::vector<std::uint64_t> wraps(reps, 0);
  const std::size_t blocks = (reps + kBlock - 1) / kBlock;
  const int slab = -1;
  parallel_for(blocks, [&](std::size_t b) {
    FrontRunner run(*space);
    std::vector<std::uint32_t> cur, next;
    for (std::uint64_t r = b * kBlock; r < std::min<std::uint64_t>(reps, (b + 1) * kBlock); ++r) {
      const std::uint64_t key = field_key(seed, r);
      auto open = [&](std::uint32_t x, int m) {
        return ((parity[x] + m) & 1) == 0 && u01_from_bits(philox_word(key, x, std::uint64_t(m))) < p.open_p;
      };
      cur.assign(1, 0);
      for (int m = 0; m < 2 * n && !cur.empty(); ++m) {
        run.step(cur, m, slab, open, next, wraps[r]);
        std::swap(cur, next);
      }
      if (cur.empty()) continue;
      std::int64_t h = std::int64_t(A.size());
      for (auto s : cur)
        if (pos_in_a[s] >= 0) h = std::min(h, pos_in_a[s]);
      first_hit[r] = h;
    }
  });
  CoverageResult res;
  std::uint64_t alive = 0;
  for (auto h : first_hit) alive += h >= 0;
  res.survival = binomial_estimate(alive, reps);
  for (auto k : sizes) {
    std::uint64_t hits = 0;
    for (auto h : first_hit) hits += h >= std::int64_t(k);
    res.rows.push_back({k, binomial_estimate(hits, reps)});
  }
  for (auto w : wraps) res.wrap_contacts += w;
  return res;
}

Estimate coverage_probe(const PercParams& p, const std::vector<Offset>& A, int n, std::uint64_t reps,
                        std::uint64_t seed) {
  return coverage_sweep(p, A, {A.size()}, n, reps, seed).rows.front().p;
}

double block_delta(int K, int d) {
  if (K < 1 || d < 1) throw Error(Errc::ConfigError, "block parameters need K >= 1 and d >= 1");
  return std::pow(2.0 * K + 1, d + 1);
}

double dependent_to_iid_density(double gamma_prime, int K, int d) {
  if (!(gamma_prime > 0 && gamma_prime < 1)) throw Error(Errc::ConfigError, "gamma' must lie in (0, 1)");
  const double r = std::exp(std::log(gamma_prime) / block_delta(K, d));
  return (1 - r) * (1 - r);
}

double log_iid_threshold_gamma_prime(double target, int K, int d) {
  if (!(target > 0 && target < 1)) throw Error(Errc::ConfigError, "target density must lie in (0, 1)");
  return block_delta(K, d) * std::log1p(-std::sqrt(target));
}

double iid_threshold_gamma_prime(double target, int K, int d) {
  return std::exp(log_iid_threshold_gamma_prime(target, K, d));
}

}  // namespace ips
