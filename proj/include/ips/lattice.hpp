#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ips {

constexpr int kMaxDim = 4;

/// Integer displacement in Z^d; unused trailing coordinates stay zero.
struct Offset {
  std::array<int, kMaxDim> v{};

  Offset() = default;
  Offset(std::initializer_list<int> c) {
    int i = 0;
    for (int x : c) v[i++] = x;
  }
  static Offset unit(int axis, int sign = 1) {
    Offset o;
    o.v[axis] = sign;
    return o;
  }

  int& operator[](int i) { return v[i]; }
  int operator[](int i) const { return v[i]; }
  bool is_zero() const {
    for (int x : v)
      if (x) return false;
    return true;
  }
  int norm_inf() const;
  int norm1() const;

  friend Offset operator+(const Offset& a, const Offset& b) {
    Offset r;
    for (int i = 0; i < kMaxDim; ++i) r.v[i] = a.v[i] + b.v[i];
    return r;
  }
  friend Offset operator-(const Offset& a, const Offset& b) {
    Offset r;
    for (int i = 0; i < kMaxDim; ++i) r.v[i] = a.v[i] - b.v[i];
    return r;
  }
  Offset operator-() const {
    Offset r;
    for (int i = 0; i < kMaxDim; ++i) r.v[i] = -v[i];
    return r;
  }
  friend bool operator==(const Offset&, const Offset&) = default;
  friend auto operator<=>(const Offset&, const Offset&) = default;

  std::string str(int dim) const;
};

/// Periodic box with row-major site indexing: the last coordinate varies
/// fastest, so site = ((x0 * s1 + x1) * s2 + x2) ...
class TorusLattice {
 public:
  // Sides must be even and at least 4.
  explicit TorusLattice(std::vector<int> sides);
  // Tiny tori for exact enumeration; any side >= 3.
  static TorusLattice small(std::vector<int> sides);

  int dim() const { return int(sides_.size()); }
  const std::vector<int>& sides() const { return sides_; }
  std::size_t size() const { return size_; }

  std::size_t index(const Offset& coords) const;
  Offset coords(std::size_t site) const;
  std::size_t translate(std::size_t site, const Offset& z) const {
    return index(coords(site) + z);
  }
  // Row s holds translate(s, offsets[j]) at position s * offsets.size() + j.
  std::vector<std::uint32_t> neighbor_table(const std::vector<Offset>& offsets) const;

  bool operator==(const TorusLattice& o) const { return sides_ == o.sides_; }

 private:
  TorusLattice() = default;
  void init(std::vector<int> sides, int min_side, bool require_even);

  std::vector<int> sides_;
  std::size_t size_ = 0;
};

using LatticePtr = std::shared_ptr<const TorusLattice>;

inline LatticePtr make_torus(std::vector<int> sides) {
  return std::make_shared<const TorusLattice>(std::move(sides));
}
inline LatticePtr make_small_torus(std::vector<int> sides) {
  return std::make_shared<const TorusLattice>(TorusLattice::small(std::move(sides)));
}

/// One bit per site.
class Configuration {
 public:
  explicit Configuration(LatticePtr lattice, bool value = false);

  const LatticePtr& lattice_ptr() const { return lattice_; }
  const TorusLattice& lattice() const { return *lattice_; }
  std::size_t size() const { return lattice_->size(); }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  int operator[](std::size_t i) const { return int(get(i)); }
  void set(std::size_t i, bool b) {
    const std::uint64_t m = std::uint64_t(1) << (i & 63);
    if (b)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t(1) << (i & 63); }
  void fill(bool b);

  std::size_t count() const;
  std::size_t count_zeros() const { return size() - count(); }
  bool all_zero() const;
  bool all_one() const { return count() == size(); }
  Configuration complement() const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  bool operator==(const Configuration& o) const {
    return *lattice_ == *o.lattice_ && words_ == o.words_;
  }

 private:
  void mask_tail();

  LatticePtr lattice_;
  std::vector<std::uint64_t> words_;
};

struct KernelEntry {
  Offset offset;
  double weight = 0;
};

/// Symmetric, isotropic, irreducible probability kernel with p(0) = 0.
class Kernel {
 public:
  static Kernel make(std::vector<KernelEntry> entries, int dim);

  static Kernel nearest_neighbor(int dim);
  // Uniform on the box [-L, L]^d minus the origin.
  static Kernel box(int L, int dim);
  // p(z) proportional to exp(-kappa |z|_1), truncated to |z|_inf <= radius.
  // radius < 0 picks the smallest radius with discarded mass below 1e-7.
  static Kernel exptail(double kappa, int dim, int radius = -1);

  int dim() const { return dim_; }
  const std::vector<KernelEntry>& entries() const { return entries_; }
  std::vector<Offset> offsets() const;
  std::vector<double> weights() const;
  double weight(const Offset& z) const;
  double sigma2() const { return sigma2_; }
  int radius() const { return radius_; }
  // p^(2)(0) = sum_x p(x)^2
  double p2() const;
  double discarded_mass() const { return discarded_; }

  void check_fits(const TorusLattice& lattice) const;
  std::string literal() const { return literal_; }

 private:
  int dim_ = 0;
  std::vector<KernelEntry> entries_;
  double sigma2_ = 0;
  int radius_ = 0;
  double discarded_ = 0;
  std::string literal_;
};

Kernel parse_kernel(std::string_view text);

/// Sorted set of site indices with a parity flag.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<std::uint32_t> sites);

  bool contains(std::uint32_t s) const;
  bool insert(std::uint32_t s);
  bool erase(std::uint32_t s);
  void toggle(std::uint32_t s);

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  int parity() const { return parity_; }
  const std::vector<std::uint32_t>& sites() const { return sites_; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }

  bool operator==(const SiteSet& o) const { return sites_ == o.sites_; }

 private:
  std::vector<std::uint32_t> sites_;
  int parity_ = 0;
};

// f_i(x, xi) = sum_y p(y - x) 1{xi(y) = i}. f_0 is formed as 1 - f_1 so the
// two always sum to exactly one.
double local_density(const Configuration& cfg, std::size_t x, const Kernel& k, int i);

// {y in A : xi(y) = 1, xi(y + x0) = 0}
SiteSet pair_set(const Configuration& cfg, const SiteSet& A, const Offset& x0);

// Number of sites with xi(y) = 1 and xi(y + x0) = 0.
std::size_t count_pairs(const Configuration& cfg, const Offset& x0);

}  // namespace ips
