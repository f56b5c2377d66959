#include "ips/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>

#include "ips/error.hpp"
#include "ips/literal.hpp"

namespace ips {

int Offset::norm_inf() const {
  int m = 0;
  for (int x : v) m = std::max(m, std::abs(x));
  return m;
}

int Offset::norm1() const {
  int m = 0;
  for (int x : v) m += std::abs(x);
  return m;
}

std::string Offset::str(int dim) const {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

// ---------------------------------------------------------------- torus

TorusLattice::TorusLattice(std::vector<int> sides) { init(std::move(sides), 4, true); }

TorusLattice TorusLattice::small(std::vector<int> sides) {
  TorusLattice t;
  t.init(std::move(sides), 3, false);
  return t;
}

void TorusLattice::init(std::vector<int> sides, int min_side, bool require_even) {
  if (sides.empty() || int(sides.size()) > kMaxDim)
    throw Error(Errc::InvalidLattice, "dimension must be between 1 and " + std::to_string(kMaxDim));
  std::size_t n = 1;
  for (int s : sides) {
    if (s < min_side) throw Error(Errc::InvalidLattice, "side " + std::to_string(s) + " too small");
    if (require_even && s % 2) throw Error(Errc::InvalidLattice, "side " + std::to_string(s) + " is odd");
    n *= std::size_t(s);
  }
  if (n > (std::size_t(1) << 31)) throw Error(Errc::InvalidLattice, "lattice too large");
  sides_ = std::move(sides);
  size_ = n;
}

std::size_t TorusLattice::index(const Offset& c) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim(); ++i) {
    int x = c[i] % sides_[i];
    if (x < 0) x += sides_[i];
    idx = idx * std::size_t(sides_[i]) + std::size_t(x);
  }
  return idx;
}

Offset TorusLattice::coords(std::size_t site) const {
  Offset c;
  for (int i = dim() - 1; i >= 0; --i) {
    c[i] = int(site % std::size_t(sides_[i]));
    site /= std::size_t(sides_[i]);
  }
  return c;
}

std::vector<std::uint32_t> TorusLattice::neighbor_table(const std::vector<Offset>& offsets) const {
  const std::size_t k = offsets.size();
  std::vector<std::uint32_t> t(size_ * k);
  for (std::size_t s = 0; s < size_; ++s) {
    const Offset c = coords(s);
    for (std::size_t j = 0; j < k; ++j) t[s * k + j] = std::uint32_t(index(c + offsets[j]));
  }
  return t;
}

// -------------------------------------------------------- configuration

Configuration::Configuration(LatticePtr lattice, bool value) : lattice_(std::move(lattice)) {
  words_.assign((lattice_->size() + 63) / 64, 0);
  fill(value);
}

void Configuration::fill(bool b) {
  std::fill(words_.begin(), words_.end(), b ? ~std::uint64_t(0) : 0);
  mask_tail();
}

void Configuration::mask_tail() {
  const std::size_t r = size() & 63;
  if (r) words_.back() &= (std::uint64_t(1) << r) - 1;
}

std::size_t Configuration::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += std::size_t(std::popcount(w));
  return c;
}

bool Configuration::all_zero() const {
  for (auto w : words_)
    if (w) return false;
  return true;
}

Configuration Configuration::complement() const {
  Configuration c(*this);
  for (auto& w : c.words_) w = ~w;
  c.mask_tail();
  return c;
}

// ---------------------------------------------------------------- kernel

namespace {

// Rank and |det| of the integer lattice spanned by the rows, via integer
// row reduction (Euclid on columns).
bool generates_zd(std::vector<std::array<long long, kMaxDim>> rows, int dim) {
  int r = 0;
  for (int col = 0; col < dim; ++col) {
    for (;;) {
      int piv = -1;
      for (int i = r; i < int(rows.size()); ++i)
        if (rows[i][col] != 0 && (piv < 0 || std::llabs(rows[i][col]) < std::llabs(rows[piv][col])))
          piv = i;
      if (piv < 0) return false;
      std::swap(rows[r], rows[piv]);
      bool done = true;
      for (int i = r + 1; i < int(rows.size()); ++i) {
        if (rows[i][col] == 0) continue;
        const long long q = rows[i][col] / rows[r][col];
        for (int j = 0; j < dim; ++j) rows[i][j] -= q * rows[r][j];
        if (rows[i][col] != 0) done = false;
      }
      if (done) break;
    }
    if (std::llabs(rows[r][col]) != 1) return false;
    ++r;
  }
  return true;
}

}  // namespace

Kernel Kernel::make(std::vector<KernelEntry> entries, int dim) {
  if (dim < 1 || dim > kMaxDim) throw Error(Errc::InvalidLattice, "kernel dimension out of range");
  if (entries.empty()) throw Error(Errc::NotNormalized, "kernel has no entries");

  std::map<Offset, double> merged;
  for (const auto& e : entries) {
    for (int i = dim; i < kMaxDim; ++i)
      if (e.offset[i] != 0) throw Error(Errc::InvalidLattice, "offset has more coordinates than the kernel dimension");
    if (!(e.weight >= 0) || !std::isfinite(e.weight))
      throw Error(Errc::NotNormalized, "negative or non-finite weight at " + e.offset.str(dim));
    if (e.offset.is_zero()) {
      if (e.weight > 0) throw Error(Errc::ZeroOffsetMass, "p(0) must be 0");
      continue;
    }
    merged[e.offset] += e.weight;
  }
  for (auto it = merged.begin(); it != merged.end();)
    it = it->second == 0 ? merged.erase(it) : std::next(it);

  for (const auto& [z, w] : merged) {
    auto it = merged.find(-z);
    if (it == merged.end() || it->second != w)
      throw Error(Errc::AsymmetricKernel, "p" + z.str(dim) + " != p" + (-z).str(dim));
  }

  double total = 0;
  for (const auto& [z, w] : merged) total += w;
  if (std::fabs(total - 1.0) > 1e-12)
    throw Error(Errc::NotNormalized, "weights sum to " + fmt_double(total));

  double cov[kMaxDim][kMaxDim] = {};
  for (const auto& [z, w] : merged)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) cov[i][j] += double(z[i]) * double(z[j]) * w;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      if (i != j && std::fabs(cov[i][j]) > 1e-9)
        throw Error(Errc::Anisotropic, "off-diagonal covariance " + fmt_double(cov[i][j]));
      if (i == j && std::fabs(cov[i][i] - cov[0][0]) > 1e-9)
        throw Error(Errc::Anisotropic, "unequal diagonal covariance");
    }

  std::vector<std::array<long long, kMaxDim>> rows;
  for (const auto& [z, w] : merged) {
    std::array<long long, kMaxDim> r{};
    for (int i = 0; i < dim; ++i) r[i] = z[i];
    rows.push_back(r);
  }
  if (!generates_zd(rows, dim))
    throw Error(Errc::Reducible, "support does not generate Z^" + std::to_string(dim));

  Kernel k;
  k.dim_ = dim;
  for (const auto& [z, w] : merged) {
    k.entries_.push_back({z, w});
    k.radius_ = std::max(k.radius_, z.norm_inf());
  }
  k.sigma2_ = cov[0][0];
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < k.entries_.size(); ++i) {
    if (i) os << ", ";
    os << k.entries_[i].offset.str(dim) << ":" << fmt_double(k.entries_[i].weight);
  }
  os << "}";
  k.literal_ = os.str();
  return k;
}

Kernel Kernel::nearest_neighbor(int dim) {
  std::vector<KernelEntry> e;
  for (int i = 0; i < dim; ++i) {
    e.push_back({Offset::unit(i, 1), 0.5 / dim});
    e.push_back({Offset::unit(i, -1), 0.5 / dim});
  }
  Kernel k = make(std::move(e), dim);
  k.literal_ = "nn(" + std::to_string(dim) + ")";
  return k;
}

Kernel Kernel::box(int L, int dim) {
  if (L < 1) throw Error(Errc::InvalidLattice, "box radius must be >= 1");
  std::vector<Offset> pts;
  Offset z;
  for (int i = 0; i < dim; ++i) z[i] = -L;
  for (;;) {
    if (!z.is_zero()) pts.push_back(z);
    int i = dim - 1;
    while (i >= 0 && z[i] == L) z[i--] = -L;
    if (i < 0) break;
    ++z[i];
  }
  std::vector<KernelEntry> e;
  for (const auto& p : pts) e.push_back({p, 1.0 / double(pts.size())});
  Kernel k = make(std::move(e), dim);
  k.literal_ = "box(" + std::to_string(L) + ",d=" + std::to_string(dim) + ")";
  return k;
}

Kernel Kernel::exptail(double kappa, int dim, int radius) {
  if (!(kappa > 0)) throw Error(Errc::InvalidLattice, "exptail needs kappa > 0");
  const double r = std::exp(-kappa);
  const double z_full = (1 + r) / (1 - r);
  auto discarded_for = [&](int R) {
    double z_trunc = 1;
    for (int k = 1; k <= R; ++k) z_trunc += 2 * std::pow(r, k);
    const double full = std::pow(z_full, dim) - 1;
    const double kept = std::pow(z_trunc, dim) - 1;
    return 1 - kept / full;
  };
  if (radius < 0) {
    radius = 1;
    while (discarded_for(radius) >= 1e-7) ++radius;
  }
  if (radius < 1) throw Error(Errc::InvalidLattice, "exptail radius must be >= 1");

  std::vector<KernelEntry> e;
  Offset z;
  for (int i = 0; i < dim; ++i) z[i] = -radius;
  double total = 0;
  for (;;) {
    if (!z.is_zero()) {
      const double w = std::pow(r, z.norm1());
      e.push_back({z, w});
      total += w;
    }
    int i = dim - 1;
    while (i >= 0 && z[i] == radius) z[i--] = -radius;
    if (i < 0) break;
    ++z[i];
  }
  for (auto& x : e) x.weight /= total;
  // Pair up +z and -z so the symmetry check sees bit-identical weights.
  for (auto& x : e) {
    for (auto& y : e)
      if (y.offset == -x.offset) y.weight = x.weight;
  }
  double s = 0;
  for (auto& x : e) s += x.weight;
  for (auto& x : e) x.weight /= s;
  Kernel k = make(std::move(e), dim);
  k.discarded_ = discarded_for(radius);
  k.literal_ = "exptail(kappa=" + fmt_double(kappa) + ",d=" + std::to_string(dim) +
               ",radius=" + std::to_string(radius) + ")";
  return k;
}

std::vector<Offset> Kernel::offsets() const {
  std::vector<Offset> o;
  for (const auto& e : entries_) o.push_back(e.offset);
  return o;
}

std::vector<double> Kernel::weights() const {
  std::vector<double> w;
  for (const auto& e : entries_) w.push_back(e.weight);
  return w;
}

double Kernel::weight(const Offset& z) const {
  for (const auto& e : entries_)
    if (e.offset == z) return e.weight;
  return 0;
}

double Kernel::p2() const {
  double s = 0;
  for (const auto& e : entries_) s += e.weight * e.weight;
  return s;
}

void Kernel::check_fits(const TorusLattice& lattice) const {
  if (lattice.dim() != dim_)
    throw Error(Errc::SupportTooLargeForTorus, "kernel dimension differs from lattice dimension");
  for (const auto& e : entries_)
    for (int i = 0; i < dim_; ++i)
      if (2 * std::abs(e.offset[i]) >= lattice.sides()[i])
        throw Error(Errc::SupportTooLargeForTorus,
                    "offset " + e.offset.str(dim_) + " does not fit side " + std::to_string(lattice.sides()[i]));
}

namespace {

Offset parse_offset(std::string_view s, int& dim) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')')
    throw Error(Errc::ParseError, "bad offset '" + t + "'");
  const auto parts = split_top(std::string_view(t).substr(1, t.size() - 2), ',');
  if (parts.empty() || int(parts.size()) > kMaxDim) throw Error(Errc::ParseError, "bad offset '" + t + "'");
  if (dim == 0) dim = int(parts.size());
  if (int(parts.size()) != dim) throw Error(Errc::ParseError, "offsets of mixed dimension");
  Offset o;
  for (int i = 0; i < dim; ++i) o[i] = int(parse_int(parts[i], "offset coordinate"));
  return o;
}

}  // namespace

Kernel parse_kernel(std::string_view text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    if (t.back() != '}') throw Error(Errc::ParseError, "missing '}' in kernel literal");
    int dim = 0;
    std::vector<KernelEntry> e;
    for (const auto& item : split_top(std::string_view(t).substr(1, t.size() - 2), ',')) {
      if (item.empty()) continue;
      const auto kv = split_top(item, ':');
      if (kv.size() != 2) throw Error(Errc::ParseError, "bad kernel entry '" + item + "'");
      Offset o = parse_offset(kv[0], dim);
      e.push_back({o, parse_double(kv[1], "kernel weight")});
    }
    return Kernel::make(std::move(e), dim);
  }
  const auto c = parse_call(t);
  auto dim_arg = [&](std::size_t pos) {
    if (c.has("d")) return int(parse_int(c.get("d", ""), "d"));
    if (c.positional.size() > pos) return int(parse_int(c.positional[pos], "d"));
    throw Error(Errc::ParseError, "kernel '" + t + "' needs a dimension");
  };
  if (c.name == "nn") return Kernel::nearest_neighbor(dim_arg(0));
  if (c.name == "box") {
    const int L = c.has("l") ? int(parse_int(c.get("l", ""), "L"))
                             : int(parse_int(c.positional.at(0), "L"));
    return Kernel::box(L, dim_arg(c.has("l") ? 0 : 1));
  }
  if (c.name == "exptail") {
    const double kappa = parse_double(c.has("kappa") ? c.get("kappa", "") : c.positional.at(0), "kappa");
    const int radius = c.has("radius") ? int(parse_int(c.get("radius", ""), "radius")) : -1;
    return Kernel::exptail(kappa, dim_arg(c.has("kappa") ? 0 : 1), radius);
  }
  throw Error(Errc::ParseError, "unknown kernel '" + t + "'");
}

// --------------------------------------------------------------- sitesets

SiteSet::SiteSet(std::vector<std::uint32_t> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  parity_ = int(sites_.size() & 1);
}

bool SiteSet::contains(std::uint32_t s) const {
  return std::binary_search(sites_.begin(), sites_.end(), s);
}

bool SiteSet::insert(std::uint32_t s) {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
  if (it != sites_.end() && *it == s) return false;
  sites_.insert(it, s);
  parity_ ^= 1;
  return true;
}

bool SiteSet::erase(std::uint32_t s) {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
  if (it == sites_.end() || *it != s) return false;
  sites_.erase(it);
  parity_ ^= 1;
  return true;
}

void SiteSet::toggle(std::uint32_t s) {
  if (!erase(s)) insert(s);
}

// -------------------------------------------------------------- densities

double local_density(const Configuration& cfg, std::size_t x, const Kernel& k, int i) {
  const auto& lat = cfg.lattice();
  const Offset c = lat.coords(x);
  double f1 = 0;
  for (const auto& e : k.entries())
    if (cfg.get(lat.index(c + e.offset))) f1 += e.weight;
  return i == 1 ? f1 : 1.0 - f1;
}

SiteSet pair_set(const Configuration& cfg, const SiteSet& A, const Offset& x0) {
  if (x0.is_zero()) throw Error(Errc::ZeroOffset, "pair offset must be nonzero");
  const auto& lat = cfg.lattice();
  std::vector<std::uint32_t> out;
  for (auto y : A)
    if (cfg.get(y) && !cfg.get(lat.translate(y, x0))) out.push_back(y);
  return SiteSet(std::move(out));
}

std::size_t count_pairs(const Configuration& cfg, const Offset& x0) {
  if (x0.is_zero()) throw Error(Errc::ZeroOffset, "pair offset must be nonzero");
  const auto& lat = cfg.lattice();
  std::size_t n = 0;
  for (std::size_t y = 0; y < lat.size(); ++y)
    if (cfg.get(y) && !cfg.get(lat.translate(y, x0))) ++n;
  return n;
}

}  // namespace ips
