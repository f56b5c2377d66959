#include "ips/cancellative.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>

#include "ips/error.hpp"
#include "ips/literal.hpp"

namespace ips {

namespace {
constexpr double kClamp = 1e-12;
}

double CancellativeSpec::total_mass() const {
  double s = 0;
  for (const auto& e : q0) s += e.weight;
  return s;
}

double CancellativeSpec::weight(const OffsetSet& set) const {
  auto it = std::lower_bound(q0.begin(), q0.end(), set,
                             [](const Entry& e, const OffsetSet& s) { return e.set < s; });
  return (it != q0.end() && it->set == set) ? it->weight : 0.0;
}

std::size_t CancellativeSpec::max_set_size() const {
  std::size_t m = 0;
  for (const auto& e : q0) m = std::max(m, e.set.size());
  return m;
}

void walsh_hadamard(std::vector<double>& v) {
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t i = 0; i < n; i += h << 1)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j], b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
}

int H(const Configuration& cfg, const SiteSet& A) {
  int h = 1;
  for (auto a : A)
    if (!cfg.get(a)) h = -h;
  return h;
}

CancellativeSpec extract_cancellative(const std::vector<Offset>& window, const std::vector<double>& table,
                                      int dim) {
  const std::size_t n = window.size();
  if (n > kMaxTableWindow) throw Error(Errc::WindowTooLarge, "window has " + std::to_string(n) + " sites");
  if (n == 0 || !window[0].is_zero()) throw Error(Errc::InvalidModel, "window must start at the origin");
  const std::size_t states = std::size_t(1) << n;
  if (table.size() != states) throw Error(Errc::InvalidModel, "rate table size does not match window");

  // b_A = 2^-n sum_xi (2 xi(0) - 1) c(xi) H(xi, A); H(xi, A) = (-1)^|A| (-1)^|xi & A|.
  std::vector<double> b(states);
  for (std::size_t s = 0; s < states; ++s) b[s] = (s & 1u) ? table[s] : -table[s];
  walsh_hadamard(b);
  const double scale = 1.0 / double(states);
  for (std::size_t A = 0; A < states; ++A) b[A] *= (std::popcount(A) & 1) ? -scale : scale;

  // sum_A b_A H(1, A) = c(1).
  double sum = 0;
  for (double x : b) sum += x;
  if (std::fabs(sum) > 1e-9) throw Error(Errc::OnesNotTrap, "c(x, 1) = " + fmt_double(sum));
  if (std::fabs(b[0]) > kClamp) throw Error(Errc::NotCancellative, "constant Walsh coefficient " + fmt_double(b[0]));

  CancellativeSpec spec;
  spec.dim = dim;
  spec.k0 = 2 * b[1];
  if (!(spec.k0 > kClamp)) throw Error(Errc::NotCancellative, "k0 = " + fmt_double(spec.k0) + " is not positive");
  for (std::size_t A = 2; A < states; ++A) {
    if (std::fabs(b[A]) <= kClamp) continue;
    OffsetSet set;
    for (std::size_t i = 0; i < n; ++i)
      if ((A >> i) & 1u) set.push_back(window[i]);
    std::sort(set.begin(), set.end());
    if (b[A] > 0)
      throw Error(Errc::NotCancellative, "positive coefficient " + fmt_double(b[A]) + " on " + set_literal(set, dim));
    spec.q0.push_back({std::move(set), -2 * b[A] / spec.k0});
  }
  std::sort(spec.q0.begin(), spec.q0.end(), [](const auto& x, const auto& y) { return x.set < y.set; });
  return spec;
}

CancellativeSpec extract_cancellative(const ModelSpec& m) {
  return extract_cancellative(m.window(), m.rate_table(), m.dim());
}

std::vector<double> reconstruct_table(const CancellativeSpec& s, const std::vector<Offset>& window) {
  const std::size_t n = window.size();
  if (n > kMaxTableWindow) throw Error(Errc::WindowTooLarge, "window too large");
  std::vector<std::uint64_t> masks;
  for (const auto& e : s.q0) {
    std::uint64_t m = 0;
    for (const auto& z : e.set) {
      const auto it = std::find(window.begin(), window.end(), z);
      if (it == window.end()) throw Error(Errc::InvalidModel, "set offset " + z.str(s.dim) + " outside window");
      m |= std::uint64_t(1) << (it - window.begin());
    }
    masks.push_back(m);
  }
  const std::size_t states = std::size_t(1) << n;
  std::vector<double> out(states);
  for (std::size_t xi = 0; xi < states; ++xi) {
    double sum = 0;
    for (std::size_t k = 0; k < masks.size(); ++k) sum += s.q0[k].weight * H_mask(xi, masks[k]);
    const double sign = (xi & 1u) ? 1.0 : -1.0;
    out[xi] = s.k0 / 2 * (1 - sign * sum);
  }
  return out;
}

CancellativeSpec lv_closed_form(double alpha, const Kernel& k) {
  if (!(alpha >= 0 && alpha <= 1)) throw Error(Errc::InvalidModel, "closed form needs alpha in [0,1]");
  CancellativeSpec s;
  s.dim = k.dim();
  s.k0 = alpha + (1 - alpha) * (1 - k.p2()) / 2;
  std::map<OffsetSet, double> q;
  if (alpha > 0)
    for (const auto& e : k.entries()) q[{e.offset}] += alpha / s.k0 * e.weight;
  if (alpha < 1) {
    const auto& en = k.entries();
    for (std::size_t i = 0; i < en.size(); ++i)
      for (std::size_t j = i + 1; j < en.size(); ++j) {
        OffsetSet set{Offset{}, en[i].offset, en[j].offset};
        std::sort(set.begin(), set.end());
        q[set] += (1 - alpha) / s.k0 * en[i].weight * en[j].weight;
      }
  }
  for (auto& [set, w] : q) s.q0.push_back({set, w});
  return s;
}

bool is_parity_preserving(const CancellativeSpec& s) {
  for (const auto& e : s.q0)
    if (e.weight > 0 && e.set.size() % 2 == 0) return false;
  return true;
}

EquivalenceReport check_trap_parity_symmetry_equivalence(const ModelSpec& m) {
  const auto table = m.rate_table();
  const std::size_t states = table.size();
  const std::size_t full = states - 1;
  EquivalenceReport r;
  r.zero_trap = table[0] == 0.0;
  r.symmetric = true;
  for (std::size_t s = 0; s < states && r.symmetric; ++s)
    if (table[s] != table[full ^ s]) r.symmetric = false;
  r.parity = is_parity_preserving(extract_cancellative(m.window(), table, m.dim()));
  if (r.zero_trap != r.parity || r.parity != r.symmetric)
    throw Error(Errc::EquivalenceViolated, "trap/parity/symmetry disagree for " + m.literal());
  return r;
}

DominationReport dual_kernel_domination(const CancellativeSpec& s, const Kernel& k, double R1) {
  DominationReport r;
  for (const auto& e : k.entries()) {
    double norm2 = 0;
    for (int i = 0; i < k.dim(); ++i) norm2 += double(e.offset[i]) * e.offset[i];
    if (std::sqrt(norm2) >= R1) continue;
    if (!(s.weight({e.offset}) > e.weight / (3 * s.k0))) {
      r.holds = false;
      r.failing.push_back(e.offset);
    }
  }
  return r;
}

double spec_distance(const CancellativeSpec& a, const CancellativeSpec& b) {
  double d = std::fabs(a.k0 - b.k0);
  for (const auto& e : a.q0) d = std::max(d, std::fabs(e.weight - b.weight(e.set)));
  for (const auto& e : b.q0) d = std::max(d, std::fabs(e.weight - a.weight(e.set)));
  return d;
}

std::string set_literal(const OffsetSet& set, int dim) {
  std::string s = "{";
  for (std::size_t i = 0; i < set.size(); ++i) s += (i ? " " : "") + set[i].str(dim);
  return s + "}";
}

void write_kernel_csv(std::ostream& os, const CancellativeSpec& s) {
  os << "# k0: " << fmt_double(s.k0) << "\n";
  os << "set,size,weight\n";
  for (const auto& e : s.q0) os << '"' << set_literal(e.set, s.dim) << "\"," << e.set.size() << ',' << fmt_double(e.weight) << "\n";
}

}  // namespace ips
