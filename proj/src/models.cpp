#include "ips/models.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <set>
#include <sstream>

#include "ips/error.hpp"
#include "ips/literal.hpp"

namespace ips {

// ------------------------------------------------------------ neighborhood

Neighborhood Neighborhood::make(std::vector<Offset> points, int dim) {
  if (points.empty()) throw Error(Errc::InvalidNeighborhood, "neighborhood is empty");
  std::set<Offset> s;
  for (const auto& p : points) {
    if (p.is_zero()) throw Error(Errc::InvalidNeighborhood, "neighborhood contains the origin");
    for (int i = dim; i < kMaxDim; ++i)
      if (p[i]) throw Error(Errc::InvalidNeighborhood, "offset dimension mismatch");
    s.insert(p);
  }
  for (const auto& p : s)
    if (!s.count(-p)) throw Error(Errc::InvalidNeighborhood, "neighborhood is not symmetric at " + p.str(dim));
  Neighborhood n;
  n.dim_ = dim;
  n.points_.assign(s.begin(), s.end());
  n.literal_ = "{";
  for (std::size_t i = 0; i < n.points_.size(); ++i) n.literal_ += (i ? "," : "") + n.points_[i].str(dim);
  n.literal_ += "}";
  return n;
}

Neighborhood Neighborhood::nearest_neighbor(int dim) {
  std::vector<Offset> p;
  for (int i = 0; i < dim; ++i) {
    p.push_back(Offset::unit(i, 1));
    p.push_back(Offset::unit(i, -1));
  }
  auto n = make(std::move(p), dim);
  n.literal_ = "nn(" + std::to_string(dim) + ")";
  return n;
}

Neighborhood Neighborhood::box(int L, int dim) {
  const Kernel k = Kernel::box(L, dim);
  auto n = make(k.offsets(), dim);
  n.literal_ = "box(" + std::to_string(L) + ",d=" + std::to_string(dim) + ")";
  return n;
}

Kernel Neighborhood::uniform_kernel() const {
  std::vector<KernelEntry> e;
  for (const auto& p : points_) e.push_back({p, 1.0 / double(points_.size())});
  return Kernel::make(std::move(e), dim_);
}

Neighborhood parse_neighborhood(std::string_view text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    if (t.back() != '}') throw Error(Errc::ParseError, "missing '}' in neighborhood");
    std::vector<Offset> pts;
    int dim = 0;
    for (const auto& item : split_top(std::string_view(t).substr(1, t.size() - 2), ',')) {
      if (item.empty()) continue;
      if (item.front() != '(' || item.back() != ')') throw Error(Errc::ParseError, "bad offset '" + item + "'");
      const auto parts = split_top(std::string_view(item).substr(1, item.size() - 2), ',');
      if (dim == 0) dim = int(parts.size());
      if (int(parts.size()) != dim || dim > kMaxDim) throw Error(Errc::ParseError, "bad offset '" + item + "'");
      Offset o;
      for (int i = 0; i < dim; ++i) o[i] = int(parse_int(parts[i], "offset"));
      pts.push_back(o);
    }
    return Neighborhood::make(std::move(pts), dim);
  }
  // Named forms share the kernel grammar.
  const auto c = parse_call(t);
  if (c.name == "nn") {
    const int d = int(parse_int(c.has("d") ? c.get("d", "") : c.positional.at(0), "d"));
    return Neighborhood::nearest_neighbor(d);
  }
  if (c.name == "box") {
    const Kernel k = parse_kernel(t);
    const int L = k.radius();
    return Neighborhood::box(L, k.dim());
  }
  throw Error(Errc::ParseError, "unknown neighborhood '" + t + "'");
}

// ------------------------------------------------------------------ model

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Voter: return "voter";
    case ModelKind::LV: return "lv";
    case ModelKind::AV: return "av";
    case ModelKind::GV: return "gv";
    case ModelKind::ThresholdVoter: return "tv";
    case ModelKind::Custom: return "custom";
  }
  return "?";
}

void ModelSpec::build_window() {
  window_.clear();
  window_.push_back(Offset{});
  auto index_of = [&](const Offset& z) -> std::uint32_t {
    for (std::size_t i = 0; i < window_.size(); ++i)
      if (window_[i] == z) return std::uint32_t(i);
    window_.push_back(z);
    return std::uint32_t(window_.size() - 1);
  };
  kernel_idx_.clear();
  kernel_w_.clear();
  nbhd_idx_.clear();
  if (kind_ == ModelKind::Voter || kind_ == ModelKind::LV || kind_ == ModelKind::AV) {
    for (const auto& e : kernel_.entries()) {
      kernel_idx_.push_back(index_of(e.offset));
      kernel_w_.push_back(e.weight);
    }
  }
  if (kind_ == ModelKind::AV || kind_ == ModelKind::GV || kind_ == ModelKind::ThresholdVoter) {
    for (const auto& p : nbhd_.points()) nbhd_idx_.push_back(index_of(p));
  }
}

ModelSpec ModelSpec::voter(Kernel k) {
  ModelSpec m;
  m.kind_ = ModelKind::Voter;
  m.dim_ = k.dim();
  m.kernel_ = std::move(k);
  m.build_window();
  m.literal_ = "voter(kernel=" + m.kernel_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::lv(double alpha, Kernel k) {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw Error(Errc::InvalidModel, "LV needs alpha >= 0");
  ModelSpec m;
  m.kind_ = ModelKind::LV;
  m.param_ = alpha;
  m.dim_ = k.dim();
  m.kernel_ = std::move(k);
  m.build_window();
  m.literal_ = "lv(alpha=" + fmt_double(alpha) + ", kernel=" + m.kernel_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::av(double alpha, Neighborhood n) {
  Kernel k = n.uniform_kernel();
  ModelSpec m = av(alpha, std::move(n), std::move(k));
  m.literal_ = "av(alpha=" + fmt_double(alpha) + ", nbhd=" + m.nbhd_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::av(double alpha, Neighborhood n, Kernel k) {
  if (!(alpha >= 0 && alpha <= 1)) throw Error(Errc::InvalidModel, "AV needs alpha in [0,1]");
  if (n.dim() != k.dim()) throw Error(Errc::InvalidModel, "neighborhood and kernel dimensions differ");
  ModelSpec m;
  m.kind_ = ModelKind::AV;
  m.param_ = alpha;
  m.dim_ = k.dim();
  m.kernel_ = std::move(k);
  m.nbhd_ = std::move(n);
  m.build_window();
  m.literal_ = "av(alpha=" + fmt_double(alpha) + ", nbhd=" + m.nbhd_.literal() +
               ", kernel=" + m.kernel_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::gv(double theta, Neighborhood n) {
  if (!(theta >= 0 && theta <= 1)) throw Error(Errc::InvalidModel, "GV needs theta in [0,1]");
  ModelSpec m;
  m.kind_ = ModelKind::GV;
  m.param_ = theta;
  m.dim_ = n.dim();
  m.kernel_ = n.uniform_kernel();
  m.nbhd_ = std::move(n);
  m.build_window();
  const std::size_t sz = m.nbhd_.size();
  m.gv_table_.resize(sz + 1);
  for (std::size_t j = 0; j <= sz; ++j) {
    if (theta == 1)
      m.gv_table_[j] = double(j) / double(sz);
    else
      m.gv_table_[j] = (1 - std::pow(theta, double(j))) / (1 - std::pow(theta, double(sz)));
  }
  m.literal_ = "gv(theta=" + fmt_double(theta) + ", nbhd=" + m.nbhd_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::threshold_voter(Neighborhood n) {
  ModelSpec m;
  m.kind_ = ModelKind::ThresholdVoter;
  m.dim_ = n.dim();
  m.nbhd_ = std::move(n);
  m.build_window();
  m.literal_ = "tv(nbhd=" + m.nbhd_.literal() + ")";
  return m;
}

ModelSpec ModelSpec::custom(std::vector<Offset> window, std::vector<double> table, int dim) {
  if (window.empty() || !window[0].is_zero())
    throw Error(Errc::InvalidModel, "custom window must start at the origin");
  if (window.size() > kMaxTableWindow)
    throw Error(Errc::WindowTooLarge, "custom window has " + std::to_string(window.size()) + " sites");
  std::set<Offset> seen(window.begin(), window.end());
  if (seen.size() != window.size()) throw Error(Errc::InvalidModel, "custom window repeats an offset");
  if (table.size() != (std::size_t(1) << window.size()))
    throw Error(Errc::InvalidModel, "custom table needs 2^|W| entries");
  for (double r : table)
    if (!(r >= 0) || !std::isfinite(r)) throw Error(Errc::InvalidModel, "custom rates must be finite and >= 0");
  ModelSpec m;
  m.kind_ = ModelKind::Custom;
  m.dim_ = dim;
  m.window_ = std::move(window);
  m.custom_table_ = std::move(table);
  m.literal_ = "custom(inline)";
  return m;
}

std::vector<double> ModelSpec::rate_table() const {
  if (!tabulated())
    throw Error(Errc::WindowTooLarge, "window has " + std::to_string(window_.size()) + " sites");
  if (kind_ == ModelKind::Custom) return custom_table_;
  const std::size_t n = std::size_t(1) << window_.size();
  std::vector<double> t(n);
  for (std::size_t m = 0; m < n; ++m) t[m] = rate_of_mask(m);
  return t;
}

double ModelSpec::max_rate() const {
  if (tabulated()) {
    const auto t = rate_table();
    return *std::max_element(t.begin(), t.end());
  }
  switch (kind_) {
    case ModelKind::LV:
      return param_ >= 0.5 ? param_ : 1.0 / (4.0 * (1.0 - param_));
    default:
      return 1.0;
  }
}

void ModelSpec::check_fits(const TorusLattice& lattice) const {
  if (lattice.dim() != dim_)
    throw Error(Errc::SupportTooLargeForTorus, "model dimension differs from lattice dimension");
  for (const auto& z : window_)
    for (int i = 0; i < dim_; ++i)
      if (2 * std::abs(z[i]) >= lattice.sides()[i])
        throw Error(Errc::SupportTooLargeForTorus,
                    "window offset " + z.str(dim_) + " does not fit side " + std::to_string(lattice.sides()[i]));
}

double flip_rate(const ModelSpec& m, std::size_t x, const Configuration& cfg) {
  const auto& lat = cfg.lattice();
  const Offset c = lat.coords(x);
  const auto& w = m.window();
  return m.eval([&](std::size_t i) { return int(cfg.get(lat.index(c + w[i]))); });
}

namespace {

ModelSpec load_custom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open custom model file '" + path + "'");
  std::vector<Offset> window;
  std::vector<double> table;
  int dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("window", 0) == 0) {
      for (const auto& item : split_top(std::string_view(t).substr(6), ';')) {
        const auto it = trim(item);
        if (it.empty()) continue;
        if (it.front() != '(' || it.back() != ')') throw Error(Errc::ParseError, "bad window offset '" + it + "'");
        const auto parts = split_top(std::string_view(it).substr(1, it.size() - 2), ',');
        if (dim == 0) dim = int(parts.size());
        Offset o;
        for (int i = 0; i < dim; ++i) o[i] = int(parse_int(parts.at(i), "offset"));
        window.push_back(o);
      }
      continue;
    }
    std::istringstream ss(t);
    std::string tok;
    while (ss >> tok) table.push_back(parse_double(tok, "rate"));
  }
  auto m = ModelSpec::custom(std::move(window), std::move(table), dim);
  return m;
}

}  // namespace

ModelSpec parse_model(std::string_view text) {
  const auto c = parse_call(text);
  auto kernel_or = [&](const char* fallback) { return parse_kernel(c.get("kernel", fallback)); };
  auto number = [&](const char* key) {
    if (c.has(key)) return parse_double(c.get(key, ""), key);
    if (!c.positional.empty()) return parse_double(c.positional[0], key);
    throw Error(Errc::ParseError, std::string("model '") + std::string(text) + "' needs " + key);
  };
  if (c.name == "voter" || c.name == "vm") return ModelSpec::voter(kernel_or("nn(2)"));
  if (c.name == "lv") return ModelSpec::lv(number("alpha"), kernel_or("nn(2)"));
  if (c.name == "av") {
    auto n = parse_neighborhood(c.get("nbhd", "nn(2)"));
    if (c.has("kernel")) return ModelSpec::av(number("alpha"), std::move(n), parse_kernel(c.get("kernel", "")));
    return ModelSpec::av(number("alpha"), std::move(n));
  }
  if (c.name == "gv") return ModelSpec::gv(number("theta"), parse_neighborhood(c.get("nbhd", "nn(2)")));
  if (c.name == "tv" || c.name == "threshold") return ModelSpec::threshold_voter(parse_neighborhood(c.get("nbhd", "nn(2)")));
  if (c.name == "custom") {
    if (!c.has("file")) throw Error(Errc::ParseError, "custom model needs file=PATH");
    auto m = load_custom(c.get("file", ""));
    m.set_literal("custom(file=" + c.get("file", "") + ")");
    return m;
  }
  throw Error(Errc::ParseError, "unknown model '" + std::string(text) + "'");
}

// ----------------------------------------------------------- perturbation

std::uint32_t PerturbationView::g_index(std::size_t tuple, std::uint64_t mask) const {
  std::uint32_t idx = 0;
  const auto& t = z_tuples[tuple];
  for (std::size_t k = 0; k < t.size(); ++k) idx |= std::uint32_t((mask >> t[k]) & 1u) << k;
  return idx;
}

double PerturbationView::h(int i, std::uint64_t mask, bool limit) const {
  double f1 = 0, f0 = 0;
  for (std::size_t k = 0; k < kernel_idx.size(); ++k) ((mask >> kernel_idx[k]) & 1u ? f1 : f0) += kernel_w[k];
  const double fi = i ? f1 : f0;
  double out = std::isinf(eps1) ? 0.0 : -fi / (eps1 * eps1);
  const auto& g = limit ? g_limit[i] : g_eps[i];
  for (std::size_t t = 0; t < z_tuples.size(); ++t) out += z_probs[t] * g[g_index(t, mask)];
  return out;
}

double PerturbationView::reconstruct(std::uint64_t mask) const {
  double f1 = 0, f0 = 0;
  for (std::size_t k = 0; k < kernel_idx.size(); ++k) ((mask >> kernel_idx[k]) & 1u ? f1 : f0) += kernel_w[k];
  const int x = int(mask & 1u);
  const double cvm = x ? f0 : f1;
  if (eps == 0) return cvm;
  return cvm + eps * eps * (x ? h(0, mask, false) : h(1, mask, false));
}

PerturbationView perturbation_view(const ModelSpec& m) {
  PerturbationView v;
  v.model = m;
  auto bind_kernel = [&](const Kernel& k) {
    v.kernel = k;
    v.kernel_idx.clear();
    v.kernel_w.clear();
    for (const auto& e : k.entries()) {
      const auto& w = m.window();
      const auto it = std::find(w.begin(), w.end(), e.offset);
      v.kernel_idx.push_back(std::uint32_t(it - w.begin()));
      v.kernel_w.push_back(e.weight);
    }
  };
  auto window_index = [&](const Offset& z) {
    const auto& w = m.window();
    return std::uint32_t(std::find(w.begin(), w.end(), z) - w.begin());
  };
  auto finish = [&] {
    double n1 = 0, n0 = 0;
    for (int i = 0; i < 2; ++i) {
      const auto& ge = v.g_eps[i];
      const auto& gl = v.g_limit[i];
      double mx = 0;
      for (double x : ge) mx = std::max(mx, x);
      for (double x : gl) mx = std::max(mx, x);
      (i ? n1 : n0) = mx;
    }
    v.cbar = n1 + n0 + 1;
  };

  switch (m.kind()) {
    case ModelKind::Voter: {
      bind_kernel(m.kernel());
      v.eps = 0;
      v.n0 = 0;
      v.cbar = 1;
      return v;
    }
    case ModelKind::LV: {
      if (m.alpha() > 1) throw Error(Errc::NotAPerturbation, "LV perturbation view needs alpha <= 1");
      bind_kernel(m.kernel());
      v.eps = std::sqrt(1 - m.alpha());
      v.eps1 = 1;
      v.n0 = 2;
      for (const auto& a : m.kernel().entries())
        for (const auto& b : m.kernel().entries()) {
          v.z_tuples.push_back({window_index(a.offset), window_index(b.offset)});
          v.z_probs.push_back(a.weight * b.weight);
        }
      // g_i(a, b) = 1{a = i, b = 1 - i}; bit 0 is a, bit 1 is b.
      for (int i = 0; i < 2; ++i) {
        v.g_eps[i].assign(4, 0.0);
        const std::uint32_t a = std::uint32_t(i), b = std::uint32_t(1 - i);
        v.g_eps[i][a | (b << 1)] = 1.0;
        v.g_limit[i] = v.g_eps[i];
      }
      finish();
      return v;
    }
    case ModelKind::AV: {
      bind_kernel(m.kernel());
      v.eps = std::sqrt(1 - m.alpha());
      v.eps1 = 1;
      std::vector<std::uint32_t> t;
      for (const auto& p : m.neighborhood().points()) t.push_back(window_index(p));
      v.n0 = t.size();
      if (v.n0 > kMaxTableWindow) throw Error(Errc::WindowTooLarge, "neighborhood too large for g tables");
      v.z_tuples.push_back(t);
      v.z_probs.push_back(1.0);
      const std::size_t n = std::size_t(1) << v.n0;
      const std::uint32_t full = std::uint32_t(n - 1);
      for (int i = 0; i < 2; ++i) {
        v.g_eps[i].assign(n, 0.0);
        for (std::uint32_t s = 0; s < n; ++s) v.g_eps[i][s] = i ? (s != 0) : (s != full);
        v.g_limit[i] = v.g_eps[i];
      }
      finish();
      return v;
    }
    case ModelKind::GV: {
      bind_kernel(m.kernel());
      const double theta = m.theta();
      v.eps = std::sqrt(1 - theta);
      v.eps1 = std::numeric_limits<double>::infinity();
      std::vector<std::uint32_t> t;
      for (const auto& p : m.neighborhood().points()) t.push_back(window_index(p));
      v.n0 = t.size();
      if (v.n0 > kMaxTableWindow) throw Error(Errc::WindowTooLarge, "neighborhood too large for g tables");
      v.z_tuples.push_back(t);
      v.z_probs.push_back(1.0);
      const double nn = double(v.n0);
      const std::size_t n = std::size_t(1) << v.n0;
      for (int i = 0; i < 2; ++i) {
        v.g_eps[i].assign(n, 0.0);
        v.g_limit[i].assign(n, 0.0);
        for (std::uint32_t s = 0; s < n; ++s) {
          const int ones = std::popcount(s);
          const double j = i ? double(ones) : nn - double(ones);
          v.g_limit[i][s] = j * (nn - j) / (2 * nn);
          if (v.eps == 0) {
            v.g_eps[i][s] = v.g_limit[i][s];
          } else {
            const double aj = (1 - std::pow(theta, j)) / (1 - std::pow(theta, nn));
            v.g_eps[i][s] = std::max(0.0, (aj - j / nn) / (v.eps * v.eps));
          }
        }
      }
      finish();
      // Distance of the exact rate from its leading-order expansion.
      if (m.tabulated()) {
        const std::size_t states = std::size_t(1) << m.window_size();
        for (std::uint64_t s = 0; s < states; ++s) {
          double f1 = 0, f0 = 0;
          for (std::size_t k = 0; k < v.kernel_idx.size(); ++k)
            ((s >> v.kernel_idx[k]) & 1u ? f1 : f0) += v.kernel_w[k];
          const double lead = ((s & 1u) ? f0 : f1) + v.eps * v.eps * nn / 2 * f0 * f1;
          v.residual_max = std::max(v.residual_max, std::fabs(m.rate_of_mask(s) - lead));
        }
      }
      return v;
    }
    case ModelKind::ThresholdVoter:
      throw Error(Errc::NotAPerturbation, "threshold voter model is not a voter model perturbation");
    case ModelKind::Custom:
      throw Error(Errc::NotAPerturbation, "custom model carries no perturbation decomposition");
  }
  return v;
}

}  // namespace ips
