#include "ips/forward.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ips/error.hpp"
#include "ips/literal.hpp"
#include "ips/parallel.hpp"

namespace ips {

GillespieEngine::GillespieEngine(const ModelSpec& m, LatticePtr lattice)
    : model_(m), lattice_(std::move(lattice)) {
  if (m.dim() != lattice_->dim()) throw Error(Errc::InvalidModel, "model and lattice dimensions differ");
  m.check_fits(*lattice_);
  nbr_ = lattice_->neighbor_table(m.window());
  if (m.tabulated()) table_ = m.rate_table();
  m_ = m.max_rate();
  zero_trap_ = m.eval([](std::size_t) { return 0; }) == 0;
  one_trap_ = m.eval([](std::size_t) { return 1; }) == 0;
}

double GillespieEngine::rate_at(std::size_t x, const Configuration& cfg) const {
  const std::size_t w = model_.window_size();
  const std::uint32_t* nb = nbr_.data() + x * w;
  if (!table_.empty()) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < w; ++i) mask |= std::uint64_t(cfg.get(nb[i])) << i;
    return table_[mask];
  }
  return model_.eval([&](std::size_t i) { return int(cfg.get(nb[i])); });
}

EvolveStats GillespieEngine::evolve(Configuration& cfg, double T, Rng& rng, const std::vector<double>& times,
                                    const Observer& obs, std::uint64_t budget) const {
  if (T < 0) throw Error(Errc::ConfigError, "negative time horizon");
  EvolveStats st;
  const std::size_t n = lattice_->size();
  std::size_t ones = cfg.count();
  std::size_t oi = 0;
  auto fire_until = [&](double t, bool inclusive) {
    while (oi < times.size() && (inclusive ? times[oi] <= t : times[oi] < t)) {
      if (obs) obs(oi, times[oi], cfg);
      ++oi;
    }
  };
  auto is_trapped = [&] { return (zero_trap_ && ones == 0) || (one_trap_ && ones == n); };
  if (is_trapped() || m_ == 0) {
    st.trapped = is_trapped();
    st.trap_time = 0;
    fire_until(T, true);
    return st;
  }
  const double total = m_ * double(n);
  double t = 0;
  while (true) {
    t += rng.exponential(total);
    if (t > T) break;
    fire_until(t, false);
    const std::size_t x = std::size_t(rng.below(n));
    const double c = rate_at(x, cfg);
    if (rng.uniform() * m_ < c) {
      ones += cfg.get(x) ? std::size_t(-1) : 1;
      cfg.flip(x);
      ++st.flips;
      if (is_trapped()) {
        st.trapped = true;
        st.trap_time = t;
        break;
      }
    }
    if (++st.candidates > budget) throw Error(Errc::BudgetExceeded, "forward simulation exceeded the event budget");
  }
  fire_until(T, true);
  return st;
}

Configuration evolve_gillespie(const ModelSpec& m, const Configuration& cfg0, double T, Rng& rng,
                               const std::vector<double>& times, const Observer& obs) {
  GillespieEngine eng(m, cfg0.lattice_ptr());
  Configuration cfg = cfg0;
  eng.evolve(cfg, T, rng, times, obs);
  return cfg;
}

EventLog::EventLog(const PerturbationView& view, LatticePtr lattice, std::uint64_t seed)
    : view_(view), lattice_(std::move(lattice)), seed_(seed) {
  if (view.model.dim() != lattice_->dim()) throw Error(Errc::InvalidModel, "model and lattice dimensions differ");
  view.model.check_fits(*lattice_);
  voter_rate_ = view.voter_rate();
  star_rate_ = view.star_rate();
  std::vector<Offset> koffs;
  std::vector<double> kw;
  for (const auto& e : view.kernel.entries()) {
    koffs.push_back(e.offset);
    kw.push_back(e.weight);
  }
  kernel_alias_ = AliasTable(kw);
  knbr_ = lattice_->neighbor_table(koffs);
  if (!view.z_probs.empty()) z_alias_ = AliasTable(view.z_probs);
  wnbr_ = lattice_->neighbor_table(view.model.window());
}

void EventLog::site_window(std::uint32_t site, std::uint64_t w, std::vector<GraphicalEvent>& out) const {
  const std::size_t first = out.size();
  const std::size_t k = view_.kernel.entries().size();
  if (voter_rate_ > 0) {
    Rng r = Rng::derive(seed_, Tag::Graphical, site, w, 0);
    const std::uint64_t n = r.poisson(voter_rate_);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double t = double(w) + r.uniform();
      const std::size_t j = kernel_alias_.sample(r);
      out.push_back({t, site, 0, knbr_[std::size_t(site) * k + j], 0.0});
    }
  }
  if (star_rate_ > 0 && !view_.z_probs.empty()) {
    Rng r = Rng::derive(seed_, Tag::Graphical, site, w, 1);
    const std::uint64_t n = r.poisson(star_rate_);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double t = double(w) + r.uniform();
      const std::uint32_t z = std::uint32_t(z_alias_.sample(r));
      out.push_back({t, site, 1, z, r.uniform()});
    }
  }
  std::sort(out.begin() + std::ptrdiff_t(first), out.end(),
            [](const GraphicalEvent& a, const GraphicalEvent& b) { return a.t < b.t || (a.t == b.t && a.kind < b.kind); });
}

void EventLog::window(std::uint64_t w, std::vector<GraphicalEvent>& out) const {
  out.clear();
  for (std::uint32_t x = 0; x < lattice_->size(); ++x) site_window(x, w, out);
  // ties (measure zero) broken by site index, then stream
  std::sort(out.begin(), out.end(), [](const GraphicalEvent& a, const GraphicalEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.site != b.site) return a.site < b.site;
    return a.kind < b.kind;
  });
}

GraphicalStats evolve_graphical(const EventLog& log, Configuration& cfg, double T, const std::vector<double>& times,
                                const Observer& obs) {
  if (T < 0) throw Error(Errc::ConfigError, "negative time horizon");
  GraphicalStats st;
  const auto& v = log.view();
  std::size_t oi = 0;
  std::vector<GraphicalEvent> ev;
  const std::uint64_t windows = std::uint64_t(std::ceil(T));
  for (std::uint64_t w = 0; w < windows; ++w) {
    log.window(w, ev);
    for (const auto& e : ev) {
      if (e.t > T) break;
      while (oi < times.size() && times[oi] < e.t) {
        if (obs) obs(oi, times[oi], cfg);
        ++oi;
      }
      if (e.kind == 0) {
        ++st.voter_events;
        const bool src = cfg.get(e.arg);
        if (cfg.get(e.site) != src) {
          cfg.set(e.site, src);
          ++st.flips;
        }
      } else {
        ++st.star_events;
        const int xi = cfg.get(e.site);
        const auto& tuple = v.z_tuples[e.arg];
        std::uint32_t idx = 0;
        for (std::size_t j = 0; j < tuple.size(); ++j)
          idx |= std::uint32_t(cfg.get(log.window_site(e.site, tuple[j]))) << j;
        if (e.u * v.cbar < v.g_eps[1 - xi][idx]) {
          cfg.flip(e.site);
          ++st.flips;
        }
      }
    }
  }
  while (oi < times.size() && times[oi] <= T) {
    if (obs) obs(oi, times[oi], cfg);
    ++oi;
  }
  return st;
}

Configuration evolve_graphical(const PerturbationView& view, const Configuration& cfg0, double T, std::uint64_t seed,
                               const std::vector<double>& times, const Observer& obs) {
  EventLog log(view, cfg0.lattice_ptr(), seed);
  Configuration cfg = cfg0;
  evolve_graphical(log, cfg, T, times, obs);
  return cfg;
}

WalkDualResult walk_dual(const EventLog& log, const std::vector<std::uint32_t>& sites, double t) {
  WalkDualResult res;
  std::vector<GraphicalEvent> ev;
  for (auto x : sites) {
    std::uint32_t pos = x;
    double s = t;
    bool clean = true;
    std::uint32_t jumps = 0;
    while (s > 0) {
      const std::uint64_t w = std::uint64_t(std::ceil(s)) - 1;
      ev.clear();
      log.site_window(pos, w, ev);
      // latest event strictly before s at the current site
      const GraphicalEvent* hit = nullptr;
      for (auto it = ev.rbegin(); it != ev.rend(); ++it)
        if (it->t < s) {
          hit = &*it;
          break;
        }
      if (!hit) {
        s = double(w);
        continue;
      }
      s = hit->t;
      if (hit->kind == 0) {
        pos = hit->arg;
        ++jumps;
      } else {
        clean = false;
      }
    }
    res.terminal.push_back(pos);
    res.star_clean.push_back(clean);
    res.jumps.push_back(jumps);
  }
  std::vector<std::uint32_t> seen;
  for (auto p : res.terminal) {
    auto it = std::find(seen.begin(), seen.end(), p);
    res.cluster.push_back(std::uint32_t(it - seen.begin()));
    if (it == seen.end()) seen.push_back(p);
  }
  return res;
}

HittingResult hitting_probabilities(const ModelSpec& m, const Configuration& cfg0, double horizon,
                                    std::uint64_t reps, std::uint64_t seed) {
  GillespieEngine eng(m, cfg0.lattice_ptr());
  const std::size_t n = cfg0.size();
  // state at H and at 2H: 0 absorbed at zeros, 1 at ones, 2 neither
  std::vector<std::array<std::uint8_t, 2>> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = Rng::derive(seed, Tag::Forward, r, 1);
    Configuration cfg = cfg0;
    auto cls = [n](const Configuration& c) -> std::uint8_t {
      const std::size_t k = c.count();
      return k == 0 ? 0 : (k == n ? 1 : 2);
    };
    eng.evolve(cfg, 2 * horizon, rng, {horizon, 2 * horizon},
               [&](std::size_t i, double, const Configuration& c) { out[r][i] = cls(c); });
  });
  HittingResult res;
  for (int h = 0; h < 2; ++h) {
    std::uint64_t c[3] = {0, 0, 0};
    for (const auto& o : out) ++c[o[std::size_t(h)]];
    HittingRow row{horizon * (h + 1), binomial_estimate(c[0], reps), binomial_estimate(c[1], reps), {}};
    // beta_inf as the complement so the three sum to one exactly
    row.beta_inf = {1.0 - row.beta0.mean - row.beta1.mean, binomial_estimate(c[2], reps).se};
    (h == 0 ? res.at_h : res.at_2h) = row;
  }
  auto moved = [](const Estimate& a, const Estimate& b) { return std::fabs(a.mean - b.mean) > 2 * joint_se(a, b); };
  res.horizon_sensitive = moved(res.at_h.beta0, res.at_2h.beta0) || moved(res.at_h.beta1, res.at_2h.beta1) ||
                          moved(res.at_h.beta_inf, res.at_2h.beta_inf);
  return res;
}

Configuration make_initial(const std::string& spec, LatticePtr lattice, Rng& rng) {
  const std::string s = trim(spec);
  Configuration c(lattice);
  if (s == "zeros") return c;
  if (s == "ones") return Configuration(lattice, true);
  if (s == "half") {
    for (std::size_t i = 0; i < c.size(); ++i) c.set(i, rng.bernoulli(0.5));
    return c;
  }
  if (s == "checker") {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Offset x = lattice->coords(i);
      int sum = 0;
      for (int k = 0; k < lattice->dim(); ++k) sum += x[k];
      c.set(i, sum % 2 == 0);
    }
    return c;
  }
  if (s == "single") {
    c.set(0, true);
    return c;
  }
  if (s == "halfspace") {
    for (std::size_t i = 0; i < c.size(); ++i) c.set(i, lattice->coords(i)[0] < lattice->sides()[0] / 2);
    return c;
  }
  if (s.rfind("file:", 0) == 0) {
    std::ifstream in(s.substr(5));
    if (!in) throw Error(Errc::IoError, "cannot open " + s.substr(5));
    return read_snapshot(in, lattice);
  }
  throw Error(Errc::ConfigError, "unknown initial condition '" + s + "'");
}

void write_snapshot(std::ostream& os, const Configuration& cfg) {
  const auto& lat = cfg.lattice();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Offset x = lat.coords(i);
    for (int k = 0; k < lat.dim(); ++k) os << x[k] << ' ';
    os << int(cfg.get(i)) << '\n';
  }
}

Configuration read_snapshot(std::istream& is, LatticePtr lattice) {
  Configuration c(lattice);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::istringstream ls(line);
    Offset x;
    for (int k = 0; k < lattice->dim(); ++k)
      if (!(ls >> x[k])) throw Error(Errc::ParseError, "snapshot line " + std::to_string(lineno) + ": bad coordinate");
    int bit = 0;
    if (!(ls >> bit) || (bit != 0 && bit != 1))
      throw Error(Errc::ParseError, "snapshot line " + std::to_string(lineno) + ": bad bit");
    c.set(lattice->index(x), bit == 1);
  }
  return c;
}

}  // namespace ips
