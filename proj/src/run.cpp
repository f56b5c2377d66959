#include "ips/run.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "ips/cancellative.hpp"
#include "ips/dual.hpp"
#include "ips/error.hpp"
#include "ips/exact.hpp"
#include "ips/experiments.hpp"
#include "ips/forward.hpp"
#include "ips/literal.hpp"
#include "ips/models.hpp"
#include "ips/parallel.hpp"
#include "ips/percolation.hpp"
#include "ips/reaction.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

Offset parse_offset(std::string_view text, int dim) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')')
    throw Error(Errc::ConfigError, "site '" + t + "' is not of the form (x1,...,xd)");
  const auto parts = split_top(t.substr(1, t.size() - 2), ',');
  if (int(parts.size()) != dim)
    throw Error(Errc::ConfigError, "site '" + t + "' has " + std::to_string(parts.size()) + " coordinates, lattice has " +
                                       std::to_string(dim));
  Offset o;
  for (int k = 0; k < dim; ++k) o[k] = int(parse_int(parts[std::size_t(k)], "coordinate"));
  return o;
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

LatticePtr config_torus(const ExperimentConfig& c) { return make_torus(c.lattice); }

std::vector<std::size_t> as_sizes(const std::vector<double>& v) {
  std::vector<std::size_t> out;
  for (double x : v) {
    if (x < 0 || x != std::floor(x)) throw Error(Errc::ConfigError, "ks entries must be nonnegative integers");
    out.push_back(std::size_t(x));
  }
  return out;
}

double horizon(const ExperimentConfig& c) {
  if (c.times.empty()) throw Error(Errc::ConfigError, "times is empty");
  return *std::max_element(c.times.begin(), c.times.end());
}

ResultTable run_evolve(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  const GillespieEngine engine(m, lat);
  auto times = c.times;
  sort_unique(times);
  const double T = horizon(c);
  const std::size_t nt = times.size();
  std::vector<double> dens(c.reps * nt, 0.0);
  parallel_for(c.reps, [&](std::size_t r) {
    auto irng = Rng::derive(c.seed, Tag::Init, r);
    auto rng = Rng::derive(c.seed, Tag::Forward, r);
    Configuration cfg = make_initial(c.init, lat, irng);
    engine.evolve(cfg, T, rng, times, [&](std::size_t i, double t, const Configuration& x) {
      dens[r * nt + i] = double(x.count()) / double(x.size());
      if (r == 0 && !c.snap_prefix.empty()) {
        const std::string path = c.snap_prefix + "_t" + fmt_double(t) + ".txt";
        std::ofstream f(path);
        if (!f) throw Error(Errc::IoError, "cannot write snapshot '" + path + "'");
        write_snapshot(f, x);
      }
    });
  });
  ResultTable tab;
  tab.add_column("t", "time");
  tab.add_stat("density", "fraction");
  tab.add_column("reps");
  for (std::size_t i = 0; i < nt; ++i) {
    Welford w;
    for (std::uint64_t r = 0; r < c.reps; ++r) w.add(dens[r * nt + i]);
    tab.add(Cells() << times[i] << w.estimate() << c.reps);
  }
  return tab;
}

ResultTable run_dual_cmd(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  const auto spec = extract_cancellative(m);
  const DualKernel kernel(spec, lat);
  auto times = c.times;
  sort_unique(times);
  const auto res = dual_survival(kernel, parse_target(c.target, *lat), times, c.reps, c.seed);
  ResultTable tab;
  tab.add_column("t", "time");
  tab.add_column("n_alive");
  tab.add_column("n_total");
  tab.add_stat("p_hat", "probability", "stderr");
  for (const auto& r : res.rows) tab.add(Cells() << r.t << r.n_alive << r.n_total << r.p);
  tab.set_meta("k0", fmt_double(kernel.k0()));
  tab.set_meta("parity_violations", std::to_string(res.parity_violations));
  tab.set_meta("max_size", std::to_string(res.max_size));
  tab.set_meta("monotone", res.monotone ? "true" : "false");
  return tab;
}

ResultTable run_cancellative(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto spec = extract_cancellative(m);
  ResultTable tab;
  tab.add_column("set");
  tab.add_column("size");
  tab.add_column("weight", "probability");
  for (const auto& e : spec.q0) tab.add(Cells() << set_literal(e.set, spec.dim) << e.set.size() << e.weight);
  tab.set_meta("k0", fmt_double(spec.k0));
  tab.set_meta("parity_preserving", is_parity_preserving(spec) ? "true" : "false");
  const auto eq = check_trap_parity_symmetry_equivalence(m);
  tab.set_meta("zero_trap", eq.zero_trap ? "true" : "false");
  tab.set_meta("symmetric", eq.symmetric ? "true" : "false");
  return tab;
}

ResultTable run_reaction(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto view = perturbation_view(m);
  // the configured lattice is used when its dimension matches the model
  LatticePtr torus = int(c.lattice.size()) == m.dim() ? config_torus(c) : default_walk_torus(m.dim());
  ResultTable tab;
  if (c.probe == "fprime") {
    const auto fp = fprime_zero(view, c.reps, c.tmax, c.seed, torus);
    tab.add_stat("fprime_hat", "", "stderr");
    tab.add_stat("closed_form");
    tab.add(Cells() << fp.estimate << fp.closed);
    tab.set_meta("closed_available", fp.closed_available ? "true" : "false");
    for (std::size_t k = 0; k < fp.a_dist.size(); ++k)
      tab.set_meta("p_A_" + std::to_string(k), fmt_double(fp.a_dist[k].mean) + " +- " + fmt_double(fp.a_dist[k].se));
    return tab;
  }
  if (!c.probe.empty()) throw Error(Errc::ConfigError, "reaction probe must be empty or 'fprime', got '" + c.probe + "'");
  const auto curve = estimate_f(view, c.u_grid, c.reps, c.tmax, c.seed, torus);
  tab.add_column("u");
  tab.add_stat("f_hat", "rate", "stderr");
  tab.add_stat("closed_form", "rate");
  tab.add_stat("f_partition", "rate");
  for (const auto& r : curve.rows) tab.add(Cells() << r.u << r.f_hat << r.closed << r.f_partition);
  tab.set_meta("torus", [&] {
    std::string s;
    for (int side : torus->sides()) s += (s.empty() ? "" : "x") + std::to_string(side);
    return s;
  }());
  tab.set_meta("closed_available", curve.closed_available ? "true" : "false");
  tab.set_meta("equilibrium", curve.equilibrium ? "true" : "false");
  tab.set_meta("cubic_coef", fmt_double(curve.cubic_coef.mean) + " +- " + fmt_double(curve.cubic_coef.se));
  if (m.kind() == ModelKind::LV) {
    tab.set_meta("p3_fit", fmt_double(curve.p3_fit.mean) + " +- " + fmt_double(curve.p3_fit.se));
    tab.set_meta("p3_triple", fmt_double(curve.p3_triple.mean) + " +- " + fmt_double(curve.p3_triple.se));
  }
  tab.set_meta("wrap_meetings", std::to_string(curve.wrap_meetings));
  tab.set_meta("late_rate", fmt_double(curve.late_rate));
  return tab;
}

ResultTable run_perc(const ExperimentConfig& c) {
  PercParams p;
  if (c.dim < 1 || c.dim > 4) throw Error(Errc::ConfigError, "perc dim must be 1..4");
  p.width.assign(std::size_t(c.dim), c.width);
  p.n_max = c.n;
  if (c.mode == "full") p.slab_axis = -1;
  else if (c.mode.rfind("slab", 0) == 0) p.slab_axis = int(parse_int(c.mode.substr(4), "slab axis")) - 1;
  else throw Error(Errc::ConfigError, "mode must be slabK or full, got '" + c.mode + "'");
  if (c.densities.empty()) throw Error(Errc::ConfigError, "densities is empty");
  const auto res = survival_sweep(p, c.densities, c.reps, c.seed);
  ResultTable tab;
  tab.add_column("density", "probability");
  tab.add_column("n_alive");
  tab.add_column("n_total");
  tab.add_stat("rho_hat", "probability", "stderr");
  for (const auto& r : res.rows) tab.add(Cells() << r.open_p << r.alive << res.reps << r.rho);
  tab.set_meta("wrap_contacts", std::to_string(res.wrap_contacts));
  tab.set_meta("coupling_violations", std::to_string(res.coupling_violations));
  tab.set_meta("max_spread", std::to_string(res.max_spread));
  return tab;
}

ResultTable verify_duality(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  auto irng = Rng::derive(c.seed, Tag::Init, 0, 60);
  const auto xi0 = make_initial(c.init, lat, irng);
  const auto zeta0 = parse_target(c.target, *lat);
  const double t = horizon(c);
  const auto r = mc_duality_check(m, xi0, zeta0, t, c.reps, c.seed, t > 0 ? t / 2 : -1);
  ResultTable tab;
  tab.add_column("t", "time");
  tab.add_column("v", "time");
  tab.add_column("u", "time");
  tab.add_stat("lhs", "probability");
  tab.add_stat("rhs", "probability");
  tab.add_stat("split", "probability");
  tab.add_column("z");
  tab.add_column("z_split_lhs");
  tab.add_column("z_split_rhs");
  tab.add(Cells() << r.t << r.v << r.u << r.lhs << r.rhs << r.split << r.z << r.z_split_lhs << r.z_split_rhs);
  tab.set_meta("parity_violations", std::to_string(r.parity_violations));
  tab.set_meta("pass", r.pass ? "true" : "false");
  return tab;
}

ResultTable verify_nuhalf(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  auto times = c.times;
  sort_unique(times);
  const auto r = nu_half_probe(m, lat, parse_target(c.target, *lat), times, c.reps, c.seed);
  ResultTable tab;
  tab.add_column("t", "time");
  tab.add_stat("odd", "probability");
  tab.add_stat("half_surv", "probability");
  tab.add_column("z");
  for (const auto& row : r.rows) tab.add(Cells() << row.t << row.odd << row.half_surv << row.z);
  tab.set_meta("columns_agree", r.columns_agree ? "true" : "false");
  tab.set_meta("monotone", r.monotone ? "true" : "false");
  tab.set_meta("parity_violations", std::to_string(r.parity_violations));
  tab.set_meta("pass", r.columns_agree && r.monotone && r.parity_violations == 0 ? "true" : "false");
  return tab;
}

ResultTable verify_oddgoal(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  const auto r = oddgoal_probe(m, lat, Offset::unit(0), as_sizes(c.ks), c.reps, c.seed, horizon(c));
  ResultTable tab;
  tab.add_column("K");
  tab.add_column("pairs");
  tab.add_stat("p_odd", "probability");
  tab.add_stat("dev", "probability");
  for (const auto& row : r.rows) tab.add(Cells() << row.K << row.pairs << row.p_odd << row.dev);
  tab.set_meta("decreasing", r.decreasing ? "true" : "false");
  tab.set_meta("last_dev", fmt_double(r.last_dev));
  tab.set_meta("pass", r.pass ? "true" : "false");
  return tab;
}

ResultTable verify_flip2(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  auto times = c.times;
  sort_unique(times);
  const auto r = flip2_probe(m, lat, Offset::unit(0), as_sizes(c.ks), times, c.reps, c.seed, c.init);
  ResultTable tab;
  tab.add_column("t", "time");
  tab.add_column("size");
  tab.add_stat("p", "probability");
  for (const auto& row : r.rows) tab.add(Cells() << row.t << row.size << row.p);
  tab.set_meta("decreasing", r.decreasing ? "true" : "false");
  tab.set_meta("pass", r.decreasing ? "true" : "false");
  return tab;
}

ResultTable verify_cct(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = config_torus(c);
  std::vector<std::string> inits;
  for (const auto& s : split_top(c.init, ';')) inits.push_back(trim(s));
  std::vector<SiteSet> As;
  for (const auto& s : split_top(c.target, '|')) As.push_back(parse_target(trim(s), *lat));
  const auto r = complete_convergence_probe(m, lat, inits, As, horizon(c), c.reps, c.seed);
  ResultTable tab;
  tab.add_column("init");
  tab.add_column("a_size");
  tab.add_column("T", "time");
  tab.add_stat("beta0", "probability");
  tab.add_stat("beta1", "probability");
  tab.add_stat("beta_inf", "probability");
  tab.add_stat("nu_odd", "probability");
  tab.add_stat("direct", "probability");
  tab.add_stat("predicted", "probability");
  tab.add_column("z");
  tab.add_stat("nu_odd_2T", "probability");
  tab.add_stat("direct_2T", "probability");
  tab.add_stat("predicted_2T", "probability");
  tab.add_column("z_2T");
  tab.add_column("pass");
  for (const auto& row : r.rows)
    tab.add(Cells() << row.init << row.a_size << row.T << row.beta0 << row.beta1 << row.beta_inf << row.nu_odd
                    << row.direct << row.predicted << row.z << row.nu_odd_2T << row.direct_2T << row.predicted_2T
                    << row.z_2T << row.pass);
  tab.set_meta("horizon_sensitive", r.horizon_sensitive ? "true" : "false");
  tab.set_meta("pass", r.pass ? "true" : "false");
  return tab;
}

ResultTable verify_exact(const ExperimentConfig& c) {
  const auto m = parse_model(c.model);
  const auto lat = make_small_torus(c.lattice);
  const ExactSystem sys(m, lat);
  auto rng = Rng::derive(c.seed, Tag::Experiment, 0, 61);
  const std::uint32_t full = std::uint32_t(sys.states() - 1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint64_t i = 0; i < std::max<std::uint64_t>(c.reps, 1); ++i)
    pairs.emplace_back(std::uint32_t(rng.next_u64() & full), std::uint32_t(rng.next_u64() & full));
  auto times = c.times;
  sort_unique(times);
  const auto r = exact_duality_check(sys, times, pairs);
  ResultTable tab;
  tab.add_column("xi0");
  tab.add_column("zeta0");
  tab.add_column("t", "time");
  tab.add_column("lhs", "probability");
  tab.add_column("rhs", "probability");
  tab.add_column("abs_diff", "probability");
  for (const auto& row : r.rows)
    tab.add(Cells() << row.xi0 << row.zeta0 << row.t << row.lhs << row.rhs << std::fabs(row.lhs - row.rhs));
  tab.set_meta("max_violation", fmt_double(r.max_violation));
  tab.set_meta("max_violation_all_xi0", fmt_double(r.max_violation_all_xi0));
  tab.set_meta("pass", std::max(r.max_violation, r.max_violation_all_xi0) <= 1e-8 ? "true" : "false");
  return tab;
}

ResultTable run_verify(const ExperimentConfig& c) {
  if (c.probe == "duality") return verify_duality(c);
  if (c.probe == "nuhalf") return verify_nuhalf(c);
  if (c.probe == "oddgoal") return verify_oddgoal(c);
  if (c.probe == "flip2") return verify_flip2(c);
  if (c.probe == "cct") return verify_cct(c);
  if (c.probe == "exact") return verify_exact(c);
  throw Error(Errc::ConfigError, "verify suite must be duality|nuhalf|oddgoal|flip2|cct|exact, got '" + c.probe + "'");
}

}  // namespace

SiteSet parse_target(const std::string& text, const TorusLattice& lattice) {
  const std::string t = trim(text);
  std::vector<Offset> offs;
  if (t == "empty") {
  } else if (t == "single") {
    offs = {Offset{}};
  } else if (t == "pair") {
    offs = {Offset{}, Offset::unit(0)};
  } else if (t == "triple") {
    offs = {Offset{}, Offset::unit(0), Offset::unit(0) + Offset::unit(0)};
  } else {
    for (const auto& part : split_top(t, ';')) offs.push_back(parse_offset(part, lattice.dim()));
  }
  std::vector<std::uint32_t> sites;
  for (const auto& o : offs) sites.push_back(std::uint32_t(lattice.translate(0, o)));
  std::sort(sites.begin(), sites.end());
  if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
    throw Error(Errc::ConfigError, "target '" + t + "' repeats a site");
  return SiteSet(std::move(sites));
}

ResultTable run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ResultTable tab;
  if (config.command == "evolve") tab = run_evolve(config);
  else if (config.command == "dual") tab = run_dual_cmd(config);
  else if (config.command == "cancellative") tab = run_cancellative(config);
  else if (config.command == "reaction") tab = run_reaction(config);
  else if (config.command == "perc") tab = run_perc(config);
  else if (config.command == "verify") tab = run_verify(config);
  else throw Error(Errc::ConfigError, "unknown command '" + config.command + "'");

  ResultTable out;
  out.set_meta("tool", "ips");
  out.set_meta("version", kToolVersion);
  out.set_meta("command", config.command);
  out.set_meta("seed", std::to_string(config.seed));
  const std::string text = serialize(config);
  out.set_meta("config_hash", fnv1a_hex(text));
  for (const auto& [k, v] : tab.metadata()) out.set_meta(k, v);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.set_meta("wall_time_s", seconds_text(wall));
  out.set_meta("config", text);
  // copy the schema and rows behind the common metadata
  const auto& names = tab.columns();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (tab.kinds()[i] == ResultTable::Kind::Plain) out.add_column(names[i], tab.units()[i]);
    else if (tab.kinds()[i] == ResultTable::Kind::Stat) out.add_stat(names[i], tab.units()[i], names[i + 1]);
  }
  for (const auto& r : tab.rows()) {
    Cells cells;
    for (const auto& cell : r) cells << cell;
    out.add(cells);
  }
  return out;
}

ExperimentConfig config_from_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot read '" + path + "'");
  std::string line, text, hash;
  const std::string cfg_tag = "# config: ", hash_tag = "# config_hash: ";
  while (std::getline(f, line)) {
    if (line.rfind("#", 0) != 0) break;
    if (line.rfind(cfg_tag, 0) == 0) text += line.substr(cfg_tag.size()) + "\n";
    else if (line.rfind(hash_tag, 0) == 0) hash = trim(line.substr(hash_tag.size()));
  }
  if (text.empty()) throw Error(Errc::ConfigError, "'" + path + "' has no embedded config");
  auto c = parse_config(text);
  if (!hash.empty() && fnv1a_hex(serialize(c)) != hash)
    throw Error(Errc::ConfigError, "embedded config of '" + path + "' does not match its config_hash");
  return c;
}

}  // namespace ips
