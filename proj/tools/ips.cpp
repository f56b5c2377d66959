#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "ips/acceptance.hpp"
#include "ips/cancellative.hpp"
#include "ips/config.hpp"
#include "ips/error.hpp"
#include "ips/literal.hpp"
#include "ips/models.hpp"
#include "ips/parallel.hpp"
#include "ips/run.hpp"

namespace {

struct Flags {
  std::optional<std::string> model, lattice, init, target, t_grid, snap, u_grid, densities, mode, suite, ks;
  std::optional<std::string> emit_kernel, snap_prefix;
  std::optional<double> alpha, theta, t, tmax;
  std::optional<std::uint64_t> reps;
  std::optional<int> n, width, dim;
  bool fprime = false;
};

// Bare model names take their parameter from --alpha or --theta and a
// nearest-neighbour kernel in the lattice dimension.
std::string compose_model(const std::string& name, const Flags& f, int dim) {
  if (name.find('(') != std::string::npos) return name;
  const std::string nn = "nn(" + std::to_string(dim) + ")";
  auto need = [&](const std::optional<double>& v, const char* flag) {
    if (!v) throw ips::Error(ips::Errc::ConfigError, "model '" + name + "' needs " + flag);
    return ips::fmt_double(*v);
  };
  if (name == "voter" || name == "vm") return "voter(kernel=" + nn + ")";
  if (name == "lv") return "lv(alpha=" + need(f.alpha, "--alpha") + ", kernel=" + nn + ")";
  if (name == "av") return "av(alpha=" + need(f.alpha, "--alpha") + ", nbhd=" + nn + ")";
  if (name == "gv") return "gv(theta=" + need(f.theta ? f.theta : f.alpha, "--theta") + ", nbhd=" + nn + ")";
  return name;
}

void add_model_flags(CLI::App* s, Flags& f) {
  s->add_option("--model", f.model, "model literal, or lv|av|gv|voter with --alpha/--theta");
  s->add_option("--alpha", f.alpha, "alpha for lv and av");
  s->add_option("--theta", f.theta, "theta for gv");
}

void apply(ips::ExperimentConfig& c, const Flags& f, const std::string& command) {
  c.command = command;
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) ips::set_config_key(c, key, *v);
  };
  set("lattice", f.lattice);
  if (f.dim) c.dim = *f.dim;
  if (command == "dual") set("target", f.init);
  else set("init", f.init);
  set("target", f.target);
  set("times", f.t_grid);
  set("times", f.snap);
  if (f.t) {
    if (!f.snap && !f.t_grid) c.times = {0};
    if (std::find(c.times.begin(), c.times.end(), *f.t) == c.times.end()) c.times.push_back(*f.t);
  }
  set("u_grid", f.u_grid);
  set("densities", f.densities);
  set("mode", f.mode);
  set("ks", f.ks);
  set("snap_prefix", f.snap_prefix);
  if (f.suite) c.probe = *f.suite;
  if (f.fprime) c.probe = "fprime";
  if (f.tmax) c.tmax = *f.tmax;
  if (f.reps) c.reps = *f.reps;
  if (f.n) c.n = *f.n;
  if (f.width) c.width = *f.width;
  // cancellative and reaction have no lattice of their own; --dim picks the kernel dimension
  int dim = int(c.lattice.size());
  if ((command == "cancellative" || command == "reaction") && f.dim) dim = *f.dim;
  if (f.model) c.model = compose_model(*f.model, f, dim);
  else if (f.alpha || f.theta) throw ips::Error(ips::Errc::ConfigError, "--alpha/--theta need --model");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cancellative spin systems: forward and dual simulation, reaction functions, oriented percolation"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, config_path;
  unsigned threads = 0;
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  app.add_option("--out", out, "output CSV (stdout when absent); a directory for acceptance");
  app.add_option("--config", config_path, "key=value config file; flags override its entries");

  Flags f;
  auto* evolve = app.add_subcommand("evolve", "forward simulation, density trajectory");
  add_model_flags(evolve, f);
  evolve->add_option("--lattice", f.lattice, "torus sides, e.g. 64x64");
  evolve->add_option("--init", f.init, "zeros|ones|half|checker|single|halfspace|file:PATH");
  evolve->add_option("--t", f.t, "final time");
  evolve->add_option("--snap", f.snap, "observation times, list or a:b:step");
  evolve->add_option("--t-grid", f.t_grid, "same as --snap");
  evolve->add_option("--snap-prefix", f.snap_prefix, "write replicate-0 snapshots to PREFIX_t<time>.txt");
  evolve->add_option("--reps", f.reps, "replicates");

  auto* dual = app.add_subcommand("dual", "annihilating dual survival");
  add_model_flags(dual, f);
  dual->add_option("--lattice", f.lattice, "torus sides");
  dual->add_option("--init", f.init, "single|pair|triple|\"(0,0);(1,0)\"");
  dual->add_option("--t-grid", f.t_grid, "times, list or a:b:step");
  dual->add_option("--reps", f.reps, "replicates");

  auto* canc = app.add_subcommand("cancellative", "cancellative representation (k0, q0)");
  add_model_flags(canc, f);
  canc->add_option("--dim", f.dim, "dimension for bare model names");
  canc->add_option("--emit-kernel", f.emit_kernel, "write (set, weight) rows to this CSV");

  auto* react = app.add_subcommand("reaction", "reaction function f(u) or f'(0)");
  add_model_flags(react, f);
  react->add_option("--dim", f.dim, "dimension for bare model names (default 3)");
  react->add_option("--lattice", f.lattice, "walk torus sides");
  react->add_option("--u-grid", f.u_grid, "u values, list or a:b:step");
  react->add_option("--reps", f.reps, "walk ensemble size");
  react->add_option("--tmax", f.tmax, "walk horizon");
  react->add_flag("--fprime", f.fprime, "estimate f'(0) instead of the curve");

  auto* perc = app.add_subcommand("perc", "oriented site percolation survival");
  perc->add_option("--density", f.densities, "open-site densities, list or a:b:step");
  perc->add_option("--n", f.n, "generations");
  perc->add_option("--width", f.width, "torus side");
  perc->add_option("--dim", f.dim, "space dimension");
  perc->add_option("--reps", f.reps, "replicates");
  perc->add_option("--mode", f.mode, "slabK (only +-e_K steps) or full");

  auto* verify = app.add_subcommand("verify", "duality and convergence probes; exit 0 iff the gate passes");
  add_model_flags(verify, f);
  verify->add_option("--suite", f.suite, "duality|nuhalf|oddgoal|flip2|cct|exact")->required();
  verify->add_option("--lattice", f.lattice, "torus sides");
  verify->add_option("--init", f.init, "initial condition; cct takes a ;-separated list");
  verify->add_option("--target", f.target, "set A or zeta_0; cct takes a |-separated list");
  verify->add_option("--t-grid", f.t_grid, "times");
  verify->add_option("--ks", f.ks, "K values (oddgoal) or |A| sizes (flip2)");
  verify->add_option("--reps", f.reps, "replicates");

  auto* accept = app.add_subcommand("acceptance", "run the acceptance criteria");
  std::vector<std::string> only;
  std::string kernel2 = "nn(2)";
  accept->add_option("--only", only, "criterion ids, names or tags")->delimiter(',');
  accept->add_option("--kernel", kernel2, "kernel literal for the d = 2 models");

  for (auto* s : app.get_subcommands({})) s->fallthrough();
  CLI11_PARSE(app, argc, argv);

  ips::set_default_threads(threads);
  try {
    if (accept->parsed()) {
      ips::AcceptanceOptions opt;
      opt.seed = seed.value_or(42);
      opt.out_dir = out.value_or("acceptance");
      opt.only = only;
      opt.kernel2 = kernel2;
      const auto res = ips::run_acceptance(opt, std::cout);
      bool ok = true;
      for (const auto& r : res) ok = ok && r.pass;
      return ok ? 0 : 1;
    }
    ips::ExperimentConfig c = config_path ? ips::load_config(*config_path) : ips::ExperimentConfig{};
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "reaction" && !f.dim && !f.lattice && !config_path) f.dim = 3;
    apply(c, f, command);
    if (seed) c.seed = *seed;
    if (out) c.out = *out;

    if (command == "cancellative" && f.emit_kernel) {
      std::ofstream k(*f.emit_kernel);
      if (!k) throw ips::Error(ips::Errc::IoError, "cannot write '" + *f.emit_kernel + "'");
      ips::write_kernel_csv(k, ips::extract_cancellative(ips::parse_model(c.model)));
    }
    const auto table = ips::run(c);
    if (c.out.empty()) table.write(std::cout);
    else table.write_file(c.out);
    if (command == "verify") {
      const bool pass = table.meta("pass") == "true";
      std::cerr << (pass ? "PASS " : "FAIL ") << c.probe << std::endl;
      return pass ? 0 : 1;
    }
    return 0;
  } catch (const ips::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
