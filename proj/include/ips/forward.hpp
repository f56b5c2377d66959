#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ips/alias.hpp"
#include "ips/lattice.hpp"
#include "ips/models.hpp"
#include "ips/rng.hpp"
#include "ips/stats.hpp"

namespace ips {

constexpr std::uint64_t kForwardEventBudget = 20'000'000'000ull;

// Called at each requested time with the index of that time.
using Observer = std::function<void(std::size_t, double, const Configuration&)>;

struct EvolveStats {
  std::uint64_t candidates = 0;
  std::uint64_t flips = 0;
  bool trapped = false;
  double trap_time = -1;
};

/// Uniformized simulation of the spin system: candidate events at rate M per
/// site, accepted with probability c(x, xi) / M. Stops early at a trap.
class GillespieEngine {
 public:
  GillespieEngine(const ModelSpec& m, LatticePtr lattice);

  const ModelSpec& model() const { return model_; }
  double dominating_rate() const { return m_; }
  double rate_at(std::size_t x, const Configuration& cfg) const;

  // Evolves cfg in place to time T, calling obs at every time in `times`
  // (sorted, within [0, T]).
  EvolveStats evolve(Configuration& cfg, double T, Rng& rng, const std::vector<double>& times = {},
                     const Observer& obs = {}, std::uint64_t budget = kForwardEventBudget) const;

 private:
  ModelSpec model_;
  LatticePtr lattice_;
  std::vector<std::uint32_t> nbr_;
  std::vector<double> table_;
  double m_ = 0;
  bool zero_trap_ = false;
  bool one_trap_ = false;
};

Configuration evolve_gillespie(const ModelSpec& m, const Configuration& cfg0, double T, Rng& rng,
                               const std::vector<double>& times = {}, const Observer& obs = {});

struct GraphicalEvent {
  double t;
  std::uint32_t site;
  std::uint8_t kind;  // 0 voter arrow, 1 star
  std::uint32_t arg;  // voter: source site x + X; star: tuple index
  double u;           // star uniform
};

/// Per-site Poisson streams of voter arrows (rate 1 - eps^2/eps1^2) and star
/// events (rate eps^2 cbar), generated lazily per unit time window from
/// counter-based streams keyed by (seed, site, window).
class EventLog {
 public:
  EventLog(const PerturbationView& view, LatticePtr lattice, std::uint64_t seed);

  const PerturbationView& view() const { return view_; }
  const TorusLattice& lattice() const { return *lattice_; }
  LatticePtr lattice_ptr() const { return lattice_; }
  std::uint64_t seed() const { return seed_; }

  // Events at one site in [w, w + 1), sorted by (time, kind).
  void site_window(std::uint32_t site, std::uint64_t w, std::vector<GraphicalEvent>& out) const;
  // Events of every site in [w, w + 1), sorted by (time, site, kind).
  void window(std::uint64_t w, std::vector<GraphicalEvent>& out) const;

  std::uint32_t window_site(std::uint32_t x, std::uint32_t widx) const {
    return wnbr_[std::size_t(x) * view_.model.window_size() + widx];
  }

 private:
  PerturbationView view_;
  LatticePtr lattice_;
  std::uint64_t seed_;
  double voter_rate_;
  double star_rate_;
  AliasTable kernel_alias_;
  std::vector<std::uint32_t> knbr_;  // site * |kernel| + k
  AliasTable z_alias_;
  std::vector<std::uint32_t> wnbr_;  // site * |W| + window index
};

struct GraphicalStats {
  std::uint64_t voter_events = 0;
  std::uint64_t star_events = 0;
  std::uint64_t flips = 0;
};

// Applies the log's events in [0, T] to cfg in time order.
GraphicalStats evolve_graphical(const EventLog& log, Configuration& cfg, double T,
                                const std::vector<double>& times = {}, const Observer& obs = {});
Configuration evolve_graphical(const PerturbationView& view, const Configuration& cfg0, double T, std::uint64_t seed,
                               const std::vector<double>& times = {}, const Observer& obs = {});

struct WalkDualResult {
  std::vector<std::uint32_t> terminal;  // B^{x,t}_t per queried site
  std::vector<std::uint32_t> cluster;   // coalescence class label per queried site
  std::vector<std::uint8_t> star_clean;
  std::vector<std::uint32_t> jumps;     // voter arrows followed
};

// Traces each queried site backward from time t through the voter arrows.
WalkDualResult walk_dual(const EventLog& log, const std::vector<std::uint32_t>& sites, double t);

struct HittingRow {
  double horizon = 0;
  Estimate beta0, beta1, beta_inf;
};

struct HittingResult {
  HittingRow at_h, at_2h;
  // some beta moved by more than 2 joint standard errors between H and 2H
  bool horizon_sensitive = false;
};

HittingResult hitting_probabilities(const ModelSpec& m, const Configuration& cfg0, double horizon,
                                    std::uint64_t reps, std::uint64_t seed);

// zeros | ones | half | checker | single | halfspace | file:PATH
Configuration make_initial(const std::string& spec, LatticePtr lattice, Rng& rng);
// One line per site: coordinates then the bit, space separated.
void write_snapshot(std::ostream& os, const Configuration& cfg);
Configuration read_snapshot(std::istream& is, LatticePtr lattice);

}  // namespace ips
