#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ips/lattice.hpp"

namespace ips {

/// Finite symmetric set of offsets that excludes the origin.
class Neighborhood {
 public:
  Neighborhood() = default;
  static Neighborhood make(std::vector<Offset> points, int dim);
  static Neighborhood nearest_neighbor(int dim);
  static Neighborhood box(int L, int dim);

  int dim() const { return dim_; }
  const std::vector<Offset>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  // Uniform kernel on the points.
  Kernel uniform_kernel() const;
  std::string literal() const { return literal_; }

 private:
  int dim_ = 0;
  std::vector<Offset> points_;
  std::string literal_;
};

Neighborhood parse_neighborhood(std::string_view text);

enum class ModelKind { Voter, LV, AV, GV, ThresholdVoter, Custom };

std::string_view to_string(ModelKind k);

constexpr std::size_t kMaxTableWindow = 22;

/// A flip-rate family together with its dependence window W. W[0] is the
/// origin; a window state is a bitmask whose bit i is xi(x + W[i]).
class ModelSpec {
 public:
  static ModelSpec voter(Kernel k);
  static ModelSpec lv(double alpha, Kernel k);
  // Kernel defaults to the uniform law on the neighborhood.
  static ModelSpec av(double alpha, Neighborhood n);
  static ModelSpec av(double alpha, Neighborhood n, Kernel k);
  static ModelSpec gv(double theta, Neighborhood n);
  static ModelSpec threshold_voter(Neighborhood n);
  static ModelSpec custom(std::vector<Offset> window, std::vector<double> table, int dim);

  ModelKind kind() const { return kind_; }
  double param() const { return param_; }
  double alpha() const { return param_; }
  double theta() const { return param_; }
  int dim() const { return dim_; }
  bool has_kernel() const { return kind_ != ModelKind::ThresholdVoter && kind_ != ModelKind::Custom; }
  const Kernel& kernel() const { return kernel_; }
  const Neighborhood& neighborhood() const { return nbhd_; }
  const std::vector<Offset>& window() const { return window_; }
  std::size_t window_size() const { return window_.size(); }
  bool tabulated() const { return window_.size() <= kMaxTableWindow; }
  std::string literal() const { return literal_; }
  void set_literal(std::string s) { literal_ = std::move(s); }

  // Rate at the origin for a window accessor bit(i) -> 0/1.
  template <class Bit>
  double eval(Bit&& bit) const;

  double rate_of_mask(std::uint64_t mask) const {
    return eval([mask](std::size_t i) { return int((mask >> i) & 1u); });
  }
  // Full table over 2^|W| window states; throws WindowTooLarge if |W| > 22.
  std::vector<double> rate_table() const;
  // sup of the rate over window states (the uniformization constant).
  double max_rate() const;

  void check_fits(const TorusLattice& lattice) const;

 private:
  ModelSpec() = default;
  void build_window();

  ModelKind kind_ = ModelKind::Voter;
  double param_ = 1;
  int dim_ = 0;
  Kernel kernel_;
  Neighborhood nbhd_;
  std::vector<Offset> window_;
  std::vector<std::uint32_t> kernel_idx_;
  std::vector<double> kernel_w_;
  std::vector<std::uint32_t> nbhd_idx_;
  std::vector<double> gv_table_;
  std::vector<double> custom_table_;
  std::string literal_;
};

template <class Bit>
double ModelSpec::eval(Bit&& bit) const {
  const int x = bit(0);
  if (kind_ == ModelKind::Custom) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < window_.size(); ++i) m |= std::uint64_t(bit(i)) << i;
    return custom_table_[m];
  }
  // Both sums are formed in the same order, so f1(xi) and f0(complement xi)
  // are bit-identical and symmetric models are exactly symmetric.
  double f1 = 0, f0 = 0;
  if (kind_ == ModelKind::Voter || kind_ == ModelKind::LV || kind_ == ModelKind::AV) {
    for (std::size_t k = 0; k < kernel_idx_.size(); ++k) {
      if (bit(kernel_idx_[k]))
        f1 += kernel_w_[k];
      else
        f0 += kernel_w_[k];
    }
  }
  std::size_t disagree = 0;
  if (kind_ == ModelKind::AV || kind_ == ModelKind::GV || kind_ == ModelKind::ThresholdVoter) {
    for (auto i : nbhd_idx_) disagree += std::size_t(bit(i) != x);
  }
  const double fo = x ? f0 : f1;  // density of the opposite type
  const double fs = x ? f1 : f0;  // density of the own type
  switch (kind_) {
    case ModelKind::Voter: return fo;
    case ModelKind::LV: return fo * (fs + param_ * fo);
    case ModelKind::AV: return param_ * fo + (1 - param_) * (disagree ? 1.0 : 0.0);
    case ModelKind::GV: return gv_table_[disagree];
    case ModelKind::ThresholdVoter: return disagree ? 1.0 : 0.0;
    case ModelKind::Custom: break;
  }
  return 0;
}

ModelSpec parse_model(std::string_view text);

double flip_rate(const ModelSpec& m, std::size_t x, const Configuration& cfg);

/// Voter-model-perturbation decomposition
///   c = c_vm + eps^2 [(1 - xi(x)) h_1 + xi(x) h_0],
///   h_i = -f_i / eps1^2 + E_Z g_i(xi(x + Z^1), ..., xi(x + Z^N0)).
/// g_eps holds the exact finite-eps maps, g_limit their eps -> 0 limits.
struct PerturbationView {
  ModelSpec model = ModelSpec::voter(Kernel::nearest_neighbor(1));
  double eps = 0;
  double eps1 = std::numeric_limits<double>::infinity();
  Kernel kernel;
  std::vector<std::uint32_t> kernel_idx;  // window index of each kernel entry
  std::vector<double> kernel_w;
  // Each tuple lists indices into model.window().
  std::vector<std::vector<std::uint32_t>> z_tuples;
  std::vector<double> z_probs;
  std::size_t n0 = 0;
  std::vector<double> g_eps[2];
  std::vector<double> g_limit[2];
  double cbar = 1;
  // max over window states of |c - (leading-order form)|, zero when exact.
  double residual_max = 0;

  // Rate of voter arrows in the graphical construction: 1 - eps^2/eps1^2.
  double voter_rate() const { return 1.0 - (std::isinf(eps1) ? 0.0 : eps * eps / (eps1 * eps1)); }
  double star_rate() const { return eps * eps * cbar; }

  // h_i at a window state; uses g_eps (exact) or g_limit.
  double h(int i, std::uint64_t mask, bool limit) const;
  // c_vm + eps^2 [(1 - xi) h_1 + xi h_0] with the exact g maps.
  double reconstruct(std::uint64_t mask) const;
  std::uint32_t g_index(std::size_t tuple, std::uint64_t mask) const;
};

PerturbationView perturbation_view(const ModelSpec& m);

}  // namespace ips
