#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace ips {

struct Estimate {
  double mean = 0;
  double se = 0;

  double lo95() const { return mean - 1.96 * se; }
  double hi95() const { return mean + 1.96 * se; }
};

inline Estimate binomial_estimate(std::uint64_t hits, std::uint64_t n) {
  if (n == 0) return {};
  const double p = double(hits) / double(n);
  return {p, std::sqrt(p * (1 - p) / double(n))};
}

class Welford {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / double(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const Welford& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = double(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * double(o.n_) / n;
    m2_ += o.m2_ + d * d * double(n_) * double(o.n_) / n;
    n_ += o.n_;
  }
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
  double se() const { return n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0; }
  Estimate estimate() const { return {mean(), se()}; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

// z-score of the difference of two independent estimates.
inline double z_score(const Estimate& a, const Estimate& b) {
  const double s = std::sqrt(a.se * a.se + b.se * b.se);
  const double d = a.mean - b.mean;
  if (s == 0) return d == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
  return d / s;
}

inline double joint_se(const Estimate& a, const Estimate& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

}  // namespace ips
