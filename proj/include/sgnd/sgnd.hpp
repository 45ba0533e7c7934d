#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "sgnd/errors.hpp"
#include "sgnd/quadrature.hpp"

namespace sgnd {

// Floor applied to the smoothed absolute value before log()/negative powers.
inline constexpr double kAbsFloor = 1e-12;
inline constexpr double kDefaultKappaMax = 20.0;

struct SgndShape {
  double kappa;
  double tau;
  double kappa_min;

  bool valid() const {
    return kappa > kappa_min && kappa_min > 0.0 && tau > 0.0 &&
           kappa <= kDefaultKappaMax;
  }
};

// log c~, d log c~/d nu and d2 log c~/d nu2 at one (kappa, tau, kappa_min).
struct NormConstEval {
  double log_c;
  double dlogc_dnu;
  double d2logc_dnu2;
  double abs_tol;
};

inline double smooth_abs(double z, double tau) {
  return std::sqrt(z * z + tau * tau) - tau;
}

inline double g_tilde(double z, const SgndShape& shape) {
  return std::pow(smooth_abs(z, shape.tau), shape.kappa);
}

inline NormConstEval norm_const(const SgndShape& shape, double abs_tol = 1e-10,
                                int max_depth = 60) {
  const double kappa = shape.kappa;
  const double tau = shape.tau;
  const double m = kappa - shape.kappa_min;

  // Kernel integral and its first two derivatives in nu = log(kappa - kappa_min).
  auto kernel = [&](double z) {
    return std::exp(-std::pow(smooth_abs(z, tau), kappa));
  };
  auto d1 = [&](double z) {
    const double a = std::max(smooth_abs(z, tau), kAbsFloor);
    const double ak = std::pow(a, kappa);
    return -ak * std::exp(-ak) * std::log(a) * m;
  };
  auto d2 = [&](double z) {
    const double a = std::max(smooth_abs(z, tau), kAbsFloor);
    const double ak = std::pow(a, kappa);
    const double la = std::log(a);
    const double e = std::exp(-ak);
    return -ak * e * la * la * m * m - ak * e * la * m * (1.0 - ak * la * m);
  };

  const double J = 2.0 * integrate_half_line(kernel, 0.5 * abs_tol, max_depth);
  const double Jd1 = 2.0 * integrate_half_line(d1, 0.5 * abs_tol, max_depth);
  const double Jd2 = 2.0 * integrate_half_line(d2, 0.5 * abs_tol, max_depth);
  if (!std::isfinite(J) || J <= 0.0)
    throw QuadratureFailure("normalizing integral not finite");

  const double r1 = Jd1 / J;
  NormConstEval out;
  out.log_c = -std::log(J);
  out.dlogc_dnu = -r1;
  out.d2logc_dnu2 = -Jd2 / J + r1 * r1;
  out.abs_tol = abs_tol;
  if (!std::isfinite(out.log_c) || !std::isfinite(out.dlogc_dnu) ||
      !std::isfinite(out.d2logc_dnu2))
    throw QuadratureFailure("normalizing constant derivatives not finite");
  return out;
}

// Memoizes norm_const per (kappa, tau, kappa_min); kappa keyed at 1e-12
// resolution. Instances are per fit; reads/writes are mutex guarded.
class NormConstCache {
 public:
  NormConstEval get(const SgndShape& shape) const {
    const std::int64_t key = keyed(shape);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!map_.empty() && (tau_ != shape.tau || kappa_min_ != shape.kappa_min))
        return norm_const(shape);  // different family settings: bypass
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    NormConstEval eval = norm_const(shape);
    std::lock_guard<std::mutex> lock(mu_);
    if (map_.empty()) {
      tau_ = shape.tau;
      kappa_min_ = shape.kappa_min;
    }
    if (tau_ == shape.tau && kappa_min_ == shape.kappa_min) map_[key] = eval;
    return eval;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  static std::int64_t keyed(const SgndShape& shape) {
    return std::llround(shape.kappa * 1e12);
  }

  mutable std::mutex mu_;
  mutable std::unordered_map<std::int64_t, NormConstEval> map_;
  mutable double tau_ = 0.0;
  mutable double kappa_min_ = 0.0;
};

inline double log_density(double y, double mu, double s, const SgndShape& shape,
                          const NormConstEval& nc) {
  return nc.log_c - std::log(s) - g_tilde((y - mu) / s, shape);
}

inline double log_density(double y, double mu, double s,
                          const SgndShape& shape) {
  return log_density(y, mu, s, shape, norm_const(shape));
}

// CDF by integrating the kernel from the center; cdf(mu) = 0.5 by symmetry.
inline double cdf(double y, double mu, double s, const SgndShape& shape,
                  const NormConstEval& nc, double abs_tol = 1e-12) {
  const double z = std::abs(y - mu) / s;
  auto kernel = [&](double t) { return std::exp(-g_tilde(t, shape)); };
  const double half = std::exp(nc.log_c) * integrate_adaptive(kernel, 0.0, z,
                                                              abs_tol, 60);
  const double p = (y >= mu) ? 0.5 + half : 0.5 - half;
  return std::clamp(p, 0.0, 1.0);
}

inline double cdf(double y, double mu, double s, const SgndShape& shape) {
  return cdf(y, mu, s, shape, norm_const(shape));
}

// Quantile table for the standard (mu=0, s=1) SGND, used for inverse-CDF
// sampling. The grid covers probabilities [1e-9, 1 - 1e-9]; draws are
// polished by Newton/bisection to |cdf(x) - u| <= 1e-8.
class SgndSampler {
 public:
  explicit SgndSampler(const SgndShape& shape)
      : shape_(shape), nc_(norm_const(shape)) {
    build_grid();
  }

  // u in (0, 1) -> standard SGND quantile.
  double quantile(double u) const {
    const double lo_p = 1e-9, hi_p = 1.0 - 1e-9;
    u = std::clamp(u, lo_p, hi_p);
    // Bracket from the grid.
    auto it = std::lower_bound(cdf_grid_.begin(), cdf_grid_.end(), u);
    std::size_t hi = std::min<std::size_t>(it - cdf_grid_.begin(),
                                           cdf_grid_.size() - 1);
    std::size_t lo = hi > 0 ? hi - 1 : 0;
    double a = z_grid_[lo], b = z_grid_[hi];
    double fa = cdf_grid_[lo] - u, fb = cdf_grid_[hi] - u;
    if (fa > 0.0) return a;
    if (fb < 0.0) return b;
    double x = 0.5 * (a + b);
    for (int iter = 0; iter < 100; ++iter) {
      const double fx = cdf(x, 0.0, 1.0, shape_, nc_) - u;
      if (std::abs(fx) <= 1e-8) return x;
      const double dens = std::exp(log_density(x, 0.0, 1.0, shape_, nc_));
      if (fx > 0.0) b = x; else a = x;
      double step = dens > 0.0 ? x - fx / dens : std::numeric_limits<double>::quiet_NaN();
      x = (std::isfinite(step) && step > a && step < b) ? step : 0.5 * (a + b);
    }
    return x;
  }

  template <typename Rng>
  double draw(Rng& rng) const {
    // Strictly inside (0,1).
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    return quantile(u);
  }

  const SgndShape& shape() const { return shape_; }
  const NormConstEval& norm() const { return nc_; }

 private:
  void build_grid() {
    // Find the right tail endpoint: kernel mass above z below 1e-10.
    double z_max = 1.0;
    while (cdf(z_max, 0.0, 1.0, shape_, nc_) < 1.0 - 1e-10 && z_max < 1e8)
      z_max *= 2.0;
    const int n = 512;
    z_grid_.resize(2 * n + 1);
    cdf_grid_.resize(2 * n + 1);
    for (int i = 0; i <= 2 * n; ++i) {
      // Denser near the center, geometric toward the tails.
      const double t = static_cast<double>(i - n) / n;
      const double z = std::copysign(z_max * (std::expm1(6.0 * std::abs(t)) /
                                              std::expm1(6.0)),
                                     t);
      z_grid_[i] = z;
      cdf_grid_[i] = cdf(z, 0.0, 1.0, shape_, nc_, 1e-12);
    }
    // Enforce monotonicity against quadrature noise.
    for (std::size_t i = 1; i < cdf_grid_.size(); ++i)
      cdf_grid_[i] = std::max(cdf_grid_[i], cdf_grid_[i - 1]);
  }

  SgndShape shape_;
  NormConstEval nc_;
  std::vector<double> z_grid_;
  std::vector<double> cdf_grid_;
};

template <typename Rng>
std::vector<double> sample(Rng& rng, std::size_t n, double mu, double s,
                           const SgndShape& shape) {
  SgndSampler sampler(shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mu + s * sampler.draw(rng);
  return out;
}

}  // namespace sgnd
