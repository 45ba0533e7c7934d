#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sgnd/errors.hpp"
#include "sgnd/model.hpp"

namespace sgnd {

// Rational approximation to the standard normal quantile (absolute error
// below 1.2e-9 on (0,1)), polished with one Halley step.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    return p == 0.0 ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

struct CovarianceResult {
  Eigen::MatrixXd cov;         // full-dimension; inactive rows/cols are zero
  Eigen::VectorXd se;          // flat order (beta, alpha, nu0); inactive = 0
  std::vector<bool> active;    // flat order
  bool breakdown_flag = false;
};

// Which flat coordinates are treated as active: intercepts and nu0 always;
// slopes only when past the zero threshold.
inline std::vector<bool> active_set(const ThetaVector& theta, double zero_tol) {
  std::vector<bool> act(theta.size(), true);
  for (Eigen::Index j = 1; j < theta.beta.size(); ++j)
    act[j] = std::abs(theta.beta[j]) >= zero_tol;
  for (Eigen::Index j = 1; j < theta.alpha.size(); ++j)
    act[theta.beta.size() + j] = std::abs(theta.alpha[j]) >= zero_tol;
  return act;
}

// Sandwich covariance I^{-1} I0 I^{-1}, where I carries the penalty
// curvature and I0 does not. Both matrices are restricted to the active
// coordinates before the inversion; inactive coordinates get SE = 0.
inline CovarianceResult sandwich_cov(const SgndModel& model,
                                     const ThetaVector& theta,
                                     const PenaltySpec& penalty,
                                     double zero_tol) {
  const Eigen::Index dim = theta.size();
  CovarianceResult out;
  out.active = active_set(theta, zero_tol);
  out.cov = Eigen::MatrixXd::Zero(dim, dim);
  out.se = Eigen::VectorXd::Zero(dim);

  const Eigen::MatrixXd I_pen =
      model.info_blocks(theta, penalty).assembled_full;
  const Eigen::MatrixXd I_raw =
      model.info_blocks(theta, PenaltySpec{0.0, penalty.epsilon})
          .assembled_full;

  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < dim; ++j)
    if (out.active[j]) idx.push_back(j);
  const Eigen::Index k = static_cast<Eigen::Index>(idx.size());

  Eigen::MatrixXd Ir(k, k), I0r(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) {
      Ir(r, c) = I_pen(idx[r], idx[c]);
      I0r(r, c) = I_raw(idx[r], idx[c]);
    }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Ir);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    out.breakdown_flag = true;
  }
  Eigen::MatrixXd Ir_inv;
  if (ldlt.info() == Eigen::Success) {
    Ir_inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Ir);
    if (!lu.isInvertible())
      throw SingularInformation("restricted information matrix is singular");
    Ir_inv = lu.inverse();
  }

  const Eigen::MatrixXd cov_r = Ir_inv * I0r * Ir_inv;
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) out.cov(idx[r], idx[c]) = cov_r(r, c);
  for (Eigen::Index r = 0; r < k; ++r) {
    const double v = cov_r(r, r);
    out.se[idx[r]] = v > 0.0 ? std::sqrt(v) : 0.0;
    if (!(v > 0.0) || !std::isfinite(v) || std::sqrt(std::max(v, 0.0)) < 1e-10)
      out.breakdown_flag = true;
  }
  if (!out.se.allFinite()) out.breakdown_flag = true;
  return out;
}

struct ConfidenceInterval {
  double lower;
  double upper;
};

inline std::vector<ConfidenceInterval> confidence_intervals(
    const Eigen::VectorXd& est, const Eigen::VectorXd& se, double level) {
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<ConfidenceInterval> out(est.size());
  for (Eigen::Index j = 0; j < est.size(); ++j)
    out[j] = {est[j] - z * se[j], est[j] + z * se[j]};
  return out;
}

}  // namespace sgnd
