#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sgnd/dataset.hpp"
#include "sgnd/errors.hpp"
#include "sgnd/sgnd.hpp"

namespace sgnd {

// theta = (beta^T, alpha^T, nu0)^T with kappa = kappa_min + exp(nu0).
struct ThetaVector {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  double nu0 = 0.0;

  Eigen::Index size() const { return beta.size() + alpha.size() + 1; }

  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(size());
    v << beta, alpha, nu0;
    return v;
  }

  static ThetaVector from_flat(const Eigen::VectorXd& v, Eigen::Index pb1,
                               Eigen::Index pa1) {
    ThetaVector t;
    t.beta = v.segment(0, pb1);
    t.alpha = v.segment(pb1, pa1);
    t.nu0 = v[pb1 + pa1];
    return t;
  }
};

// Which design columns feed each component. Column 0 is the intercept and is
// always present; MPR uses all columns in both components, SPR restricts the
// scale to the intercept.
struct ModelDesign {
  std::vector<int> beta_cols;
  std::vector<int> alpha_cols;

  static ModelDesign mpr(int p) {
    ModelDesign d;
    for (int j = 0; j <= p; ++j) {
      d.beta_cols.push_back(j);
      d.alpha_cols.push_back(j);
    }
    return d;
  }
  static ModelDesign spr(int p) {
    ModelDesign d;
    for (int j = 0; j <= p; ++j) d.beta_cols.push_back(j);
    d.alpha_cols.push_back(0);
    return d;
  }
};

struct PenaltySpec {
  double lambda = 0.0;   // log(n) for BIC, 2 for AIC
  double epsilon = 1.0;  // smooth-L0 smoothing parameter
};

struct PhiEval {
  double value;
  double d1;
  double d2;
};

// Smooth L0 norm term theta^2/(theta^2 + eps^2) with derivatives.
inline PhiEval phi_eps(double theta_j, double epsilon) {
  const double t2 = theta_j * theta_j;
  const double e2 = epsilon * epsilon;
  const double den = t2 + e2;
  PhiEval out;
  out.value = t2 / den;
  out.d1 = 2.0 * theta_j * e2 / (den * den);
  out.d2 = 2.0 * e2 * (e2 - 3.0 * t2) / (den * den * den);
  return out;
}

struct ScoreBlocks {
  Eigen::VectorXd grad_beta;
  Eigen::VectorXd grad_alpha;
  double grad_nu = 0.0;
  Eigen::VectorXd z_beta, z_alpha, z_nu;  // length n
  Eigen::VectorXd xi_beta, xi_alpha;      // penalty gradients, intercept = 0

  Eigen::VectorXd flat(bool with_nu = true) const {
    Eigen::VectorXd v(grad_beta.size() + grad_alpha.size() + (with_nu ? 1 : 0));
    if (with_nu)
      v << grad_beta, grad_alpha, grad_nu;
    else
      v << grad_beta, grad_alpha;
    return v;
  }
};

struct InfoBlocks {
  Eigen::VectorXd Wb, Wa, Wn, Wba, Wbn, Wan;        // diagonal weights, length n
  Eigen::VectorXd Sigma_beta, Sigma_alpha;          // penalty curvature diag
  Eigen::MatrixXd assembled_full;                   // I(theta)
  Eigen::MatrixXd assembled_block_diag;             // cross blocks zeroed
};

// The SGND distributional regression model on a (scaled or raw) dataset.
// All evaluations are pure; the normalizing-constant cache is the only
// shared state and is internally synchronized.
class SgndModel {
 public:
  SgndModel(const Dataset& data, const ModelDesign& design, double tau,
            double kappa_min)
      : y_(data.y), tau_(tau), kappa_min_(kappa_min), design_(design) {
    Xb_.resize(data.X.rows(), design.beta_cols.size());
    for (std::size_t k = 0; k < design.beta_cols.size(); ++k)
      Xb_.col(k) = data.X.col(design.beta_cols[k]);
    Xa_.resize(data.X.rows(), design.alpha_cols.size());
    for (std::size_t k = 0; k < design.alpha_cols.size(); ++k)
      Xa_.col(k) = data.X.col(design.alpha_cols[k]);
  }

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index pb1() const { return Xb_.cols(); }
  Eigen::Index pa1() const { return Xa_.cols(); }
  double tau() const { return tau_; }
  double kappa_min() const { return kappa_min_; }
  const ModelDesign& design() const { return design_; }
  const Eigen::MatrixXd& Xb() const { return Xb_; }
  const Eigen::MatrixXd& Xa() const { return Xa_; }
  const Eigen::VectorXd& y() const { return y_; }
  const NormConstCache& cache() const { return cache_; }

  SgndShape shape_at(double nu0) const {
    return SgndShape{kappa_min_ + std::exp(nu0), tau_, kappa_min_};
  }

  struct Pred {
    Eigen::VectorXd mu;
    Eigen::VectorXd s;        // exp(x^T alpha / 2)
    SgndShape shape;
    NormConstEval nc;
    bool eta_clipped = false;
  };

  Pred predictors(const ThetaVector& theta) const {
    Pred pr;
    pr.mu = Xb_ * theta.beta;
    Eigen::VectorXd eta = Xa_ * theta.alpha;
    pr.eta_clipped = (eta.array().abs() > 700.0).any();
    eta = eta.array().min(700.0).max(-700.0);
    pr.s = (eta.array() / 2.0).exp();
    pr.shape = shape_at(theta.nu0);
    pr.nc = cache_.get(pr.shape);
    return pr;
  }

  double loglik(const ThetaVector& theta) const {
    const Pred pr = predictors(theta);
    double ll = static_cast<double>(n()) * pr.nc.log_c;
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double z = (y_[i] - pr.mu[i]) / pr.s[i];
      ll -= std::log(pr.s[i]) + g_tilde(z, pr.shape);
    }
    if (!std::isfinite(ll)) throw NonFiniteLikelihood("loglik not finite");
    return ll;
  }

  double penalty_norm(const Eigen::VectorXd& coef, double epsilon) const {
    double acc = 0.0;
    for (Eigen::Index j = 1; j < coef.size(); ++j)
      acc += phi_eps(coef[j], epsilon).value;
    return acc;
  }

  double sic_objective(const ThetaVector& theta,
                       const PenaltySpec& penalty) const {
    const double pen = penalty_norm(theta.beta, penalty.epsilon) +
                       penalty_norm(theta.alpha, penalty.epsilon) + 3.0;
    return loglik(theta) - 0.5 * penalty.lambda * pen;
  }

  ScoreBlocks score(const ThetaVector& theta, const PenaltySpec& penalty) const {
    const Pred pr = predictors(theta);
    const double kappa = pr.shape.kappa;
    const double m = kappa - kappa_min_;

    ScoreBlocks sb;
    sb.z_beta.resize(n());
    sb.z_alpha.resize(n());
    sb.z_nu.resize(n());
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double e = y_[i] - pr.mu[i];
      const double s2inv = 1.0 / (pr.s[i] * pr.s[i]);
      const double root = std::sqrt(s2inv * e * e + tau_ * tau_);  // a + tau
      const double a = std::max(root - tau_, kAbsFloor);
      const double ak1 = std::pow(a, kappa - 1.0);
      sb.z_beta[i] = s2inv * kappa * e * ak1 / root;
      sb.z_alpha[i] = s2inv * kappa * e * e * ak1 / (2.0 * root) - 0.5;
      sb.z_nu[i] = pr.nc.dlogc_dnu - std::log(a) * ak1 * a * m;
    }

    sb.xi_beta = Eigen::VectorXd::Zero(pb1());
    sb.xi_alpha = Eigen::VectorXd::Zero(pa1());
    for (Eigen::Index j = 1; j < pb1(); ++j)
      sb.xi_beta[j] = phi_eps(theta.beta[j], penalty.epsilon).d1;
    for (Eigen::Index j = 1; j < pa1(); ++j)
      sb.xi_alpha[j] = phi_eps(theta.alpha[j], penalty.epsilon).d1;

    const double half_lambda = 0.5 * penalty.lambda;
    sb.grad_beta = Xb_.transpose() * sb.z_beta - half_lambda * sb.xi_beta;
    sb.grad_alpha = Xa_.transpose() * sb.z_alpha - half_lambda * sb.xi_alpha;
    sb.grad_nu = sb.z_nu.sum();
    return sb;
  }

  InfoBlocks info_blocks(const ThetaVector& theta,
                         const PenaltySpec& penalty) const {
    const Pred pr = predictors(theta);
    const double kappa = pr.shape.kappa;
    const double m = kappa - kappa_min_;

    InfoBlocks ib;
    ib.Wb.resize(n());
    ib.Wa.resize(n());
    ib.Wn.resize(n());
    ib.Wba.resize(n());
    ib.Wbn.resize(n());
    ib.Wan.resize(n());
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double e = y_[i] - pr.mu[i];
      const double s2inv = 1.0 / (pr.s[i] * pr.s[i]);
      const double e2 = e * e;
      const double u = s2inv * e2;
      const double root = std::sqrt(u + tau_ * tau_);  // a + tau
      const double root2 = root * root;
      const double root3 = root2 * root;
      const double a = std::max(root - tau_, kAbsFloor);
      const double la = std::log(a);
      const double ak = std::pow(a, kappa);
      const double ak1 = ak / a;
      const double ak2 = ak1 / a;

      ib.Wb[i] = s2inv * kappa * ak1 / root +
                 s2inv * s2inv * e2 * kappa *
                     ((kappa - 1.0) * ak2 / root2 - ak1 / root3);
      ib.Wa[i] = s2inv * kappa * e2 * ak1 / (2.0 * root) -
                 s2inv * s2inv * kappa * e2 * e2 * ak1 / (4.0 * root3) +
                 s2inv * s2inv * (kappa - 1.0) * kappa * e2 * e2 * ak2 /
                     (4.0 * root2);
      // Kernel curvature in nu; the -d2 log c~/d nu2 part is added below.
      ib.Wn[i] = -pr.nc.d2logc_dnu2 + m * la * ak * (1.0 + m * la);
      ib.Wba[i] = s2inv * kappa * e * ak1 / root -
                  s2inv * s2inv * kappa * e * e2 * ak1 / (2.0 * root3) +
                  s2inv * s2inv * (kappa - 1.0) * kappa * e * e2 * ak2 /
                      (2.0 * root2);
      ib.Wbn[i] = -m * s2inv * e * ak1 * (1.0 + kappa * la) / root;
      ib.Wan[i] = -m * s2inv * e2 * ak1 * (1.0 + kappa * la) / (2.0 * root);
    }

    ib.Sigma_beta = Eigen::VectorXd::Zero(pb1());
    ib.Sigma_alpha = Eigen::VectorXd::Zero(pa1());
    for (Eigen::Index j = 1; j < pb1(); ++j)
      ib.Sigma_beta[j] = phi_eps(theta.beta[j], penalty.epsilon).d2;
    for (Eigen::Index j = 1; j < pa1(); ++j)
      ib.Sigma_alpha[j] = phi_eps(theta.alpha[j], penalty.epsilon).d2;

    const Eigen::Index nb = pb1(), na = pa1();
    const Eigen::Index dim = nb + na + 1;
    const double half_lambda = 0.5 * penalty.lambda;
    Eigen::MatrixXd I(dim, dim);
    I.setZero();
    I.block(0, 0, nb, nb) =
        Xb_.transpose() * ib.Wb.asDiagonal() * Xb_ +
        (half_lambda * ib.Sigma_beta).asDiagonal().toDenseMatrix();
    I.block(nb, nb, na, na) =
        Xa_.transpose() * ib.Wa.asDiagonal() * Xa_ +
        (half_lambda * ib.Sigma_alpha).asDiagonal().toDenseMatrix();
    I(dim - 1, dim - 1) = ib.Wn.sum();
    I.block(0, nb, nb, na) = Xb_.transpose() * ib.Wba.asDiagonal() * Xa_;
    I.block(nb, 0, na, nb) = I.block(0, nb, nb, na).transpose();
    I.block(0, dim - 1, nb, 1) = Xb_.transpose() * ib.Wbn;
    I.block(dim - 1, 0, 1, nb) = I.block(0, dim - 1, nb, 1).transpose();
    I.block(nb, dim - 1, na, 1) = Xa_.transpose() * ib.Wan;
    I.block(dim - 1, nb, 1, na) = I.block(nb, dim - 1, na, 1).transpose();
    ib.assembled_full = I;

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, dim);
    B.block(0, 0, nb, nb) = I.block(0, 0, nb, nb);
    B.block(nb, nb, na, na) = I.block(nb, nb, na, na);
    B(dim - 1, dim - 1) = I(dim - 1, dim - 1);
    ib.assembled_block_diag = B;
    return ib;
  }

 private:
  Eigen::MatrixXd Xb_, Xa_;
  Eigen::VectorXd y_;
  double tau_;
  double kappa_min_;
  ModelDesign design_;
  mutable NormConstCache cache_;
};

// Map estimates on the unit-variance scale back to the original covariate
// scale: slopes divide by SD(x_j); intercepts and nu0 are unchanged.
inline ThetaVector unscale_theta(const ThetaVector& theta,
                                 const Eigen::VectorXd& col_sd,
                                 const ModelDesign& design) {
  ThetaVector out = theta;
  for (std::size_t k = 0; k < design.beta_cols.size(); ++k)
    if (design.beta_cols[k] >= 1)
      out.beta[k] /= col_sd[design.beta_cols[k] - 1];
  for (std::size_t k = 0; k < design.alpha_cols.size(); ++k)
    if (design.alpha_cols[k] >= 1)
      out.alpha[k] /= col_sd[design.alpha_cols[k] - 1];
  return out;
}

}  // namespace sgnd
