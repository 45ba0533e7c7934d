#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sgnd/dataset.hpp"
#include "sgnd/errors.hpp"
#include "sgnd/model.hpp"
#include "sgnd/sandwich.hpp"

namespace sgnd {

struct TelescopeConfig {
  double eps_first = 10.0;
  double eps_last = 1e-4;
  int steps = 100;
  double omega = 1e-8;      // inner convergence: |objective change| <= omega
  double zero_tol = 1e-5;   // final hard threshold, strict inequality
  int max_inner_iter = 1000;
  int max_step_halvings = 20;
  double ridge_jitter = 1e-8;
  double kappa_max = kDefaultKappaMax;

  std::vector<double> epsilon_schedule() const {
    std::vector<double> eps(steps);
    if (steps == 1) {
      eps[0] = eps_last;
      return eps;
    }
    const double r = std::pow(eps_last / eps_first,
                              1.0 / static_cast<double>(steps - 1));
    double e = eps_first;
    for (int t = 0; t < steps; ++t, e *= r) eps[t] = e;
    eps.back() = eps_last;
    return eps;
  }
};

inline double default_lambda(Eigen::Index n) {
  return std::log(static_cast<double>(n));
}

struct EpsStepRecord {
  double epsilon;
  ThetaVector theta;  // on the unit-variance scale
  double objective;
  int iterations;
  bool converged;
};

struct FitDiagnostics {
  bool all_converged = true;
  int total_inner_iterations = 0;
  int step_halving_failures = 0;
  bool eta_clipped = false;
  bool kappa_clamped = false;
  bool breakdown_flag = false;
};

struct FitResult {
  ThetaVector theta;         // original covariate scale
  ThetaVector theta_scaled;  // unit-variance scale (as optimized)
  Eigen::VectorXd se;        // original scale, flat (beta, alpha, nu0)
  Eigen::VectorXd se_scaled;
  Eigen::MatrixXd cov_scaled;
  std::vector<bool> active;  // flat order
  double loglik = 0.0;       // at the thresholded estimate
  double objective = 0.0;    // penalized objective at eps_last
  double lambda = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  double kappa_min = 0.0;
  Eigen::Index n = 0;
  bool fixed_nu = false;
  ModelDesign design;
  Eigen::VectorXd col_sd;
  std::vector<std::string> names;
  std::vector<EpsStepRecord> path;
  FitDiagnostics diag;

  int active_count() const {
    int k = 0;
    for (bool a : active) k += a ? 1 : 0;
    return k;
  }
};

// Starting values: OLS for the location, a constant log-variance from the
// OLS residuals, and kappa = 2 (Gaussian-like) for the shape.
inline ThetaVector initialize(const SgndModel& model) {
  const Eigen::MatrixXd& X = model.Xb();
  Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    XtX.diagonal().array() += 1e-8 * XtX.diagonal().mean();
    ldlt.compute(XtX);
    if (ldlt.info() != Eigen::Success)
      throw SingularDesign("location design matrix is singular");
  }
  ThetaVector t;
  t.beta = ldlt.solve(X.transpose() * model.y());
  const Eigen::VectorXd resid = model.y() - X * t.beta;
  const double dof =
      std::max<double>(1.0, static_cast<double>(model.n() - model.pb1()));
  const double q2 = std::max(resid.squaredNorm() / dof, 1e-12);
  t.alpha = Eigen::VectorXd::Zero(model.pa1());
  t.alpha[0] = std::log(q2);
  t.nu0 = std::log(2.0 - model.kappa_min());
  return t;
}

// Hard-threshold the slopes: strictly below tol -> exact zero.
inline ThetaVector threshold_zero(const ThetaVector& theta, double tol) {
  ThetaVector out = theta;
  for (Eigen::Index j = 1; j < out.beta.size(); ++j)
    if (std::abs(out.beta[j]) < tol) out.beta[j] = 0.0;
  for (Eigen::Index j = 1; j < out.alpha.size(); ++j)
    if (std::abs(out.alpha[j]) < tol) out.alpha[j] = 0.0;
  return out;
}

namespace detail {

// Solve A x = b with A forced positive definite: escalating ridge until the
// factorization reports PD, so the resulting direction is always ascent.
inline Eigen::VectorXd solve_block(Eigen::MatrixXd A, const Eigen::VectorXd& b,
                                   double ridge_jitter) {
  const double base = std::max(A.diagonal().cwiseAbs().mean(), 1e-300);
  double ridge = ridge_jitter * base;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::VectorXd x = ldlt.solve(b);
      if (x.allFinite()) return x;
    }
    A.diagonal().array() += ridge;
    ridge *= 10.0;
  }
  throw BlockSolveFailure("block system could not be made positive definite");
}

}  // namespace detail

// One block Newton pass at fixed epsilon: beta, alpha and nu steps from
// block-diagonal solves, applied jointly with step-halving on the
// penalized objective.
struct InnerResult {
  ThetaVector theta;
  double objective;
  int iterations;
  bool converged;
};

inline InnerResult fit_at_eps(const SgndModel& model, const ThetaVector& start,
                              const PenaltySpec& penalty,
                              const TelescopeConfig& cfg, bool fixed_nu,
                              FitDiagnostics* diag) {
  const double nu_cap = std::log(cfg.kappa_max - model.kappa_min());
  const Eigen::Index nb = model.pb1(), na = model.pa1();
  ThetaVector theta = start;
  double obj = model.sic_objective(theta, penalty);
  int it = 0;
  bool converged = false;

  // Try a step along `direction` applied by `apply`, halving until the
  // objective does not decrease. Returns true if any step was taken.
  auto line_step = [&](const auto& apply) {
    double scale = 1.0;
    for (int h = 0; h <= cfg.max_step_halvings; ++h, scale *= 0.5) {
      ThetaVector trial = theta;
      apply(trial, scale);
      if (trial.nu0 > nu_cap) {
        trial.nu0 = nu_cap;
        if (diag) diag->kappa_clamped = true;
      }
      double candidate;
      try {
        candidate = model.sic_objective(trial, penalty);
      } catch (const NonFiniteLikelihood&) {
        continue;
      } catch (const QuadratureFailure&) {
        continue;
      }
      if (std::isfinite(candidate) && candidate >= obj) {
        if (diag && model.predictors(trial).eta_clipped)
          diag->eta_clipped = true;
        theta = trial;
        obj = candidate;
        return true;
      }
    }
    if (diag) diag->step_halving_failures += 1;
    return false;
  };

  // A block whose gradient is already this small is left untouched.
  const double grad_skip = 1e-9;

  for (; it < cfg.max_inner_iter; ++it) {
    const ThetaVector before = theta;

    // Location block.
    {
      const ScoreBlocks sb = model.score(theta, penalty);
      if (sb.grad_beta.cwiseAbs().maxCoeff() > grad_skip) {
        const InfoBlocks ib = model.info_blocks(theta, penalty);
        const Eigen::VectorXd dir = detail::solve_block(
            ib.assembled_block_diag.block(0, 0, nb, nb), sb.grad_beta,
            cfg.ridge_jitter);
        line_step([&](ThetaVector& t, double s) { t.beta += s * dir; });
      }
    }
    // Scale block.
    {
      const ScoreBlocks sb = model.score(theta, penalty);
      if (sb.grad_alpha.cwiseAbs().maxCoeff() > grad_skip) {
        const InfoBlocks ib = model.info_blocks(theta, penalty);
        const Eigen::VectorXd dir = detail::solve_block(
            ib.assembled_block_diag.block(nb, nb, na, na), sb.grad_alpha,
            cfg.ridge_jitter);
        line_step([&](ThetaVector& t, double s) { t.alpha += s * dir; });
      }
    }
    // Shape block.
    if (!fixed_nu) {
      const ScoreBlocks sb = model.score(theta, penalty);
      if (std::abs(sb.grad_nu) > grad_skip) {
        const InfoBlocks ib = model.info_blocks(theta, penalty);
        double wn = ib.assembled_block_diag(nb + na, nb + na);
        if (!(wn > 0.0) || !std::isfinite(wn)) wn = std::max(1.0, std::abs(wn));
        const double dir = sb.grad_nu / wn;
        if (std::isfinite(dir) && dir != 0.0)
          line_step([&](ThetaVector& t, double s) { t.nu0 += s * dir; });
      }
    }

    double delta = std::abs(theta.nu0 - before.nu0);
    delta = std::max(delta, (theta.beta - before.beta).cwiseAbs().maxCoeff());
    delta = std::max(delta, (theta.alpha - before.alpha).cwiseAbs().maxCoeff());
    if (delta <= cfg.omega) {
      converged = true;
      ++it;
      break;
    }
  }
  if (diag) diag->total_inner_iterations += it;
  return InnerResult{theta, obj, it, converged};
}

// Full epsilon-telescope fit: standardize, initialize (or warm start), run
// the inner solver down the geometric epsilon ladder with warm starts,
// hard-threshold, and attach sandwich standard errors on both scales.
inline FitResult telescope_fit(
    const Dataset& raw, const ModelDesign& design, double tau,
    double kappa_min, double lambda, const TelescopeConfig& cfg = {},
    const std::optional<ThetaVector>& warm_start_scaled = std::nullopt,
    const std::optional<double>& fixed_nu0 = std::nullopt) {
  const Dataset data = raw.scaled ? raw : standardize(raw);
  SgndModel model(data, design, tau, kappa_min);

  FitResult fit;
  fit.lambda = lambda;
  fit.tau = tau;
  fit.kappa_min = kappa_min;
  fit.n = data.n();
  fit.design = design;
  fit.col_sd = data.col_sd;
  fit.names = data.names;
  fit.fixed_nu = fixed_nu0.has_value();

  ThetaVector theta =
      warm_start_scaled ? *warm_start_scaled : initialize(model);
  if (fixed_nu0) theta.nu0 = *fixed_nu0;

  const std::vector<double> eps = cfg.epsilon_schedule();
  fit.path.reserve(eps.size());
  for (double e : eps) {
    const PenaltySpec penalty{lambda, e};
    const InnerResult inner =
        fit_at_eps(model, theta, penalty, cfg, fit.fixed_nu, &fit.diag);
    theta = inner.theta;
    if (!inner.converged) fit.diag.all_converged = false;
    fit.path.push_back(
        {e, theta, inner.objective, inner.iterations, inner.converged});
  }

  const PenaltySpec final_penalty{lambda, cfg.eps_last};
  fit.theta_scaled = threshold_zero(theta, cfg.zero_tol);
  fit.loglik = model.loglik(fit.theta_scaled);
  fit.objective = model.sic_objective(fit.theta_scaled, final_penalty);
  fit.kappa = kappa_min + std::exp(fit.theta_scaled.nu0);

  CovarianceResult cov =
      sandwich_cov(model, fit.theta_scaled, final_penalty, cfg.zero_tol);
  fit.cov_scaled = cov.cov;
  fit.se_scaled = cov.se;
  fit.active = cov.active;
  fit.diag.breakdown_flag = cov.breakdown_flag;

  fit.theta = unscale_theta(fit.theta_scaled, data.col_sd, design);
  fit.se = cov.se;
  for (std::size_t k = 0; k < design.beta_cols.size(); ++k)
    if (design.beta_cols[k] >= 1)
      fit.se[k] /= data.col_sd[design.beta_cols[k] - 1];
  for (std::size_t k = 0; k < design.alpha_cols.size(); ++k)
    if (design.alpha_cols[k] >= 1)
      fit.se[design.beta_cols.size() + k] /=
          data.col_sd[design.alpha_cols[k] - 1];
  return fit;
}

}  // namespace sgnd
