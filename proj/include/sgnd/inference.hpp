#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sgnd/errors.hpp"
#include "sgnd/optimizer.hpp"

namespace sgnd {

// Degrees of freedom after selection: active slopes plus the two intercepts
// and (when estimated) the shape parameter.
inline int degrees_of_freedom(const FitResult& fit) {
  return fit.active_count() - (fit.fixed_nu ? 1 : 0);
}

inline double bic(const FitResult& fit) {
  return -2.0 * fit.loglik +
         std::log(static_cast<double>(fit.n)) * degrees_of_freedom(fit);
}

enum class DropComponent { location, scale, both };

inline const char* drop_component_name(DropComponent c) {
  switch (c) {
    case DropComponent::location: return "location";
    case DropComponent::scale: return "scale";
    default: return "both";
  }
}

struct DeltaBicResult {
  std::string covariate;
  DropComponent component;
  double bic_full;
  double bic_reduced;
  double delta;  // bic_reduced - bic_full; large positive = important
  FitResult reduced_fit;
};

// Importance of one covariate: refit with it excluded from the stated
// component(s), warm-started from the full fit, and report the BIC increase.
inline DeltaBicResult delta_bic(const Dataset& raw, const FitResult& full,
                                const std::string& covariate,
                                DropComponent component,
                                const TelescopeConfig& cfg = {}) {
  const auto name_it =
      std::find(full.names.begin(), full.names.end(), covariate);
  if (name_it == full.names.end())
    throw UnknownCovariate("unknown covariate: " + covariate);
  const int col = static_cast<int>(name_it - full.names.begin()) + 1;

  const bool drop_beta = component != DropComponent::scale;
  const bool drop_alpha = component != DropComponent::location;

  // The variable must be active somewhere in the components being dropped.
  bool active_somewhere = false;
  if (drop_beta) {
    auto it = std::find(full.design.beta_cols.begin(),
                        full.design.beta_cols.end(), col);
    if (it != full.design.beta_cols.end()) {
      const auto pos = it - full.design.beta_cols.begin();
      active_somewhere |= full.active[pos];
    }
  }
  if (drop_alpha) {
    auto it = std::find(full.design.alpha_cols.begin(),
                        full.design.alpha_cols.end(), col);
    if (it != full.design.alpha_cols.end()) {
      const auto pos =
          full.design.beta_cols.size() + (it - full.design.alpha_cols.begin());
      active_somewhere |= full.active[pos];
    }
  }
  if (!active_somewhere)
    throw VariableNotActive(covariate + " is not active in the " +
                            drop_component_name(component) + " component");

  // Reduce to the variables the full fit actually selected, minus the
  // dropped one; refitting the full candidate pool instead would let the
  // telescope swap in previously discarded covariates and mask the
  // variable's contribution.
  ModelDesign reduced;
  ThetaVector warm;
  warm.nu0 = full.theta_scaled.nu0;
  std::vector<double> wb, wa;
  for (std::size_t k = 0; k < full.design.beta_cols.size(); ++k) {
    const int c = full.design.beta_cols[k];
    if (!full.active[k]) continue;
    if (drop_beta && c == col) continue;
    reduced.beta_cols.push_back(c);
    wb.push_back(full.theta_scaled.beta[k]);
  }
  for (std::size_t k = 0; k < full.design.alpha_cols.size(); ++k) {
    const int c = full.design.alpha_cols[k];
    if (!full.active[full.design.beta_cols.size() + k]) continue;
    if (drop_alpha && c == col) continue;
    reduced.alpha_cols.push_back(c);
    wa.push_back(full.theta_scaled.alpha[k]);
  }
  warm.beta = Eigen::Map<Eigen::VectorXd>(wb.data(), wb.size());
  warm.alpha = Eigen::Map<Eigen::VectorXd>(wa.data(), wa.size());

  DeltaBicResult out;
  out.covariate = covariate;
  out.component = component;
  out.reduced_fit = telescope_fit(raw, reduced, full.tau, full.kappa_min,
                                  full.lambda, cfg, warm,
                                  full.fixed_nu
                                      ? std::optional<double>(full.theta_scaled.nu0)
                                      : std::nullopt);
  out.bic_full = bic(full);
  out.bic_reduced = bic(out.reduced_fit);
  out.delta = out.bic_reduced - out.bic_full;
  return out;
}

struct BootstrapResult {
  Eigen::VectorXd se;                  // flat, original covariate scale
  Eigen::MatrixXd replicates;         // successful fits x theta dimension
  int requested = 0;
  int failures = 0;
};

// Nonparametric bootstrap of the full selection-and-fit pipeline: resample
// rows with replacement, rerun the telescope, and report per-coordinate
// standard deviations of the estimates.
inline BootstrapResult bootstrap_se(const Dataset& raw,
                                    const ModelDesign& design, double tau,
                                    double kappa_min, double lambda,
                                    const TelescopeConfig& cfg = {},
                                    int n_boot = 100,
                                    std::uint64_t seed = 1) {
  const Eigen::Index n = raw.n();
  const Eigen::Index dim = static_cast<Eigen::Index>(design.beta_cols.size() +
                                                     design.alpha_cols.size()) +
                           1;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);

  BootstrapResult out;
  out.requested = n_boot;
  std::vector<Eigen::VectorXd> keep;
  keep.reserve(n_boot);
  const int max_failures = n_boot / 5;
  for (int b = 0; b < n_boot; ++b) {
    Dataset res;
    res.names = raw.names;
    res.y.resize(n);
    res.X.resize(n, raw.X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index r = pick(rng);
      res.y[i] = raw.y[r];
      res.X.row(i) = raw.X.row(r);
    }
    try {
      const FitResult fit =
          telescope_fit(res, design, tau, kappa_min, lambda, cfg);
      keep.push_back(fit.theta.flat());
    } catch (const std::runtime_error&) {
      ++out.failures;
      if (out.failures > max_failures)
        throw NonFiniteLikelihood(
            "bootstrap aborted: more than 20% of replicate fits failed");
    }
  }

  const Eigen::Index kept = static_cast<Eigen::Index>(keep.size());
  out.replicates.resize(kept, dim);
  for (Eigen::Index b = 0; b < kept; ++b) out.replicates.row(b) = keep[b];
  out.se = Eigen::VectorXd::Zero(dim);
  if (kept > 1) {
    const Eigen::VectorXd mean = out.replicates.colwise().mean();
    for (Eigen::Index j = 0; j < dim; ++j)
      out.se[j] = std::sqrt(
          (out.replicates.col(j).array() - mean[j]).square().sum() /
          static_cast<double>(kept - 1));
  }
  return out;
}

}  // namespace sgnd
