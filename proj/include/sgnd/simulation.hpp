#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sgnd/inference.hpp"
#include "sgnd/optimizer.hpp"
#include "sgnd/sandwich.hpp"
#include "sgnd/sgnd.hpp"

namespace sgnd {

// Deterministic per-replicate stream seeding: mixes a study seed with the
// replicate index so results are independent of scheduling order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename Rng>
double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <typename Rng>
double std_normal(Rng& rng) {
  return normal_quantile(uniform01(rng));
}

struct SimScenario {
  int n = 1000;
  int n_reps = 100;
  double kappa = 2.0;
  double tau = 0.15;
  double kappa_min = 0.2;
  Eigen::VectorXd beta_true;   // length p+1, intercept first
  Eigen::VectorXd alpha_true;  // length p+1
  std::uint64_t seed = 1;

  double nu0_true() const { return std::log(kappa - kappa_min); }
  int p() const { return static_cast<int>(beta_true.size()) - 1; }

  // Twelve-covariate benchmark: effects through both parameters (X1-X4),
  // location only (X5, X6), scale only (X7, X8), and pure noise (X9-X12).
  static SimScenario benchmark(int n, double kappa, int n_reps,
                               std::uint64_t seed = 1) {
    SimScenario sc;
    sc.n = n;
    sc.kappa = kappa;
    sc.n_reps = n_reps;
    sc.seed = seed;
    sc.beta_true.resize(13);
    sc.alpha_true.resize(13);
    sc.beta_true << 0, 1, 0.5, 0.5, 1, 0.5, 1, 0, 0, 0, 0, 0, 0;
    sc.alpha_true << 0, 0.5, 1, 0.5, 1, 0, 0, 0.5, 1, 0, 0, 0, 0;
    return sc;
  }
};

// Covariate layout of the benchmark: X1, X11 ~ Exponential(1);
// X3, X10 ~ Bernoulli(0.75); X4, X5, X7, X8 ~ N(0,1);
// (X2, X6, X9, X12) multivariate normal with corr(Z_j, Z_k) = 0.5^|j-k|
// over their within-group positions.
template <typename Rng>
Eigen::MatrixXd gen_covariates(Rng& rng, int n) {
  const int p = 12;
  Eigen::MatrixXd X(n, p + 1);
  X.col(0).setOnes();

  Eigen::Matrix4d corr;
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) corr(j, k) = std::pow(0.5, std::abs(j - k));
  const Eigen::Matrix4d L = corr.llt().matrixL();
  const int mvn_cols[4] = {2, 6, 9, 12};

  for (int i = 0; i < n; ++i) {
    X(i, 1) = -std::log(1.0 - uniform01(rng));
    X(i, 11) = -std::log(1.0 - uniform01(rng));
    X(i, 3) = uniform01(rng) < 0.75 ? 1.0 : 0.0;
    X(i, 10) = uniform01(rng) < 0.75 ? 1.0 : 0.0;
    X(i, 4) = std_normal(rng);
    X(i, 5) = std_normal(rng);
    X(i, 7) = std_normal(rng);
    X(i, 8) = std_normal(rng);
    Eigen::Vector4d z;
    for (int k = 0; k < 4; ++k) z[k] = std_normal(rng);
    const Eigen::Vector4d w = L * z;
    for (int k = 0; k < 4; ++k) X(i, mvn_cols[k]) = w[k];
  }
  return X;
}

template <typename Rng>
Dataset gen_dataset(Rng& rng, const SimScenario& sc,
                    const SgndSampler& sampler) {
  Dataset d;
  d.X = gen_covariates(rng, sc.n);
  d.names.resize(sc.p());
  for (int j = 1; j <= sc.p(); ++j) d.names[j - 1] = "X" + std::to_string(j);
  d.y.resize(sc.n);
  const Eigen::VectorXd mu = d.X * sc.beta_true;
  const Eigen::VectorXd eta = d.X * sc.alpha_true;
  for (int i = 0; i < sc.n; ++i)
    d.y[i] = mu[i] + std::exp(eta[i] / 2.0) * sampler.draw(rng);
  return d;
}

struct RepOutcome {
  int rep = 0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd theta;  // flat, original scale
  Eigen::VectorXd se;     // flat, original scale
  std::vector<bool> active;
  double quad_beta = 0.0;   // (b-b0)^T X^T X (b-b0) / n for this replicate
  double quad_alpha = 0.0;
  bool breakdown = false;
  bool converged = true;
};

// Per-coefficient estimation metrics across replicates.
struct ParamMetric {
  std::string name;
  double truth = 0.0;
  double mean_est = 0.0;
  double se_emp = 0.0;   // SD of estimates over replicates
  double see_avg = 0.0;  // mean of model-based SEs (zeroed coefs count as 0)
  double coverage = 0.0; // 95% normal-interval coverage of the truth
};

struct SelectionMetric {
  double correct_zeros = 0.0;    // C: avg true zeros set to zero
  double incorrect_zeros = 0.0;  // IC: avg true signals set to zero
  double prob_true_model = 0.0;  // PT: exact support recovery rate
  double mse = 0.0;              // avg quadratic in-sample error
};

struct StudyResult {
  SimScenario scenario;
  std::vector<RepOutcome> reps;
  SelectionMetric beta, alpha;
  double prob_true_joint = 0.0;
  double nu0_mean = 0.0, nu0_se_emp = 0.0, nu0_see = 0.0, nu0_coverage = 0.0;
  std::vector<ParamMetric> params;  // beta block then alpha block
  int failures = 0;
  double breakdown_rate = 0.0;
};

inline RepOutcome run_replicate(const SimScenario& sc, int rep,
                                const SgndSampler& sampler,
                                const TelescopeConfig& cfg) {
  RepOutcome out;
  out.rep = rep;
  std::mt19937_64 rng(mix_seed(sc.seed, static_cast<std::uint64_t>(rep)));
  try {
    const Dataset data = gen_dataset(rng, sc, sampler);
    const FitResult fit =
        telescope_fit(data, ModelDesign::mpr(sc.p()), sc.tau, sc.kappa_min,
                      default_lambda(data.n()), cfg);
    out.theta = fit.theta.flat();
    out.se = fit.se;
    out.active = fit.active;
    out.breakdown = fit.diag.breakdown_flag;
    out.converged = fit.diag.all_converged;
    const Eigen::MatrixXd XtX_n =
        data.X.transpose() * data.X / static_cast<double>(sc.n);
    const Eigen::VectorXd db = fit.theta.beta - sc.beta_true;
    const Eigen::VectorXd da = fit.theta.alpha - sc.alpha_true;
    out.quad_beta = db.dot(XtX_n * db);
    out.quad_alpha = da.dot(XtX_n * da);
    out.ok = true;
  } catch (const std::runtime_error& e) {
    out.error = e.what();
  }
  return out;
}

inline StudyResult aggregate(const SimScenario& sc,
                             std::vector<RepOutcome> reps) {
  StudyResult res;
  res.scenario = sc;
  const int p1 = sc.p() + 1;
  const double z95 = normal_quantile(0.975);

  std::vector<const RepOutcome*> ok;
  for (const auto& r : reps)
    if (r.ok) ok.push_back(&r);
  res.failures = static_cast<int>(reps.size() - ok.size());
  const double m = static_cast<double>(ok.size());

  auto block_metrics = [&](int offset, const Eigen::VectorXd& truth,
                           bool alpha_block) {
    SelectionMetric sel;
    for (const auto* r : ok) {
      int c = 0, ic = 0;
      bool exact = true;
      for (int j = 1; j < p1; ++j) {
        const bool est_zero = r->theta[offset + j] == 0.0;
        const bool true_zero = truth[j] == 0.0;
        if (true_zero && est_zero) ++c;
        if (!true_zero && est_zero) ++ic;
        if (est_zero != true_zero) exact = false;
      }
      sel.correct_zeros += c;
      sel.incorrect_zeros += ic;
      sel.prob_true_model += exact ? 1.0 : 0.0;
      sel.mse += alpha_block ? r->quad_alpha : r->quad_beta;
    }
    if (m > 0) {
      sel.correct_zeros /= m;
      sel.incorrect_zeros /= m;
      sel.prob_true_model /= m;
      sel.mse /= m;
    }
    return sel;
  };
  res.beta = block_metrics(0, sc.beta_true, false);
  res.alpha = block_metrics(p1, sc.alpha_true, true);

  for (const auto* r : ok) {
    bool exact = true;
    for (int j = 1; j < p1; ++j) {
      if ((r->theta[j] == 0.0) != (sc.beta_true[j] == 0.0)) exact = false;
      if ((r->theta[p1 + j] == 0.0) != (sc.alpha_true[j] == 0.0)) exact = false;
    }
    res.prob_true_joint += exact ? 1.0 : 0.0;
  }
  if (m > 0) res.prob_true_joint /= m;

  // Per-coefficient metrics over the flat vector (beta, alpha, nu0).
  Eigen::VectorXd truth(2 * p1 + 1);
  truth << sc.beta_true, sc.alpha_true, sc.nu0_true();
  for (int j = 0; j < 2 * p1 + 1; ++j) {
    ParamMetric pm;
    pm.truth = truth[j];
    if (j < p1)
      pm.name = "beta_" + std::to_string(j);
    else if (j < 2 * p1)
      pm.name = "alpha_" + std::to_string(j - p1);
    else
      pm.name = "nu_0";
    double sum = 0.0, sum2 = 0.0, see = 0.0, cov = 0.0;
    for (const auto* r : ok) {
      const double est = r->theta[j];
      sum += est;
      sum2 += est * est;
      see += r->se[j];
      if (std::abs(est - pm.truth) <= z95 * r->se[j]) cov += 1.0;
    }
    if (m > 0) {
      pm.mean_est = sum / m;
      pm.se_emp = m > 1 ? std::sqrt((sum2 - sum * sum / m) / (m - 1)) : 0.0;
      pm.see_avg = see / m;
      pm.coverage = cov / m;
    }
    res.params.push_back(pm);
  }
  res.nu0_mean = res.params.back().mean_est;
  res.nu0_se_emp = res.params.back().se_emp;
  res.nu0_see = res.params.back().see_avg;
  res.nu0_coverage = res.params.back().coverage;

  for (const auto* r : ok) res.breakdown_rate += r->breakdown ? 1.0 : 0.0;
  if (m > 0) res.breakdown_rate /= m;

  res.reps = std::move(reps);
  return res;
}

// Run the full study. Replicates are farmed out over threads but indexed by
// replicate number, so the aggregate is identical for any thread count.
inline StudyResult run_study(const SimScenario& sc,
                             const TelescopeConfig& cfg = {},
                             int n_threads = 1) {
  const SgndSampler sampler(SgndShape{sc.kappa, sc.tau, sc.kappa_min});
  std::vector<RepOutcome> reps(sc.n_reps);
  if (n_threads <= 1) {
    for (int r = 0; r < sc.n_reps; ++r)
      reps[r] = run_replicate(sc, r, sampler, cfg);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < sc.n_reps; r = next.fetch_add(1))
          reps[r] = run_replicate(sc, r, sampler, cfg);
      });
    for (auto& th : pool) th.join();
  }
  return aggregate(sc, std::move(reps));
}

}  // namespace sgnd
