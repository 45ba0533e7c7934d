// Simulation harness tests: covariate generator moments, hand-worked metric
// aggregation, and determinism across seeds and thread counts.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sgnd/simulation.hpp"

namespace {

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() /
         std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace

TEST_CASE("per-replicate seeds are deterministic and well spread") {
  CHECK(sgnd::mix_seed(1, 0) == sgnd::mix_seed(1, 0));
  CHECK(sgnd::mix_seed(1, 0) != sgnd::mix_seed(1, 1));
  CHECK(sgnd::mix_seed(1, 0) != sgnd::mix_seed(2, 0));
}

TEST_CASE("benchmark covariates have the stated moments") {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd X = sgnd::gen_covariates(rng, 20000);
  REQUIRE(X.cols() == 13);

  // Unit exponential columns.
  for (int j : {1, 11}) {
    CHECK(X.col(j).mean() == Catch::Approx(1.0).margin(0.05));
    CHECK((X.col(j).array() - X.col(j).mean()).square().mean() ==
          Catch::Approx(1.0).margin(0.1));
    CHECK(X.col(j).minCoeff() > 0.0);
  }
  // Bernoulli(0.75) columns.
  for (int j : {3, 10}) {
    CHECK(X.col(j).mean() == Catch::Approx(0.75).margin(0.02));
    for (int i = 0; i < 50; ++i)
      CHECK((X(i, j) == 0.0 || X(i, j) == 1.0));
  }
  // Standard normal columns.
  for (int j : {4, 5, 7, 8}) {
    CHECK(X.col(j).mean() == Catch::Approx(0.0).margin(0.03));
    CHECK(X.col(j).array().square().mean() == Catch::Approx(1.0).margin(0.05));
  }
  // Correlated block (X2, X6, X9, X12): corr 0.5^|j-k| in group positions.
  CHECK(corr(X.col(2), X.col(6)) == Catch::Approx(0.5).margin(0.03));
  CHECK(corr(X.col(6), X.col(9)) == Catch::Approx(0.5).margin(0.03));
  CHECK(corr(X.col(2), X.col(9)) == Catch::Approx(0.25).margin(0.03));
  CHECK(corr(X.col(2), X.col(12)) == Catch::Approx(0.125).margin(0.03));
  // Independent of the rest.
  CHECK(corr(X.col(2), X.col(4)) == Catch::Approx(0.0).margin(0.03));
}

TEST_CASE("generated responses follow the location-scale structure") {
  sgnd::SimScenario sc = sgnd::SimScenario::benchmark(5000, 2.0, 1, 4);
  const sgnd::SgndSampler sampler(
      sgnd::SgndShape{sc.kappa, sc.tau, sc.kappa_min});
  std::mt19937_64 rng(4);
  const sgnd::Dataset d = sgnd::gen_dataset(rng, sc, sampler);
  REQUIRE(d.n() == 5000);
  REQUIRE(d.names.size() == 12);
  CHECK(d.names.front() == "X1");
  CHECK(d.names.back() == "X12");
  // Median residual on the true linear predictor should be near zero.
  Eigen::VectorXd resid = d.y - d.X * sc.beta_true;
  std::sort(resid.begin(), resid.end());
  CHECK(std::abs(resid[2500]) < 0.2);
}

TEST_CASE("metric aggregation matches a hand-worked fixture") {
  sgnd::SimScenario sc;
  sc.n = 10;
  sc.n_reps = 3;
  sc.kappa = 2.0;
  sc.seed = 1;
  sc.beta_true.resize(2);
  sc.beta_true << 0.0, 1.0;
  sc.alpha_true.resize(2);
  sc.alpha_true << 0.0, 0.0;

  std::vector<sgnd::RepOutcome> reps(3);
  // Replicate 0: keeps beta1, zeros alpha1 (true model), flagged breakdown.
  reps[0].rep = 0;
  reps[0].ok = true;
  reps[0].theta.resize(5);
  reps[0].theta << 0.1, 1.2, 0.0, 0.0, -0.2;
  reps[0].se.resize(5);
  reps[0].se << 0.1, 0.1, 0.1, 0.1, 1.0;
  reps[0].quad_beta = 0.04;
  reps[0].quad_alpha = 0.01;
  reps[0].breakdown = true;
  // Replicate 1: keeps a spurious alpha1.
  reps[1].rep = 1;
  reps[1].ok = true;
  reps[1].theta.resize(5);
  reps[1].theta << 0.0, 0.9, 0.0, 0.3, -0.25;
  reps[1].se.resize(5);
  reps[1].se << 0.1, 0.2, 0.1, 0.1, 1.0;
  reps[1].quad_beta = 0.02;
  reps[1].quad_alpha = 0.03;
  // Replicate 2: failed fit, excluded from every average.
  reps[2].rep = 2;
  reps[2].ok = false;
  reps[2].error = "synthetic failure";

  const sgnd::StudyResult res = sgnd::aggregate(sc, reps);
  CHECK(res.failures == 1);
  CHECK(res.beta.correct_zeros == 0.0);
  CHECK(res.beta.incorrect_zeros == 0.0);
  CHECK(res.beta.prob_true_model == 1.0);
  CHECK(res.beta.mse == Catch::Approx(0.03));
  CHECK(res.alpha.correct_zeros == Catch::Approx(0.5));
  CHECK(res.alpha.incorrect_zeros == 0.0);
  CHECK(res.alpha.prob_true_model == Catch::Approx(0.5));
  CHECK(res.alpha.mse == Catch::Approx(0.02));
  CHECK(res.prob_true_joint == Catch::Approx(0.5));
  CHECK(res.breakdown_rate == Catch::Approx(0.5));

  // beta_1: mean 1.05, empirical SD sqrt(0.045), SEE 0.15.
  const sgnd::ParamMetric& b1 = res.params[1];
  CHECK(b1.truth == 1.0);
  CHECK(b1.mean_est == Catch::Approx(1.05));
  CHECK(b1.se_emp == Catch::Approx(std::sqrt(0.045)));
  CHECK(b1.see_avg == Catch::Approx(0.15));
  // |1.2-1| = 0.2 > 1.96*0.1 misses; |0.9-1| = 0.1 <= 1.96*0.2 covers.
  CHECK(b1.coverage == Catch::Approx(0.5));
  CHECK(res.params.back().name == "nu_0");
  CHECK(res.params.back().truth == Catch::Approx(std::log(1.8)));
}

TEST_CASE("study results are identical across seeds reruns and thread counts") {
  sgnd::SimScenario sc = sgnd::SimScenario::benchmark(150, 2.0, 4, 5);
  sgnd::TelescopeConfig cfg;
  cfg.steps = 25;
  const sgnd::StudyResult one = sgnd::run_study(sc, cfg, 1);
  const sgnd::StudyResult again = sgnd::run_study(sc, cfg, 1);
  const sgnd::StudyResult three = sgnd::run_study(sc, cfg, 3);

  REQUIRE(one.params.size() == again.params.size());
  REQUIRE(one.params.size() == three.params.size());
  for (std::size_t j = 0; j < one.params.size(); ++j) {
    CHECK(one.params[j].mean_est == again.params[j].mean_est);
    CHECK(one.params[j].mean_est == three.params[j].mean_est);
    CHECK(one.params[j].se_emp == three.params[j].se_emp);
    CHECK(one.params[j].see_avg == three.params[j].see_avg);
    CHECK(one.params[j].coverage == three.params[j].coverage);
  }
  CHECK(one.beta.prob_true_model == three.beta.prob_true_model);
  CHECK(one.alpha.mse == three.alpha.mse);
  CHECK(one.prob_true_joint == three.prob_true_joint);
}
