// Inference tests: BIC against a closed-form Gaussian oracle, degrees of
// freedom, per-variable BIC importance, and bootstrap standard errors.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sgnd/inference.hpp"

namespace {

sgnd::Dataset hetero_data(int n, std::uint64_t seed) {
  // y = 1 + 2 x1 + exp((0.8 x2)/2) * noise; x3 is pure noise.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  sgnd::Dataset d;
  d.X.resize(n, 4);
  d.X.col(0).setOnes();
  for (int j = 1; j <= 3; ++j)
    for (int i = 0; i < n; ++i) d.X(i, j) = gauss(rng);
  d.names = {"x1", "x2", "x3"};
  d.y.resize(n);
  for (int i = 0; i < n; ++i)
    d.y[i] = 1.0 + 2.0 * d.X(i, 1) +
             std::exp(0.8 * d.X(i, 2) / 2.0) * gauss(rng);
  return d;
}

}  // namespace

TEST_CASE("BIC matches the Gaussian closed form on an intercept-only model") {
  // With the shape fixed at 2 and a vanishing smoothing parameter the model
  // is exactly Gaussian, so -2 max-loglik has a closed form.
  const int n = 100;
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  sgnd::Dataset d;
  d.X.resize(n, 1);
  d.X.col(0).setOnes();
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y[i] = gauss(rng);

  const double kappa_min = 0.2;
  sgnd::TelescopeConfig cfg;
  cfg.steps = 3;
  const sgnd::FitResult fit = sgnd::telescope_fit(
      d, sgnd::ModelDesign::mpr(0), /*tau=*/1e-10, kappa_min,
      sgnd::default_lambda(n), cfg, std::nullopt, std::log(2.0 - kappa_min));

  const double ybar = d.y.mean();
  const double sig2 = (d.y.array() - ybar).square().mean();
  const double gauss_loglik =
      -0.5 * n * (std::log(2.0 * M_PI * sig2) + 1.0);
  // Two free parameters remain: the location and scale intercepts.
  CHECK(sgnd::degrees_of_freedom(fit) == 2);
  CHECK(sgnd::bic(fit) ==
        Catch::Approx(-2.0 * gauss_loglik + std::log(100.0) * 2.0)
            .margin(1e-6));
}

TEST_CASE("degrees of freedom count active coefficients and the shape") {
  const sgnd::Dataset d = hetero_data(300, 3);
  sgnd::TelescopeConfig cfg;
  cfg.steps = 40;
  const double lambda = sgnd::default_lambda(d.n());
  const sgnd::FitResult free_fit =
      sgnd::telescope_fit(d, sgnd::ModelDesign::mpr(3), 0.15, 0.2, lambda, cfg);
  const sgnd::FitResult fixed_fit = sgnd::telescope_fit(
      d, sgnd::ModelDesign::mpr(3), 0.15, 0.2, lambda, cfg, std::nullopt,
      free_fit.theta_scaled.nu0);
  CHECK(sgnd::degrees_of_freedom(free_fit) == free_fit.active_count());
  // Fixing the shape at the same value removes exactly one df.
  CHECK(sgnd::degrees_of_freedom(fixed_fit) ==
        fixed_fit.active_count() - 1);
}

TEST_CASE("dropping a strong variable raises the BIC") {
  const sgnd::Dataset d = hetero_data(400, 7);
  sgnd::TelescopeConfig cfg;
  cfg.steps = 40;
  const sgnd::FitResult full =
      sgnd::telescope_fit(d, sgnd::ModelDesign::mpr(3), 0.15, 0.2,
                          sgnd::default_lambda(d.n()), cfg);
  REQUIRE(full.theta.beta[1] != 0.0);  // x1 drives the location

  const sgnd::DeltaBicResult res =
      sgnd::delta_bic(d, full, "x1", sgnd::DropComponent::location, cfg);
  CHECK(res.delta > 10.0);
  CHECK(res.bic_reduced == Catch::Approx(res.bic_full + res.delta));
  // The reduced refit no longer contains x1 in the location component.
  for (int c : res.reduced_fit.design.beta_cols) CHECK(c != 1);
}

TEST_CASE("importance of an unknown or inactive variable is an error") {
  const sgnd::Dataset d = hetero_data(400, 7);
  sgnd::TelescopeConfig cfg;
  cfg.steps = 40;
  const sgnd::FitResult full =
      sgnd::telescope_fit(d, sgnd::ModelDesign::mpr(3), 0.15, 0.2,
                          sgnd::default_lambda(d.n()), cfg);
  CHECK_THROWS_AS(
      sgnd::delta_bic(d, full, "nope", sgnd::DropComponent::both, cfg),
      sgnd::UnknownCovariate);
  // x3 is pure noise; selection should have removed it everywhere.
  REQUIRE(full.theta.beta[3] == 0.0);
  REQUIRE(full.theta.alpha[3] == 0.0);
  CHECK_THROWS_AS(
      sgnd::delta_bic(d, full, "x3", sgnd::DropComponent::location, cfg),
      sgnd::VariableNotActive);
}

TEST_CASE("bootstrap standard errors are deterministic and positive") {
  const sgnd::Dataset d = hetero_data(200, 13);
  sgnd::TelescopeConfig cfg;
  cfg.steps = 30;
  const double lambda = sgnd::default_lambda(d.n());
  const sgnd::ModelDesign design = sgnd::ModelDesign::mpr(3);
  const sgnd::BootstrapResult a =
      sgnd::bootstrap_se(d, design, 0.15, 0.2, lambda, cfg, /*n_boot=*/5,
                         /*seed=*/99);
  const sgnd::BootstrapResult b =
      sgnd::bootstrap_se(d, design, 0.15, 0.2, lambda, cfg, 5, 99);
  CHECK(a.se == b.se);
  CHECK(a.requested == 5);
  CHECK(a.replicates.rows() == 5 - a.failures);
  CHECK(a.se.size() == 9);  // 4 location + 4 scale + shape
  CHECK((a.se.array() >= 0.0).all());
  // The location intercept and x1 are always kept, so their estimates vary.
  CHECK(a.se[0] > 0.0);
  CHECK(a.se[1] > 0.0);
}

TEST_CASE("normal quantile function matches known values") {
  CHECK(sgnd::normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
  CHECK(sgnd::normal_quantile(0.975) ==
        Catch::Approx(1.959963984540054).margin(1e-9));
  CHECK(sgnd::normal_quantile(0.025) ==
        Catch::Approx(-1.959963984540054).margin(1e-9));
  CHECK(sgnd::normal_quantile(1e-10) < -6.0);
}
