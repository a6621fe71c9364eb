#include <doctest.h>

#include <cmath>

#include "roic/diffusion.hpp"
#include "roic/rng.hpp"

using namespace roic;

namespace {

NoiseSchedule paper_schedule() { return build_linear_schedule(1000, 1e-4, 0.02); }

}  // namespace

TEST_CASE("diffuse_label matches the closed form at alpha_bar = 0.25") {
  // betas (0.5, 0.5) give alpha_bar(2) = 0.25 exactly.
  Vector betas(2);
  betas << 0.5, 0.5;
  const NoiseSchedule s = NoiseSchedule::from_betas(betas);
  REQUIRE(s.alpha_bar(2) == 0.25);

  Vector y0(2), eps(2);
  y0 << 1.0, 0.0;
  eps << 1.0, 1.0;
  const Vector y = diffuse_label(y0, 2, eps, s);
  CHECK(y[0] == doctest::Approx(1.3660254).epsilon(1e-7));
  CHECK(y[1] == doctest::Approx(0.8660254).epsilon(1e-7));
  CHECK(y[0] == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-14));
}

TEST_CASE("diffuse_label with zero noise scales y0 by sqrt(alpha_bar)") {
  const NoiseSchedule s = paper_schedule();
  Rng rng(7);
  const Vector y0 = rng.normal_vector(4);
  const Vector zero = Vector::Zero(4);
  for (int t : {1, 17, 500, 1000}) {
    const Vector y = diffuse_label(y0, t, zero, s);
    CHECK((y - std::sqrt(s.alpha_bar(t)) * y0).lpNorm<Eigen::Infinity>() <=
          1e-15);
  }
}

TEST_CASE("diffuse_label validates arguments") {
  const NoiseSchedule s = paper_schedule();
  const Vector y0 = Vector::Zero(3);
  CHECK_THROWS_AS(diffuse_label(y0, 5, Vector::Zero(2), s),
                  std::invalid_argument);
  CHECK_THROWS_AS(diffuse_label(y0, 0, Vector::Zero(3), s), std::out_of_range);
  CHECK_THROWS_AS(diffuse_label(y0, 1001, Vector::Zero(3), s),
                  std::out_of_range);
}

TEST_CASE("stepwise noising composes to the closed form (Monte Carlo)") {
  // Oracle: apply t single-step transitions y_s = sqrt(1-beta_s) y_{s-1}
  // + sqrt(beta_s) eps_s and compare the sample mean of y_t against the
  // closed form sqrt(alpha_bar_t) y0 within 4 sigma / sqrt(N).
  const NoiseSchedule s = build_linear_schedule(60, 1e-3, 0.04);
  const int t = 45;
  const int trials = 10000;
  Vector y0(2);
  y0 << 1.0, 0.0;

  Rng rng(123);
  Vector mean = Vector::Zero(2);
  for (int n = 0; n < trials; ++n) {
    Vector y = y0;
    for (int step = 1; step <= t; ++step) {
      y = std::sqrt(1.0 - s.beta(step)) * y +
          std::sqrt(s.beta(step)) * rng.normal_vector(2);
    }
    mean += y;
  }
  mean /= static_cast<double>(trials);

  const double sigma = std::sqrt(1.0 - s.alpha_bar(t));
  const double tolerance = 4.0 * sigma / std::sqrt(static_cast<double>(trials));
  const Vector expected = std::sqrt(s.alpha_bar(t)) * y0;
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(mean[c] - expected[c]) <= tolerance);
  }
}

TEST_CASE("diffuse_label has the predicted mean and per-component variance") {
  const NoiseSchedule s = build_linear_schedule(200, 1e-3, 0.03);
  const int t = 120;
  const int trials = 20000;
  Vector y0(3);
  y0 << 0.0, 1.0, 0.0;

  Rng rng(99);
  Vector mean = Vector::Zero(3);
  Vector second = Vector::Zero(3);
  for (int n = 0; n < trials; ++n) {
    const Vector y = diffuse_label(y0, t, rng.normal_vector(3), s);
    mean += y;
    second += y.cwiseProduct(y);
  }
  mean /= trials;
  second /= trials;
  const Vector var = second - mean.cwiseProduct(mean);

  const double expected_var = 1.0 - s.alpha_bar(t);
  const double mean_tol =
      4.0 * std::sqrt(expected_var) / std::sqrt(static_cast<double>(trials));
  // Variance estimator sd is roughly var * sqrt(2 / N).
  const double var_tol =
      5.0 * expected_var * std::sqrt(2.0 / static_cast<double>(trials));
  const Vector expected_mean = std::sqrt(s.alpha_bar(t)) * y0;
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(mean[c] - expected_mean[c]) <= mean_tol);
    CHECK(std::abs(var[c] - expected_var) <= var_tol);
  }
}

TEST_CASE("reconstruct_y0 inverts diffuse_label with matching noise") {
  const NoiseSchedule s = paper_schedule();
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = 2 + rng.uniform_int(6);
    const int t = 1 + rng.uniform_int(1000);
    const Vector y0 = rng.normal_vector(C);
    const Vector eps = rng.normal_vector(C);
    const Vector y_t = diffuse_label(y0, t, eps, s);
    const Vector back = reconstruct_y0(y_t, eps, t, s);
    CHECK((back - y0).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("reconstruct_y0 with zero estimate rescales y_t") {
  const NoiseSchedule s = paper_schedule();
  Rng rng(5);
  const Vector y_t = rng.normal_vector(4);
  const Vector zero = Vector::Zero(4);
  for (int t : {1, 250, 1000}) {
    const Vector y0_hat = reconstruct_y0(y_t, zero, t, s);
    CHECK((y0_hat - y_t / std::sqrt(s.alpha_bar(t)))
              .lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("reconstruct_y0 agrees with an independent formula evaluation") {
  const NoiseSchedule s = paper_schedule();
  Rng rng(31);
  const int t = 500;
  const Vector y_t = rng.normal_vector(4);
  const Vector eps_theta = rng.normal_vector(4);
  const Vector got = reconstruct_y0(y_t, eps_theta, t, s);

  // Oracle: recompute alpha_bar from the beta array independently.
  long double abar = 1.0L;
  for (int step = 1; step <= t; ++step) abar *= (1.0L - (long double)s.beta(step));
  for (int c = 0; c < 4; ++c) {
    const double expected =
        (y_t[c] - std::sqrt(1.0 - (double)abar) * eps_theta[c]) /
        std::sqrt((double)abar);
    CHECK(got[c] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("posterior step at t = 1 is deterministic and returns y0_hat") {
  const NoiseSchedule s = paper_schedule();
  const PosteriorCoeffs c = posterior_coeffs(1, s);
  CHECK(c.y0_coef == 1.0);
  CHECK(c.yt_coef == 0.0);
  CHECK(c.sigma == 0.0);

  Rng rng(8);
  const Vector y1 = rng.normal_vector(4);
  const Vector y0_hat = rng.normal_vector(4);
  const Vector zeta = rng.normal_vector(4);
  const Vector out = posterior_step(y1, y0_hat, 1, zeta, s);
  CHECK(out == y0_hat);  // exact
}

TEST_CASE("posterior step with zero zeta returns the posterior mean") {
  const NoiseSchedule s = paper_schedule();
  Rng rng(9);
  const Vector y_t = rng.normal_vector(3);
  const Vector y0_hat = rng.normal_vector(3);
  const Vector zero = Vector::Zero(3);
  const int t = 700;
  const PosteriorCoeffs c = posterior_coeffs(t, s);
  const Vector expected = c.y0_coef * y0_hat + c.yt_coef * y_t;
  CHECK(posterior_step(y_t, y0_hat, t, zero, s) == expected);
}

TEST_CASE("posterior coefficients at t = 2 match the defining fractions") {
  const NoiseSchedule s = paper_schedule();
  const PosteriorCoeffs c = posterior_coeffs(2, s);
  // Oracle: direct recomputation from the beta array.
  const double beta2 = s.beta(2);
  const double abar1 = 1.0 - s.beta(1);
  const double abar2 = abar1 * (1.0 - beta2);
  CHECK(c.y0_coef ==
        doctest::Approx(std::sqrt(abar1) * beta2 / (1.0 - abar2)).epsilon(1e-12));
  CHECK(c.yt_coef == doctest::Approx(std::sqrt(1.0 - beta2) * (1.0 - abar1) /
                                     (1.0 - abar2))
                         .epsilon(1e-12));
  CHECK(c.sigma ==
        doctest::Approx(std::sqrt((1.0 - abar1) / (1.0 - abar2) * beta2))
            .epsilon(1e-12));
}

TEST_CASE("literal variance noise scales zeta by the variance itself") {
  const NoiseSchedule s = paper_schedule();
  const int t = 400;
  const PosteriorCoeffs def = posterior_coeffs(t, s, false);
  const PosteriorCoeffs lit = posterior_coeffs(t, s, true);
  CHECK(def.sigma == doctest::Approx(std::sqrt(s.posterior_var(t))));
  CHECK(lit.sigma == doctest::Approx(s.posterior_var(t)));
  CHECK(def.y0_coef == lit.y0_coef);
  CHECK(def.yt_coef == lit.yt_coef);

  Rng rng(10);
  const Vector y_t = rng.normal_vector(2);
  const Vector y0_hat = rng.normal_vector(2);
  const Vector zeta = Vector::Ones(2);
  const Vector a = posterior_step(y_t, y0_hat, t, zeta, s, false);
  const Vector b = posterior_step(y_t, y0_hat, t, zeta, s, true);
  CHECK((a - b).lpNorm<Eigen::Infinity>() ==
        doctest::Approx(std::abs(def.sigma - lit.sigma)).epsilon(1e-12));
}

TEST_CASE("a perfect noise oracle recovers the one-hot label exactly") {
  // Teacher-forced replay of the reverse chain: at every step the
  // estimator is replaced by the noise implied by the true y0, so
  // y0_hat stays at y0 and the t = 1 step returns it.
  const NoiseSchedule s = build_linear_schedule(200, 1e-4, 0.02);
  Vector y0(4);
  y0.setZero();
  y0[2] = 1.0;

  Rng rng(77);
  Vector y = rng.normal_vector(4);  // arbitrary start
  const Vector zero = Vector::Zero(4);
  for (int t = s.steps(); t >= 1; --t) {
    const Vector eps_true =
        (y - std::sqrt(s.alpha_bar(t)) * y0) / std::sqrt(1.0 - s.alpha_bar(t));
    const Vector y0_hat = reconstruct_y0(y, eps_true, t, s);
    y = posterior_step(y, y0_hat, t, zero, s);
  }
  CHECK((y - y0).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(argmax_lowest(y) == 2);
}

TEST_CASE("simple_loss matches its declared mean reduction") {
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 0.0;
  CHECK(simple_loss(a, a) == 0.0);
  CHECK(simple_loss(a, b) == doctest::Approx(0.5));

  // Batch of 2 with per-example squared-error sums 1 and 3, C = 2.
  Matrix eps(2, 2), eps_theta(2, 2);
  eps << 1.0, 1.0, 0.0, std::sqrt(2.0);
  eps_theta << 0.0, 0.0, 0.0, 0.0;
  CHECK(simple_loss(eps, eps_theta) == doctest::Approx(1.0));
}

TEST_CASE("simple_loss is nonnegative, symmetric, zero iff equal") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = rng.normal_vector(5);
    const Vector b = rng.normal_vector(5);
    const double ab = simple_loss(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == simple_loss(b, a));
    if (a != b) CHECK(ab > 0.0);
    CHECK(simple_loss(a, a) == 0.0);
  }
  CHECK_THROWS_AS(simple_loss(Vector::Zero(3), Vector::Zero(4)),
                  std::invalid_argument);
}
