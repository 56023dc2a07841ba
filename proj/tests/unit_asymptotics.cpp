#include "doctest.h"
#include "kroncov/asymptotics.hpp"
#include "kroncov/errors.hpp"
#include "kroncov/models.hpp"
#include "test_util.hpp"

#include <numbers>

using namespace kroncov;
using cd = std::complex<double>;

namespace {

SpectralSystem system_with_lambda(double lambda_bar, double diag_b2,
                                  double nu4) {
  SpectralSystem sys;
  sys.a_spectrum = Eigen::VectorXd::Ones(32);
  sys.b_spectrum = Eigen::VectorXd::Constant(1, std::sqrt(lambda_bar));
  sys.lambda_bar_b2 = lambda_bar;
  sys.diag_b2_mean = diag_b2;
  sys.p = 32;
  sys.n = 320000;
  sys.nu4 = nu4;
  return sys;
}

// Corollary-style A = I reduction, implemented independently: closed-form m
// from the quadratic, then the reduced fixed point for the o(1) root.
cd yp_reduced_oracle(const SpectralSystem& sys, cd z) {
  const double lambda = sys.lambda_bar_b2;
  const cd m = testutil::semicircle_stieltjes(z, lambda);
  const double p = static_cast<double>(sys.p);
  const double root_pn = std::sqrt(p / static_cast<double>(sys.n));
  const cd script_a = (sys.nu4 - 3.0) * sys.diag_b2_mean + lambda +
                      lambda * lambda * m * m / (1.0 - lambda * m * m);
  auto rhs = [&](cd x) {
    const cd d = -m / (1.0 + x * m);
    cd b_term = 0;
    for (Eigen::Index j = 0; j < sys.b_spectrum.size(); ++j) {
      const double b = sys.b_spectrum[j];
      b_term += b * b / (1.0 - b * root_pn * d);
    }
    b_term /= static_cast<double>(sys.b_spectrum.size());
    return ((script_a / p) * m * m * m + m) * lambda + b_term * d;
  };
  cd x = 0;
  for (int it = 0; it < 5000; ++it) x = 0.5 * x + 0.5 * rhs(x);
  return x;
}

}  // namespace

TEST_CASE("closed-form moments examples") {
  SUBCASE("identity sigma_v, gaussian kurtosis") {
    const MomentPair m =
        closed_form_moments(20, 8, SymmetricMatrix::identity(8), 3.0);
    CHECK(m.mu == doctest::Approx(21.0).epsilon(1e-14));
    CHECK(m.sigma2 == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("paired-block sigma_v at p = 100") {
    const MomentPair m = closed_form_moments(100, 50, sigma_block_pairs(50), 3.0);
    CHECK(m.mu == doctest::Approx(126.25).epsilon(1e-14));
    CHECK(m.sigma2 == doctest::Approx(6.25).epsilon(1e-14));
  }
  SUBCASE("paired-block sigma_v, kurtosis 1, p = 20") {
    const MomentPair m = closed_form_moments(20, 50, sigma_block_pairs(50), 1.0);
    CHECK(m.mu == doctest::Approx(24.25).epsilon(1e-14));
    CHECK(m.sigma2 == doctest::Approx(6.25).epsilon(1e-14));
  }
}

TEST_CASE("variance_general equals 4 lambda^2 for f = x^2") {
  for (double lambda : {0.5, 1.0, 1.25, 2.0}) {
    CAPTURE(lambda);
    // diag term irrelevant for x^2 (odd integrand); make it nonzero anyway
    const SpectralSystem sys = system_with_lambda(lambda, 1.0, 5.0);
    CHECK(std::abs(variance_general(sys, SpectralFunction::square()) -
                   4.0 * lambda * lambda) < 1e-8);
  }
}

TEST_CASE("variance_general for f = x against analytics and brute force") {
  const double lambda = 1.25, diag = 1.0, nu4 = 5.0;
  const SpectralSystem sys = system_with_lambda(lambda, diag, nu4);
  const double got = variance_general(sys, SpectralFunction::parse("poly:0,1"));

  // var(sum of eigenvalues) = (nu4-3) diag + 2 lambda from the trace
  // decomposition into independent centered quadratic forms
  const double analytic = (nu4 - 3.0) * diag + 2.0 * lambda;
  CHECK(got == doctest::Approx(analytic).epsilon(1e-8));

  // independent tensor-quadrature oracle on H (log singularity kept off the
  // nodes); loose tolerance, it converges slowly by design
  const double radius = 2.0 * std::sqrt(lambda);
  const int nodes = 400;
  double brute = 0;
  std::vector<double> xs(nodes), ws(nodes);
  for (int i = 0; i < nodes; ++i) {
    // midpoint rule in the semicircle angle; never hits the diagonal exactly
    const double th = std::numbers::pi * (i + 0.5) / nodes;
    xs[i] = radius * std::cos(th);
    ws[i] = std::numbers::pi / nodes * radius * std::sin(th);
  }
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const double t1 = xs[i], t2 = xs[j];
      const double s1 = std::sqrt(radius * radius - t1 * t1);
      const double s2 = std::sqrt(radius * radius - t2 * t2);
      double h = (nu4 - 3.0) * diag / (lambda * lambda) * s1 * s2;
      if (i != j) {
        const double num = 4.0 * lambda - t1 * t2 + s1 * s2;
        const double den = 4.0 * lambda - t1 * t2 - s1 * s2;
        h += 2.0 * std::log(num / den);
      }
      brute += ws[i] * ws[j] * h;
    }
  }
  brute /= 4.0 * std::numbers::pi * std::numbers::pi;
  // the midpoint oracle converges slowly through the log singularity
  CHECK(got == doctest::Approx(brute).epsilon(2e-2));
}

TEST_CASE("variance_general requires A = I") {
  SpectralSystem sys = system_with_lambda(1.0, 1.0, 3.0);
  sys.a_spectrum = Eigen::VectorXd::Constant(32, 2.0);
  CHECK_THROWS_AS(variance_general(sys, SpectralFunction::square()),
                  ConfigError);
}

TEST_CASE("solve_Yp: residual, o(1) scale, and the A = I reduction") {
  SUBCASE("A = I dual-path agreement at z = 3i") {
    for (double nu4 : {1.0, 3.0, 5.0}) {
      CAPTURE(nu4);
      SpectralSystem sys;
      sys.a_spectrum = Eigen::VectorXd::Ones(100);
      sys.b_spectrum = Eigen::Vector2d(1.5, 0.5);
      sys.lambda_bar_b2 = 1.25;
      sys.diag_b2_mean = 1.0;
      sys.p = 100;
      sys.n = 10000;
      sys.nu4 = nu4;
      const cd z(0, 3);
      const StieltjesPoint pt = solve_stieltjes(sys, z);
      const cd yp = solve_Yp(sys, z, pt);
      CHECK(std::abs(yp - yp_reduced_oracle(sys, z)) < 1e-9);
    }
  }

  SUBCASE("o(1) envelope across p with n = p^2") {
    for (Eigen::Index p : {50, 100, 200}) {
      const SpectralSystem sys = SpectralSystem::identity(p, p * p, 3.0);
      const cd z(0, 3);
      const StieltjesPoint pt = solve_stieltjes(sys, z);
      const cd yp = solve_Yp(sys, z, pt);
      const double bound =
          1.0 / static_cast<double>(p) +
          std::sqrt(static_cast<double>(p) / static_cast<double>(p * p));
      CHECK(std::abs(yp) <= 2.0 * bound);
    }
  }
}

TEST_CASE("mean correction reproduces the closed-form center") {
  // master cross-formula check at one cell; the full grid runs in the
  // acceptance suite
  const Eigen::Index p = 100, q = 100, T = 100;
  for (double nu4 : {1.0, 3.0}) {
    CAPTURE(nu4);
    const SymmetricMatrix sigma_v = sigma_block_pairs(q);
    const SpectralSystem sys =
        SpectralSystem::matrix_variate(p, T, sigma_v, nu4);
    const MomentPair closed = closed_form_moments(p, q, sigma_v, nu4);
    const ContourSpec contour = ContourSpec::standard(sys);
    const double mu_contour =
        static_cast<double>(p) *
            semicircle_integral(SpectralFunction::square(), sys.lambda_bar_b2) -
        mean_correction(sys, SpectralFunction::square(), contour);
    CHECK(std::abs(mu_contour - closed.mu) <= 1e-2 * std::abs(closed.mu));
  }
}

TEST_CASE("mean correction is stable under node doubling") {
  const SpectralSystem sys =
      SpectralSystem::matrix_variate(50, 50, sigma_block_pairs(50), 3.0);
  ContourSpec c1 = ContourSpec::standard(sys);
  ContourSpec c2 = c1;
  c2.nodes_per_edge = 128;
  const double a = mean_correction(sys, SpectralFunction::square(), c1);
  const double b = mean_correction(sys, SpectralFunction::square(), c2);
  CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)));
}

TEST_CASE("mean correction validates the contour") {
  const SpectralSystem sys = SpectralSystem::identity(16, 1600, 3.0);
  ContourSpec bad;
  bad.u0 = 1.0;  // support radius is 2
  CHECK_THROWS_AS(mean_correction(sys, SpectralFunction::square(), bad),
                  ConfigError);
  // log shift inside the contour is not analytic there
  const ContourSpec good = ContourSpec::standard(sys);
  CHECK_THROWS_AS(
      mean_correction(sys, SpectralFunction::log_shifted(2.0), good),
      ConfigError);
}

TEST_CASE("kernel_Lambda symmetry, conjugation, and the A = I closed form") {
  SpectralSystem sys;
  RngStream rng(41);
  Eigen::VectorXd a(60);
  for (int i = 0; i < 60; ++i) a[i] = rng.uniform(1.0, 2.0);
  std::sort(a.data(), a.data() + 60, std::greater<>());
  sys.a_spectrum = a;
  sys.b_spectrum = Eigen::Vector2d(1.5, 0.5);
  sys.lambda_bar_b2 = 1.25;
  sys.diag_b2_mean = 1.0;
  sys.p = 60;
  sys.n = 6000;
  sys.nu4 = 2.0;

  const cd z1(0, 3), z2(2, 3);
  const cd k12 = kernel_Lambda(sys, z1, z2);
  const cd k21 = kernel_Lambda(sys, z2, z1);
  CHECK(std::abs(k12 - k21) < 1e-10 * std::max(1.0, std::abs(k12)));
  const cd kc = kernel_Lambda(sys, std::conj(z1), std::conj(z2));
  CHECK(std::abs(kc - std::conj(k12)) < 1e-10 * std::max(1.0, std::abs(k12)));

  SUBCASE("A = I reduction at large p") {
    const double lambda = 1.25;
    SpectralSystem id;
    const Eigen::Index big = 1 << 20;
    id.a_spectrum = Eigen::VectorXd::Ones(big);
    id.b_spectrum = Eigen::Vector2d(1.5, 0.5);
    id.lambda_bar_b2 = lambda;
    id.diag_b2_mean = 1.0;
    id.p = big;
    id.n = big * 100;
    id.nu4 = 2.0;
    const cd got = kernel_Lambda(id, z1, z2);

    const cd m1 = testutil::semicircle_stieltjes(z1, lambda);
    const cd m2 = testutil::semicircle_stieltjes(z2, lambda);
    const cd m1p = m1 * m1 / (1.0 - lambda * m1 * m1);
    const cd m2p = m2 * m2 / (1.0 - lambda * m2 * m2);
    const cd closed =
        m1p * m2p *
        ((id.nu4 - 3.0) * id.diag_b2_mean +
         2.0 * lambda / ((1.0 - lambda * m1 * m2) * (1.0 - lambda * m1 * m2)));
    CHECK(std::abs(got - closed) < 1e-6);
  }
}

TEST_CASE("general_moments ties mu and sigma together") {
  const SpectralSystem sys =
      SpectralSystem::matrix_variate(60, 60, SymmetricMatrix::identity(60), 3.0);
  const MomentPair general = general_moments(sys, SpectralFunction::square(),
                                             ContourSpec::standard(sys));
  const MomentPair closed =
      closed_form_moments(60, 60, SymmetricMatrix::identity(60), 3.0);
  CHECK(std::abs(general.mu - closed.mu) < 1e-2 * closed.mu);
  CHECK(general.sigma2 == doctest::Approx(closed.sigma2).epsilon(1e-8));
}
