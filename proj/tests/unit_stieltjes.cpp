#include "doctest.h"
#include "kroncov/errors.hpp"
#include "kroncov/rng.hpp"
#include "kroncov/stieltjes.hpp"
#include "test_util.hpp"

using namespace kroncov;
using cd = std::complex<double>;

TEST_CASE("A = I solution matches the closed-form quadratic root") {
  const SpectralSystem sys = SpectralSystem::identity(64, 4096, 3.0);
  const StieltjesPoint pt = solve_stieltjes(sys, cd(0, 2));
  const cd expect = testutil::semicircle_stieltjes(cd(0, 2), 1.0);
  CHECK(std::abs(pt.m - expect) < 1e-12);
  CHECK(std::abs(pt.s - expect) < 1e-12);
  // frozen value (sqrt(2)-1) i from the quadratic m^2 + zm + 1 = 0 at z = 2i
  CHECK(pt.m.real() == doctest::Approx(0.0));
  CHECK(pt.m.imag() == doctest::Approx(0.41421356237309515).epsilon(1e-12));
}

TEST_CASE("large |z| behaves like -1/z") {
  SpectralSystem sys = SpectralSystem::identity(32, 1024, 3.0);
  sys.b_spectrum = Eigen::VectorXd::Constant(2, 1.0);
  const cd z(1e6, 0.7);
  const StieltjesPoint pt = solve_stieltjes(sys, z);
  CHECK(std::abs(pt.m - (-1.0 / z)) < 1e-5 * std::abs(1.0 / z));
}

TEST_CASE("homogeneous spectrum a = 2 against a polynomial-root oracle") {
  // m = -1/(z + 2 lambda s), s = 2 m  =>  4 lambda m^2 + z m + 1 = 0
  SpectralSystem sys;
  sys.a_spectrum = Eigen::VectorXd::Constant(50, 2.0);
  sys.b_spectrum = Eigen::VectorXd::Ones(1);
  sys.lambda_bar_b2 = 1.0;
  sys.diag_b2_mean = 1.0;
  sys.p = 50;
  sys.n = 2500;
  sys.nu4 = 3.0;
  const cd z(0, 4);
  const StieltjesPoint pt = solve_stieltjes(sys, z);
  auto [r1, r2] = testutil::quadratic_roots(4.0, z, 1.0);
  const cd m_oracle = r1.imag() > 0 ? r1 : r2;
  CHECK(std::abs(pt.m - m_oracle) < 1e-11);
  CHECK(std::abs(pt.s - 2.0 * m_oracle) < 1e-11);
}

TEST_CASE("conjugate symmetry and C+ mapping") {
  RngStream rng(31);
  SpectralSystem sys;
  Eigen::VectorXd a(40);
  for (int i = 0; i < 40; ++i) a[i] = rng.uniform(1.0, 2.0);
  std::sort(a.data(), a.data() + 40, std::greater<>());
  sys.a_spectrum = a;
  sys.b_spectrum = Eigen::Vector2d(1.5, 0.5);
  sys.lambda_bar_b2 = 1.25;
  sys.diag_b2_mean = 1.0;
  sys.p = 40;
  sys.n = 4000;
  sys.nu4 = 3.0;

  const cd z(1.3, 0.8);
  const StieltjesPoint up = solve_stieltjes(sys, z);
  const StieltjesPoint down = solve_stieltjes(sys, std::conj(z));
  CHECK(std::abs(down.m - std::conj(up.m)) < 1e-13);
  CHECK(std::abs(down.s - std::conj(up.s)) < 1e-13);
  CHECK(up.m.imag() > 0);
  CHECK(up.s.imag() > 0);

  // residuals of both defining equations below 1e-12
  cd rm = up.m, rs = up.s;
  for (int k = 0; k < 40; ++k) {
    rm += (1.0 / (z + a[k] * 1.25 * up.s)) / 40.0;
    rs += (a[k] / (z + a[k] * 1.25 * up.s)) / 40.0;
  }
  CHECK(std::abs(rm) < 1e-12);
  CHECK(std::abs(rs) < 1e-12);
}

TEST_CASE("points near the real axis but off the support still solve") {
  const SpectralSystem sys = SpectralSystem::identity(32, 3200, 3.0);
  // support radius is 2; u0 = 2.5 as on the contour's vertical edges
  const StieltjesPoint pt = solve_stieltjes(sys, cd(2.5, 1e-4));
  CHECK(pt.m.imag() > 0);
  CHECK(std::abs(pt.m - testutil::semicircle_stieltjes(cd(2.5, 1e-4), 1.0)) <
        1e-10);
}

TEST_CASE("invalid inputs") {
  const SpectralSystem sys = SpectralSystem::identity(8, 64, 3.0);
  CHECK_THROWS_AS(solve_stieltjes(sys, cd(1.0, 0.0)), ConfigError);
  SpectralSystem bad = sys;
  bad.lambda_bar_b2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  SpectralSystem increasing = sys;
  increasing.a_spectrum = Eigen::Vector2d(1.0, 2.0);
  increasing.p = 2;
  CHECK_THROWS_AS(increasing.validate(), ConfigError);
}
