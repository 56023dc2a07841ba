#include "doctest.h"
#include "kroncov/errors.hpp"
#include "kroncov/spectral.hpp"
#include "test_util.hpp"

using namespace kroncov;

TEST_CASE("whitening by the identity changes nothing") {
  MatrixDataset ds(2, 3, 2);
  ds.observation(0) << 1, 2, 3, 4, 5, 6;
  ds.observation(1) << .5, -.5, 1.5, -2, 0, 3;
  const MatrixDataset w = whiten(ds, SymmetricMatrix::identity(3));
  CHECK((w.stacked() - ds.stacked()).norm() < 1e-14);
}

TEST_CASE("scalar whitening divides by the square root") {
  MatrixDataset ds(1, 1, 1);
  ds.observation(0)(0, 0) = 6.0;
  const SymmetricMatrix s(Eigen::MatrixXd::Constant(1, 1, 4.0));
  CHECK(whiten(ds, s).observation(0)(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("whitening rejects a singular null hypothesis") {
  MatrixDataset ds(1, 2, 2);
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;  // rank one
  CHECK_THROWS_AS(whiten(ds, SymmetricMatrix(s)), NumericError);
}

TEST_CASE("renormalized covariance scalar case") {
  MatrixDataset ds(1, 1, 1);
  const double y = 1.7;
  ds.observation(0)(0, 0) = y;
  const SymmetricMatrix s = renormalized_cov(ds);
  CHECK(s.mat()(0, 0) == doctest::Approx(y * y - 1.0).epsilon(1e-14));
}

TEST_CASE("renormalized covariance vanishes at an exactly centered dataset") {
  // Y = sqrt(q) I gives (Tq)^{-1} Y Y' = I exactly
  MatrixDataset ds(1, 2, 2);
  ds.observation(0) = std::sqrt(2.0) * Eigen::MatrixXd::Identity(2, 2);
  CHECK(renormalized_cov(ds).mat().norm() < 1e-14);
}

TEST_CASE("lss tag behavior") {
  Eigen::MatrixXd d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  CHECK(lss(SymmetricMatrix(d), SpectralFunction::square()) ==
        doctest::Approx(5.0));

  // Frobenius identity for an arbitrary symmetric matrix
  Eigen::MatrixXd m(3, 3);
  m << 2, -1, .5, -1, 3, 0, .5, 0, 1;
  const SymmetricMatrix sm(m);
  CHECK(lss(sm, SpectralFunction::square()) ==
        doctest::Approx(m.squaredNorm()).epsilon(1e-13));

  CHECK(lss(SymmetricMatrix(Eigen::MatrixXd::Zero(3, 3)),
            SpectralFunction::exponential()) == doctest::Approx(3.0));

  // cube via eigenvalues equals tr(m^3)
  CHECK(lss(sm, SpectralFunction::cube()) ==
        doctest::Approx((m * m * m).trace()).epsilon(1e-12));
}

TEST_CASE("spectral function parsing and evaluation") {
  const SpectralFunction poly = SpectralFunction::parse("poly:1,0,2");
  CHECK(poly(2.0) == doctest::Approx(9.0));
  CHECK(poly.deriv(2.0) == doctest::Approx(8.0));
  CHECK(poly.polynomial_degree() == 2);

  const SpectralFunction lg = SpectralFunction::parse("log:5");
  CHECK(lg(0.0) == doctest::Approx(std::log(5.0)));
  CHECK_THROWS_AS(lg.require_analytic_on(5.5), ConfigError);
  CHECK_NOTHROW(lg.require_analytic_on(4.0));

  CHECK_THROWS_AS(SpectralFunction::parse("sin"), ConfigError);
  CHECK_THROWS_AS(SpectralFunction::parse("poly:1,a"), ConfigError);

  const std::complex<double> z(1.0, 2.0);
  CHECK(std::abs(SpectralFunction::square()(z) - z * z) < 1e-15);
}

TEST_CASE("semicircle integrals") {
  CHECK(semicircle_integral(SpectralFunction::parse("poly:1"), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(semicircle_integral(SpectralFunction::square(), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(semicircle_integral(SpectralFunction::square(), 1.25) ==
        doctest::Approx(1.25).epsilon(1e-13));
  CHECK(semicircle_integral(SpectralFunction::cube(), 1.0) == 0.0);

  // adaptive path against the Simpson oracle
  for (double lambda : {0.5, 1.0, 2.0}) {
    const double radius = 2.0 * std::sqrt(lambda);
    const double oracle = testutil::simpson(
        [&](double x) {
          return std::exp(x) *
                 std::sqrt(std::max(radius * radius - x * x, 0.0)) /
                 (2.0 * std::numbers::pi * lambda);
        },
        -radius, radius);
    CHECK(semicircle_integral(SpectralFunction::exponential(), lambda) ==
          doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("semicircle cdf endpoints and center") {
  CHECK(semicircle_cdf(-3.0, 1.0) == 0.0);
  CHECK(semicircle_cdf(3.0, 1.0) == 1.0);
  CHECK(semicircle_cdf(0.0, 1.7) == doctest::Approx(0.5));
  // fourth moment of the semicircle: int x^4 h = 2 lambda^2
  CHECK(semicircle_integral(SpectralFunction::parse("poly:0,0,0,0,1"), 1.25) ==
        doctest::Approx(2.0 * 1.25 * 1.25).epsilon(1e-12));
}

TEST_CASE("sym_sqrt and sym_inv_sqrt") {
  Eigen::MatrixXd m(2, 2);
  m << 4, 1, 1, 3;
  const Eigen::MatrixXd r = sym_sqrt(m);
  CHECK((r * r - m).norm() < 1e-12);
  const Eigen::MatrixXd w = sym_inv_sqrt(m);
  CHECK((w * m * w - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}
