#include "kroncov/stieltjes.hpp"

#include <algorithm>
#include <cmath>

#include "kroncov/errors.hpp"

namespace kroncov {

using cd = std::complex<double>;

SpectralSystem SpectralSystem::matrix_variate(Eigen::Index p, Eigen::Index T,
                                              const SymmetricMatrix& sigma_v,
                                              double nu4) {
  const Eigen::Index q = sigma_v.dim();
  SpectralSystem sys;
  sys.a_spectrum = Eigen::VectorXd::Ones(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_v.mat(),
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericError("sigma_v eigendecomposition failed");
  sys.b_spectrum = eig.eigenvalues().reverse();
  sys.lambda_bar_b2 = sigma_v.mat().squaredNorm() / static_cast<double>(q);
  sys.diag_b2_mean =
      sigma_v.mat().diagonal().squaredNorm() / static_cast<double>(q);
  sys.p = p;
  sys.n = T * q;
  sys.nu4 = nu4;
  sys.validate();
  return sys;
}

SpectralSystem SpectralSystem::identity(Eigen::Index p, Eigen::Index n,
                                        double nu4) {
  SpectralSystem sys;
  sys.a_spectrum = Eigen::VectorXd::Ones(p);
  sys.b_spectrum = Eigen::VectorXd::Ones(1);
  sys.lambda_bar_b2 = 1.0;
  sys.diag_b2_mean = 1.0;
  sys.p = p;
  sys.n = n;
  sys.nu4 = nu4;
  sys.validate();
  return sys;
}

void SpectralSystem::validate() const {
  if (p < 1 || n < 1) throw ConfigError("SpectralSystem requires p, n >= 1");
  if (a_spectrum.size() != p)
    throw ConfigError("a_spectrum length must equal p");
  if (b_spectrum.size() < 1) throw ConfigError("b_spectrum must be nonempty");
  if (!a_spectrum.allFinite() || !b_spectrum.allFinite())
    throw ConfigError("SpectralSystem spectra must be finite");
  if (a_spectrum.minCoeff() < 0)
    throw ConfigError("a_spectrum must be nonnegative");
  if (!(a_spectrum.maxCoeff() > 0))
    throw ConfigError("a_spectrum must not be identically zero");
  for (Eigen::Index k = 1; k < a_spectrum.size(); ++k)
    if (a_spectrum[k] > a_spectrum[k - 1] + 1e-12)
      throw ConfigError("a_spectrum must be nonincreasing");
  if (!(lambda_bar_b2 > 0)) throw ConfigError("lambda_bar_b2 must be > 0");
  if (diag_b2_mean < 0) throw ConfigError("diag_b2_mean must be >= 0");
  if (nu4 < 1.0) throw ConfigError("nu4 must be >= 1");
}

namespace {

// G(s) = -p^{-1} sum_k a_k / (z + a_k lambda s)
cd s_map(const SpectralSystem& sys, cd z, cd s) {
  const double lambda = sys.lambda_bar_b2;
  cd acc(0, 0);
  for (Eigen::Index k = 0; k < sys.p; ++k) {
    const double a = sys.a_spectrum[k];
    acc += a / (z + a * lambda * s);
  }
  return -acc / static_cast<double>(sys.p);
}

cd m_from_s(const SpectralSystem& sys, cd z, cd s) {
  const double lambda = sys.lambda_bar_b2;
  cd acc(0, 0);
  for (Eigen::Index k = 0; k < sys.p; ++k)
    acc += 1.0 / (z + sys.a_spectrum[k] * lambda * s);
  return -acc / static_cast<double>(sys.p);
}

}  // namespace

StieltjesPoint solve_stieltjes(const SpectralSystem& system, cd z) {
  if (z.imag() == 0.0)
    throw ConfigError("solve_stieltjes requires Im z != 0");
  if (z.imag() < 0.0) {
    StieltjesPoint pt = solve_stieltjes(system, std::conj(z));
    return {z, std::conj(pt.m), std::conj(pt.s)};
  }

  constexpr double kTol = 1e-13;
  constexpr int kMaxIter = 100000;
  const double omega = 0.5;

  cd s = -1.0 / z;
  double resid = std::abs(s - s_map(system, z, s));
  for (int it = 0; it < kMaxIter && resid > kTol; ++it) {
    s = (1.0 - omega) * s + omega * s_map(system, z, s);
    resid = std::abs(s - s_map(system, z, s));
  }

  if (resid > kTol) {
    // secant on F(s) = s - G(s) from the last damped iterate
    cd s0 = s;
    cd s1 = s_map(system, z, s);
    cd f0 = s0 - s_map(system, z, s0);
    cd f1 = s1 - s_map(system, z, s1);
    for (int it = 0; it < 200 && std::abs(f1) > kTol; ++it) {
      const cd denom = f1 - f0;
      if (std::abs(denom) == 0.0) break;
      const cd s2 = s1 - f1 * (s1 - s0) / denom;
      s0 = s1;
      f0 = f1;
      s1 = s2;
      f1 = s1 - s_map(system, z, s1);
    }
    s = s1;
    resid = std::abs(f1);
  }

  const cd m = m_from_s(system, z, s);
  const double resid_m = std::abs(m - m_from_s(system, z, s));
  if (!(std::max(resid, resid_m) < 1e-12))
    throw NumericError(
        "stieltjes fixed point did not converge (z too close to the "
        "support edge; enlarge |Im z| or the contour)");
  if (m.imag() <= 0.0 || s.imag() <= 0.0)
    throw NumericError("stieltjes solution left C+ (Im m = " +
                       std::to_string(m.imag()) + ")");
  return {z, m, s};
}

}  // namespace kroncov
