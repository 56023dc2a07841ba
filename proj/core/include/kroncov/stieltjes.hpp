#pragma once

#include <Eigen/Dense>
#include <complex>

#include "kroncov/dataset.hpp"

namespace kroncov {

/// Inputs to the asymptotic formulas for the renormalized matrix
/// (np)^{-1/2} { A^{1/2} X B X' A^{1/2} - (tr B) A } with p/n -> 0.
///
/// b_spectrum is a finite sample of the spectral distribution of B: averaging
/// g over it must equal n^{-1} sum_j g(lambda_j(B)). For the matrix-variate
/// case B = I_T (x) Sigma_V, so the q eigenvalues of Sigma_V suffice and
/// n = T q.
struct SpectralSystem {
  Eigen::VectorXd a_spectrum;  // nonincreasing eigenvalues of A (length p)
  Eigen::VectorXd b_spectrum;  // spectral sample of B (any length >= 1)
  double lambda_bar_b2 = 1.0;  // n^{-1} tr(B^2)
  double diag_b2_mean = 1.0;   // n^{-1} sum_j B_jj^2
  Eigen::Index p = 0;
  Eigen::Index n = 0;
  double nu4 = 3.0;

  /// A = I_p (post-whitening null), B = I_T (x) sigma_v.
  static SpectralSystem matrix_variate(Eigen::Index p, Eigen::Index T,
                                       const SymmetricMatrix& sigma_v,
                                       double nu4);
  /// A = I_p and a one-point B spectrum at b = 1 with the stated moments
  /// (lambda_bar == diag mean == 1); used for identity-B settings.
  static SpectralSystem identity(Eigen::Index p, Eigen::Index n, double nu4);

  double a_max() const { return a_spectrum.size() ? a_spectrum[0] : 0.0; }
  double b_max() const { return b_spectrum.maxCoeff(); }
  /// Almost-sure support bound 2 a_1 b_1 for the spectral norm.
  double support_radius() const { return 2.0 * a_max() * b_max(); }

  void validate() const;
};

/// Solution of the coupled Stieltjes equations at one point z.
struct StieltjesPoint {
  std::complex<double> z;
  std::complex<double> m;  // m_p(z)
  std::complex<double> s;  // s_p(z)
};

/// Solves m(z) = -p^{-1} sum_k 1/(z + a_k lambda_bar s(z)),
///        s(z) = -p^{-1} sum_k a_k/(z + a_k lambda_bar s(z))
/// in C+ for Im z > 0 (conjugate symmetry is applied for Im z < 0).
/// Damped fixed point (omega = 0.5) from s0 = -1/z with a complex secant
/// fallback; residual below 1e-12 in max modulus or NumericError.
StieltjesPoint solve_stieltjes(const SpectralSystem& system,
                               std::complex<double> z);

}  // namespace kroncov
