#pragma once

#include <complex>

#include "kroncov/spectral.hpp"
#include "kroncov/stieltjes.hpp"

namespace kroncov {

/// Rectangle contour with vertices (+-u0, +-i v0), counterclockwise.
/// Must strictly enclose the support [-2 a1 b1, 2 a1 b1].
struct ContourSpec {
  double u0 = 0.0;
  double v0 = 1.0;
  int nodes_per_edge = 64;

  /// u0 = support + 0.5, v0 = 1, 64 Gauss-Legendre nodes per edge.
  static ContourSpec standard(const SpectralSystem& system);
};

struct MomentPair {
  double mu = 0.0;
  double sigma2 = 1.0;
};

/// Exact f = x^2 moments: mu = (p+1) lambda_bar + q^{-1}(nu4-3) sum_j s_jj^2,
/// sigma2 = 4 lambda_bar^2 with lambda_bar = q^{-1} tr(sigma_v^2).
/// sigma_v is trace-rescaled first if q^{-1} tr(sigma_v) != 1.
MomentPair closed_form_moments(Eigen::Index p, Eigen::Index q,
                               const SymmetricMatrix& sigma_v, double nu4);

/// The o(1) root of the scalar correction equation at z, located by damped
/// fixed-point iteration from 0. Throws NumericError when the iterate
/// escapes |x| > 1 or the residual stays above 1e-10.
std::complex<double> solve_Yp(const SpectralSystem& system,
                              std::complex<double> z,
                              const StieltjesPoint& stieltjes);

/// The O(1/p) bias of the Stieltjes transform at z (the integrand of the
/// mean-correction contour integral).
std::complex<double> stieltjes_bias(const SpectralSystem& system,
                                    std::complex<double> z);

/// (p / 2 pi i) * contour integral of f(z) * bias(z) dz over the rectangle,
/// by composite Gauss-Legendre on the four edges with node doubling until
/// the relative change is below 1e-6. The imaginary residue must come out
/// below 1e-8 and is discarded.
double mean_correction(const SpectralSystem& system, const SpectralFunction& f,
                       const ContourSpec& contour);

/// Asymptotic variance for A = I:
/// (1/4pi^2) int int f'(t1) f'(t2) H(t1,t2) dt1 dt2 over the semicircle
/// support, where H carries a (nu4-3) separable term plus a log kernel.
/// The log kernel is integrated exactly through its sine-series expansion
/// 2 log|.| = 8 sum_k sin(k th1) sin(k th2) / k in semicircle angle
/// coordinates, which reduces the double integral to sum_k c_k^2 / k.
double variance_general(const SpectralSystem& system, const SpectralFunction& f);

/// Finite-p covariance kernel at (z1, z2) off the support, with the mixed
/// second derivative taken by central complex differences of step
/// 1e-4 |Im z|.
std::complex<double> kernel_Lambda(const SpectralSystem& system,
                                   std::complex<double> z1,
                                   std::complex<double> z2);

/// mu from the semicircle integral minus the contour correction, sigma2
/// from variance_general; the general-f counterpart of closed_form_moments.
MomentPair general_moments(const SpectralSystem& system,
                           const SpectralFunction& f,
                           const ContourSpec& contour);

}  // namespace kroncov
