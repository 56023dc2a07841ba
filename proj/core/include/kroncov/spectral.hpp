#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "kroncov/dataset.hpp"

namespace kroncov {

/// Closed set of spectral test functions. Contour integration requires
/// analyticity in a neighbourhood of the support, which we can check for
/// these tags but not for arbitrary callables; library-internal code may
/// still evaluate any pure real function over a spectrum via lss_custom.
class SpectralFunction {
public:
  enum class Kind { square, cube, exponential, log_shifted, polynomial };

  static SpectralFunction square() { return SpectralFunction(Kind::square); }
  static SpectralFunction cube() { return SpectralFunction(Kind::cube); }
  static SpectralFunction exponential() {
    return SpectralFunction(Kind::exponential);
  }
  /// f(x) = log(shift + x); analytic for |x| < shift.
  static SpectralFunction log_shifted(double shift);
  /// f(x) = c0 + c1 x + ... + ck x^k.
  static SpectralFunction polynomial(std::vector<double> coeffs);

  /// Parses "x2", "x3", "exp", "log:<shift>", "poly:c0,c1,...".
  static SpectralFunction parse(const std::string& text);

  double operator()(double x) const;
  std::complex<double> operator()(std::complex<double> z) const;
  double deriv(double x) const;

  Kind kind() const { return kind_; }
  bool is_square() const { return kind_ == Kind::square; }
  /// Degree when polynomial-representable, -1 otherwise.
  int polynomial_degree() const;
  /// Throws ConfigError if f is not analytic on |x| <= radius.
  void require_analytic_on(double radius) const;
  std::string name() const;

private:
  explicit SpectralFunction(Kind kind) : kind_(kind) {}
  Kind kind_;
  double shift_ = 0.0;
  std::vector<double> coeffs_;
};

/// Symmetric square root / inverse square root via eigendecomposition.
/// Eigenvalues below rel_tol * lambda_max are an error, not a pseudo-inverse.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-12);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

/// Left-multiplies every observation by sigma_u0^{-1/2}.
/// Throws NumericError when sigma_u0 has min eigenvalue <= 1e-10 * max.
MatrixDataset whiten(const MatrixDataset& dataset,
                     const SymmetricMatrix& sigma_u0);

/// S_tilde = sqrt(Tq/p) * { (Tq)^{-1} sum_t Y_t Y_t' - I }, the renormalized
/// column-column sample covariance centered at the null.
SymmetricMatrix renormalized_cov(const MatrixDataset& dataset);

/// sum_j f(lambda_j(S)). The f = x^2 path is eigendecomposition-free.
double lss(const SymmetricMatrix& s, const SpectralFunction& f);

/// Eigenvalues of a symmetric matrix, descending.
Eigen::VectorXd sym_eigenvalues(const SymmetricMatrix& s);

/// Integral of f against the rescaled semicircle density
/// h(x) = (2 pi lambda_bar)^{-1} sqrt(4 lambda_bar - x^2) on
/// [-2 sqrt(lambda_bar), 2 sqrt(lambda_bar)]. Gauss-Chebyshev quadrature,
/// exact for polynomial f up to degree 64; adaptive to 1e-10 otherwise.
double semicircle_integral(const SpectralFunction& f, double lambda_bar);

/// CDF of the same semicircle law (used by distribution diagnostics).
double semicircle_cdf(double x, double lambda_bar);

}  // namespace kroncov
