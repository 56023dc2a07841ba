#pragma once

#include "kroncov/dataset.hpp"

namespace kroncov {

/// Data-driven nuisance parameters computed from a whitened dataset under
/// the null. sigma2_hat == 4 lambda_bar_hat^2 by construction; nu4_hat is
/// clamped at 1 (the lower kurtosis bound) and has no upper clamp.
struct NuisanceEstimates {
  double lambda_bar_hat = 0;  // estimate of q^{-1} tr(Sigma_V^2)
  double sigma2_hat = 0;
  double nu4_hat = 3;
  double mu2_hat = 0;  // estimate of q^{-1}(nu4-3) sum_j sigma_j^4
  double zeta_hat = 0;
  double tau_hat = 0;
  double omega_hat = 0;
};

/// tau_hat = ||(Tp)^{-1} sum_t Y_t' Y_t||_F^2, lambda_bar_hat = tau_hat/q -
/// q/(Tp) (bias-corrected), zeta/omega per their sample-variance displays.
/// Throws NumericError when the bias correction drives lambda_bar_hat <= 0
/// (T*p too small).
NuisanceEstimates estimate_nuisance(const MatrixDataset& whitened);

enum class SigmaVMethod { sample, thresholded };

/// Column-covariance estimate from the whitened rows, trace-rescaled to
/// q^{-1} tr = 1. The thresholded method applies entrywise adaptive hard
/// thresholding at level delta * sqrt(theta_ij log q / (Tp)) with delta
/// picked from {0, 0.5, 1, 1.5, 2} by 2-fold cross-validated Frobenius risk.
SymmetricMatrix estimate_sigma_v(const MatrixDataset& whitened,
                                 SigmaVMethod method);

/// Thresholding step exposed for tests: hard-threshold off-diagonal entries
/// of s at delta * sqrt(theta_ij * log(q) / nobs).
Eigen::MatrixXd hard_threshold(const Eigen::MatrixXd& s,
                               const Eigen::MatrixXd& theta, double delta,
                               double nobs);

}  // namespace kroncov
