#pragma once

#include <optional>

#include "kroncov/dataset.hpp"
#include "kroncov/test_engine.hpp"

namespace kroncov {

/// Common-noise removal: Y_hat_t = Y_t - (pq)^{-1}(1' Y_t 1) 1 1'.
/// Returns the centered dataset and sigma_alpha2_hat = T^{-1} sum_t of the
/// squared per-observation common components.
std::pair<MatrixDataset, double> remove_common_noise(
    const MatrixDataset& dataset);

struct NoiseEstimates {
  double sigma_alpha2_hat = 0;
  double sigma_beta2_hat = 0;      // raw value; may be slightly negative
  Eigen::MatrixXd reshaped_omega;  // p x q second-moment matrix Re(Omega)
  Eigen::VectorXd u_hat;           // leading left singular vector, _|_ 1_p
  Eigen::VectorXd v_hat;           // leading right singular vector, _|_ 1_q
};

/// sigma_beta^2 from a reshaped second-moment matrix via the rank-one
/// decomposition Re(Omega) = u v' + sigma_beta^2 1 1'. Exposed separately so
/// the identity can be exercised on synthetic inputs.
/// Throws NumericError when the doubly-centered matrix is numerically rank
/// deficient (u or v proportional to 1: not identifiable).
NoiseEstimates sigma_beta2_from_omega(const Eigen::MatrixXd& reshaped_omega);

/// Builds Re(Omega)_ij = T^{-1} sum_t Y_hat_{t,ij}^2 from a common-noise-
/// removed dataset and evaluates the display above.
NoiseEstimates estimate_sigma_beta(const MatrixDataset& hat_dataset);

/// Normalization matrix E0 = q^{-1} E(Y_1 Y_1') under the null, evaluated
/// term by term; one_v_quadform = q^{-1} 1' Sigma_V 1 (known or plug-in).
SymmetricMatrix noise_normalization(const SymmetricMatrix& sigma_u0,
                                    double sigma_beta2, double one_v_quadform,
                                    Eigen::Index q);

struct NoisedMoments {
  double mu_tilde = 0;
  double sigma_tilde2 = 1;
  double b0 = 0;  // bias of the Frobenius functional, q/T * (...)
};

/// Closed-form asymptotic moments of tr(S_bar^2) under the noised null.
NoisedMoments noised_moments(Eigen::Index p, Eigen::Index q,
                             const SymmetricMatrix& sigma_v,
                             const SymmetricMatrix& sigma_u0, double nu4,
                             double nu4_noise, double sigma_beta2,
                             Eigen::Index T);

enum class NoiseMode { FG, PG, FE };  // fully given / sigma_beta given / estimated

struct NoiseTestConfig {
  NoiseMode mode = NoiseMode::FE;
  std::vector<double> alpha = {0.05};
  // FG inputs:
  std::optional<SymmetricMatrix> sigma_v;
  std::optional<double> nu4;
  std::optional<double> nu4_noise;
  // FG and PG:
  std::optional<double> sigma_beta2;

  void validate() const;
};

/// The noised-model test of Sigma_U = sigma_u0: removes the common noise,
/// fixes sigma_beta^2 (given or estimated), normalizes by E0 and compares
/// (tr S_bar^2 - mu~)/sigma~ with the standard normal.
TestReport run_noised_test(const MatrixDataset& dataset,
                           const SymmetricMatrix& sigma_u0,
                           const NoiseTestConfig& config);

}  // namespace kroncov
