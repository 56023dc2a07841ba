#pragma once

#include <Eigen/Dense>

#include "kroncov/dataset.hpp"
#include "kroncov/rng.hpp"

namespace kroncov {

/// Entry distribution with mean 0, variance 1, skewness 0 and the stated
/// fourth moment; realized through the Pearson system.
struct EntryLaw {
  enum class Kind { gaussian, rademacher, pearson };
  Kind kind = Kind::gaussian;
  double nu4 = 3.0;

  static EntryLaw gaussian() { return {Kind::gaussian, 3.0}; }
  static EntryLaw rademacher() { return {Kind::rademacher, 1.0}; }
  static EntryLaw pearson(double nu4);

  double kurtosis() const { return nu4; }
  void fill(RngStream& rng, std::span<double> out) const;
};

/// Generative spec for Y_t = U X_t V' (+ optional noise terms).
struct KroneckerModel {
  Eigen::MatrixXd u;  // p x p
  Eigen::MatrixXd v;  // q x q
  EntryLaw entry_law = EntryLaw::gaussian();
  double sigma_alpha = 0.0;
  double sigma_beta = 0.0;
  EntryLaw noise_law = EntryLaw::gaussian();  // for both phi_t and Phi_t

  Eigen::Index p() const { return u.rows(); }
  Eigen::Index q() const { return v.rows(); }
  Eigen::MatrixXd sigma_u() const { return u * u.transpose(); }
  Eigen::MatrixXd sigma_v() const { return v * v.transpose(); }

  void validate() const;
};

/// Y_t = U X_t V' + sigma_alpha phi_t 1 1' + sigma_beta Phi_t, t = 0..T-1.
/// Deterministic in (model, T, seed); the per-observation streams are
/// derived as seed -> {t, role} with roles X=0, phi=1, Phi=2.
MatrixDataset generate_dataset(const KroneckerModel& model, Eigen::Index T,
                               std::uint64_t seed);

// -- Named spectral recipes used by the simulation harness ------------------

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R diagonal
/// sign-fixed).
Eigen::MatrixXd haar_orthogonal(Eigen::Index n, RngStream& rng);

/// Gamma Lambda Gamma' with Haar Gamma and Lambda_ii iid Uniform[1,2].
SymmetricMatrix sigma_haar_uniform(Eigen::Index n, RngStream& rng);

/// 1 on the diagonal, 0.5 on the (2k-1, 2k) pairs, 0 elsewhere; satisfies
/// tr/dim == 1 and has eigenvalues {1.5, 0.5} in equal proportion.
SymmetricMatrix sigma_block_pairs(Eigen::Index n);

/// Diagonal matrix with entries alternating 1-c, 1+c (spectrum
/// 0.5 delta_{1-c} + 0.5 delta_{1+c}); used as D^2 in the noised designs.
SymmetricMatrix diag_two_point(Eigen::Index n, double c);

enum class AlternativeKind { HA1, HA2 };

/// Perturbed model for the power studies: HA1 adds a random rank-one
/// spike p^{-1/2} beta gamma gamma' to Sigma_U; HA2 shifts the spectrum
/// by beta. The returned model keeps V, laws and noise levels and uses
/// the symmetric square root of the perturbed Sigma_U. beta == 0 returns
/// the model unchanged.
KroneckerModel alternative_scenarios(const KroneckerModel& base,
                                     AlternativeKind kind, double beta,
                                     RngStream& rng);

/// p^{-1} tr(Sigma_U0^{-1/2} Sigma_U Sigma_U0^{-1/2} - I)^2, the separation
/// that drives the power guarantee.
double alternative_separation(const SymmetricMatrix& sigma_u0,
                              const SymmetricMatrix& sigma_u);

}  // namespace kroncov
