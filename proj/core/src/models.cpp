#include "kroncov/models.hpp"

#include <cmath>

#include "kroncov/errors.hpp"
#include "kroncov/spectral.hpp"

namespace kroncov {

namespace {
constexpr std::uint64_t kRoleX = 0;
constexpr std::uint64_t kRolePhi = 1;
constexpr std::uint64_t kRoleBigPhi = 2;
}  // namespace

EntryLaw EntryLaw::pearson(double nu4) {
  if (nu4 < 1.0)
    throw ConfigError("entry law kurtosis must be >= 1, got " +
                      std::to_string(nu4));
  return {Kind::pearson, nu4};
}

void EntryLaw::fill(RngStream& rng, std::span<double> out) const {
  switch (kind) {
    case Kind::gaussian: rng.fill_normal(out); return;
    case Kind::rademacher: rng.fill_rademacher(out); return;
    case Kind::pearson: fill_pearson(rng, nu4, out); return;
  }
}

void KroneckerModel::validate() const {
  if (u.rows() != u.cols() || v.rows() != v.cols())
    throw ConfigError("model factors U, V must be square");
  if (u.rows() < 1 || v.rows() < 1)
    throw ConfigError("model requires p, q >= 1");
  if (!u.allFinite() || !v.allFinite())
    throw ConfigError("model factors must be finite");
  if (sigma_alpha < 0 || sigma_beta < 0)
    throw ConfigError("noise scales must be nonnegative");
  if (entry_law.nu4 < 1 || noise_law.nu4 < 1)
    throw ConfigError("entry laws require kurtosis >= 1");
}

MatrixDataset generate_dataset(const KroneckerModel& model, Eigen::Index T,
                               std::uint64_t seed) {
  model.validate();
  if (T < 1) throw ConfigError("generate_dataset requires T >= 1");
  const Eigen::Index p = model.p();
  const Eigen::Index q = model.q();
  MatrixDataset ds(T, p, q);
  Eigen::MatrixXd& stacked = ds.stacked();

  const RngStream root(seed);
  for (Eigen::Index t = 0; t < T; ++t) {
    RngStream rng = root.derive({static_cast<std::uint64_t>(t), kRoleX});
    // observation blocks span full columns of the stacked storage, so the
    // draw target is contiguous
    model.entry_law.fill(rng, std::span<double>(
        stacked.data() + t * q * p, static_cast<std::size_t>(p * q)));
    ds.observation(t) = ds.observation(t) * model.v.transpose();
  }
  stacked = model.u * stacked;

  if (model.sigma_alpha > 0) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double phi;
      RngStream rng = root.derive({static_cast<std::uint64_t>(t), kRolePhi});
      model.noise_law.fill(rng, {&phi, 1});
      ds.observation(t).array() += model.sigma_alpha * phi;
    }
  }
  if (model.sigma_beta > 0) {
    Eigen::MatrixXd noise(p, q);
    for (Eigen::Index t = 0; t < T; ++t) {
      RngStream rng = root.derive({static_cast<std::uint64_t>(t), kRoleBigPhi});
      model.noise_law.fill(
          rng, std::span<double>(noise.data(), static_cast<std::size_t>(p * q)));
      ds.observation(t) += model.sigma_beta * noise;
    }
  }
  return ds;
}

Eigen::MatrixXd haar_orthogonal(Eigen::Index n, RngStream& rng) {
  Eigen::MatrixXd g(n, n);
  rng.fill_normal(std::span<double>(g.data(), static_cast<std::size_t>(n * n)));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

SymmetricMatrix sigma_haar_uniform(Eigen::Index n, RngStream& rng) {
  const Eigen::MatrixXd gamma = haar_orthogonal(n, rng);
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = rng.uniform(1.0, 2.0);
  return SymmetricMatrix(gamma * lambda.asDiagonal() * gamma.transpose(),
                         1e-8);
}

SymmetricMatrix sigma_block_pairs(Eigen::Index n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    m(2 * k, 2 * k + 1) = 0.5;
    m(2 * k + 1, 2 * k) = 0.5;
  }
  return SymmetricMatrix(std::move(m));
}

SymmetricMatrix diag_two_point(Eigen::Index n, double c) {
  if (!(c >= 0 && c < 1))
    throw ConfigError("two-point spectrum requires 0 <= c < 1");
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = (i % 2 == 0) ? 1.0 - c : 1.0 + c;
  return SymmetricMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

KroneckerModel alternative_scenarios(const KroneckerModel& base,
                                     AlternativeKind kind, double beta,
                                     RngStream& rng) {
  if (beta < 0) throw ConfigError("alternative perturbation must be >= 0");
  if (beta == 0) return base;
  const Eigen::Index p = base.p();
  Eigen::MatrixXd sigma_u = base.sigma_u();
  if (kind == AlternativeKind::HA1) {
    Eigen::VectorXd gamma(p);
    rng.fill_normal(std::span<double>(gamma.data(), static_cast<std::size_t>(p)));
    sigma_u += (beta / std::sqrt(static_cast<double>(p))) * gamma *
               gamma.transpose();
  } else {
    sigma_u += beta * Eigen::MatrixXd::Identity(p, p);
  }
  KroneckerModel out = base;
  out.u = sym_sqrt(0.5 * (sigma_u + sigma_u.transpose()));
  return out;
}

double alternative_separation(const SymmetricMatrix& sigma_u0,
                              const SymmetricMatrix& sigma_u) {
  const Eigen::MatrixXd w = sym_inv_sqrt(sigma_u0.mat());
  const Eigen::Index p = sigma_u0.dim();
  Eigen::MatrixXd delta = w * sigma_u.mat() * w;
  delta.diagonal().array() -= 1.0;
  return delta.squaredNorm() / static_cast<double>(p);
}

}  // namespace kroncov
