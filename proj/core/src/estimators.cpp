#include "kroncov/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "kroncov/errors.hpp"

namespace kroncov {

namespace {

// (nobs)^{-1} sum over the N x q row-observation matrix blocks of w'w,
// where w are the rows of every Y_t; equals (Tp)^{-1} sum_t Y_t' Y_t.
Eigen::MatrixXd row_covariance(const MatrixDataset& ds) {
  const Eigen::Index q = ds.cols();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index t = 0; t < ds.num_obs(); ++t)
    m.selfadjointView<Eigen::Lower>().rankUpdate(
        ds.observation(t).transpose(), 1.0);
  m.triangularView<Eigen::StrictlyUpper>() =
      m.triangularView<Eigen::StrictlyLower>().transpose();
  m /= static_cast<double>(ds.num_obs() * ds.rows());
  return m;
}

// theta_ij = N^{-1} sum_k (w_ki w_kj - s_ij)^2 = N^{-1} sum_k (w_ki w_kj)^2
// - s_ij^2, with the first term a Gram matrix of the squared data.
Eigen::MatrixXd threshold_variances(const MatrixDataset& ds,
                                    const Eigen::MatrixXd& s) {
  const Eigen::Index q = ds.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index t = 0; t < ds.num_obs(); ++t) {
    const Eigen::MatrixXd sq = ds.observation(t).array().square().matrix();
    g.selfadjointView<Eigen::Lower>().rankUpdate(sq.transpose(), 1.0);
  }
  g.triangularView<Eigen::StrictlyUpper>() =
      g.triangularView<Eigen::StrictlyLower>().transpose();
  g /= static_cast<double>(ds.num_obs() * ds.rows());
  return (g - s.cwiseProduct(s)).cwiseMax(0.0);
}

}  // namespace

NuisanceEstimates estimate_nuisance(const MatrixDataset& whitened) {
  const Eigen::Index T = whitened.num_obs();
  const Eigen::Index p = whitened.rows();
  const Eigen::Index q = whitened.cols();
  const double tp = static_cast<double>(T * p);

  const Eigen::MatrixXd m = row_covariance(whitened);

  NuisanceEstimates est;
  est.tau_hat = m.squaredNorm();
  est.lambda_bar_hat = est.tau_hat / static_cast<double>(q) - static_cast<double>(q) / tp;
  if (!(est.lambda_bar_hat > 0))
    throw NumericError(
        "lambda_bar estimate non-positive after bias correction; T*p too "
        "small relative to q");
  est.sigma2_hat = 4.0 * est.lambda_bar_hat * est.lambda_bar_hat;

  Eigen::VectorXd traces(T);
  Eigen::VectorXd col_sq = Eigen::VectorXd::Zero(q);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto obs = whitened.observation(t);
    traces[t] = obs.squaredNorm();
    col_sq += obs.colwise().squaredNorm().transpose();
  }
  const double mean_trace = traces.mean();
  est.zeta_hat = (traces.array() - mean_trace).square().sum() / tp;
  est.omega_hat = (col_sq / tp).squaredNorm();

  est.mu2_hat = (est.zeta_hat - 2.0 * est.tau_hat) / static_cast<double>(q);
  est.nu4_hat = std::max(
      3.0 + (est.zeta_hat - 2.0 * est.tau_hat) / est.omega_hat, 1.0);
  return est;
}

Eigen::MatrixXd hard_threshold(const Eigen::MatrixXd& s,
                               const Eigen::MatrixXd& theta, double delta,
                               double nobs) {
  const Eigen::Index q = s.rows();
  const double scale = std::log(static_cast<double>(q)) / nobs;
  Eigen::MatrixXd out = s;
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index i = 0; i < q; ++i) {
      if (i == j) continue;
      const double level = delta * std::sqrt(theta(i, j) * scale);
      if (std::abs(s(i, j)) < level) out(i, j) = 0.0;
    }
  }
  return out;
}

SymmetricMatrix estimate_sigma_v(const MatrixDataset& whitened,
                                 SigmaVMethod method) {
  const Eigen::MatrixXd s = row_covariance(whitened);
  if (method == SigmaVMethod::sample)
    return rescale_trace(SymmetricMatrix(s, 1e-8));

  const Eigen::Index T = whitened.num_obs();
  const Eigen::Index p = whitened.rows();
  const Eigen::Index q = whitened.cols();
  const double nobs = static_cast<double>(T * p);
  const Eigen::MatrixXd theta = threshold_variances(whitened, s);

  // 2-fold cross-validation over the delta grid: split the row-observations
  // into even/odd row index within each Y_t, threshold one fold's covariance
  // and score against the other's.
  const Eigen::Index rows_a = (p + 1) / 2;
  const Eigen::Index rows_b = p / 2;
  double best_delta = 0.0;
  if (rows_b >= 1) {
    Eigen::MatrixXd fold_a(T * rows_a, q), fold_b(T * rows_b, q);
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto obs = whitened.observation(t);
      for (Eigen::Index i = 0; i < p; ++i) {
        if (i % 2 == 0)
          fold_a.row(t * rows_a + i / 2) = obs.row(i);
        else
          fold_b.row(t * rows_b + i / 2) = obs.row(i);
      }
    }
    Eigen::MatrixXd sa = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(q, q);
    sa.selfadjointView<Eigen::Lower>().rankUpdate(fold_a.transpose(), 1.0);
    sb.selfadjointView<Eigen::Lower>().rankUpdate(fold_b.transpose(), 1.0);
    for (Eigen::MatrixXd* half : {&sa, &sb})
      half->triangularView<Eigen::StrictlyUpper>() =
          half->triangularView<Eigen::StrictlyLower>().transpose();
    sa /= static_cast<double>(T * rows_a);
    sb /= static_cast<double>(T * rows_b);

    constexpr std::array<double, 5> kGrid = {0.0, 0.5, 1.0, 1.5, 2.0};
    double best_risk = std::numeric_limits<double>::infinity();
    for (double delta : kGrid) {
      const double risk =
          (hard_threshold(sa, theta, delta, static_cast<double>(T * rows_a)) - sb)
              .squaredNorm() +
          (hard_threshold(sb, theta, delta, static_cast<double>(T * rows_b)) - sa)
              .squaredNorm();
      if (risk < best_risk) {
        best_risk = risk;
        best_delta = delta;
      }
    }
  }
  return rescale_trace(
      SymmetricMatrix(hard_threshold(s, theta, best_delta, nobs), 1e-8));
}

}  // namespace kroncov
