#include "kroncov/noise.hpp"

#include <cmath>

#include "kroncov/errors.hpp"
#include "kroncov/spectral.hpp"

namespace kroncov {

namespace {

// Spectral summaries of sigma_u0 shared by the noised formulas.
struct U0Summary {
  Eigen::MatrixXd inv;        // Sigma_U0^{-1}
  Eigen::MatrixXd inv_sqrt;   // Sigma_U0^{-1/2}
  Eigen::MatrixXd sqrt;       // Sigma_U0^{1/2}
  double lambda_inv = 0;      // p^{-1} tr inv
  double lambda_inv2 = 0;     // p^{-1} tr inv^2
  double diag_inv2_mean = 0;  // p^{-1} sum_j inv_jj^2
  double one_quad = 0;        // p^{-1} 1' Sigma_U0 1
  double one_quad_inv = 0;    // 1' inv 1 (unnormalized)
};

U0Summary summarize_u0(const SymmetricMatrix& sigma_u0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_u0.mat());
  if (eig.info() != Eigen::Success)
    throw NumericError("sigma_u0 eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double lmax = vals.maxCoeff();
  if (!(lmax > 0) || vals.minCoeff() < 1e-10 * lmax)
    throw NumericError("sigma_u0 not positive definite");
  const Eigen::Index p = sigma_u0.dim();
  const auto& v = eig.eigenvectors();
  U0Summary s;
  s.inv = v * vals.cwiseInverse().asDiagonal() * v.transpose();
  s.inv_sqrt = v * vals.array().rsqrt().matrix().asDiagonal() * v.transpose();
  s.sqrt = v * vals.array().sqrt().matrix().asDiagonal() * v.transpose();
  s.lambda_inv = vals.cwiseInverse().sum() / static_cast<double>(p);
  s.lambda_inv2 = vals.cwiseInverse().squaredNorm() / static_cast<double>(p);
  s.diag_inv2_mean = s.inv.diagonal().squaredNorm() / static_cast<double>(p);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
  s.one_quad = ones.dot(sigma_u0.mat() * ones) / static_cast<double>(p);
  s.one_quad_inv = ones.dot(s.inv * ones);
  return s;
}

// Asymptotic variance of tr(S_bar^2) under the noised null. The sigma^6
// cross term is lambda_inv * lambda_inv2; it degenerates to lambda_inv^2
// only when Sigma_U0 = I.
double sigma_tilde2_display(double lambda_v2, double sigma_beta2,
                            double lambda_inv, double lambda_inv2) {
  const double s2 = sigma_beta2;
  const double s4 = s2 * s2;
  const double s8 = s4 * s4;
  return 4.0 * lambda_v2 * lambda_v2 + 4.0 * s8 * lambda_inv2 * lambda_inv2 +
         8.0 * s4 * (lambda_inv * lambda_inv + lambda_inv2 +
                     lambda_inv * lambda_inv * lambda_v2) +
         16.0 * s2 * (lambda_inv * lambda_v2 + s4 * lambda_inv * lambda_inv2);
}

double b0_display(Eigen::Index T, Eigen::Index q, double sigma_beta2,
                  double lambda_inv, double lambda_inv2) {
  const double s4 = sigma_beta2 * sigma_beta2;
  return static_cast<double>(q) / static_cast<double>(T) *
         (s4 * lambda_inv2 + 1.0 + 2.0 * sigma_beta2 * lambda_inv);
}

}  // namespace

std::pair<MatrixDataset, double> remove_common_noise(
    const MatrixDataset& dataset) {
  MatrixDataset out = dataset;
  double acc = 0;
  for (Eigen::Index t = 0; t < out.num_obs(); ++t) {
    auto block = out.observation(t);
    const double common = block.mean();
    block.array() -= common;
    acc += common * common;
  }
  return {std::move(out), acc / static_cast<double>(dataset.num_obs())};
}

NoiseEstimates sigma_beta2_from_omega(const Eigen::MatrixXd& reshaped_omega) {
  const Eigen::Index p = reshaped_omega.rows();
  const Eigen::Index q = reshaped_omega.cols();

  Eigen::MatrixXd centered = reshaped_omega;
  centered.rowwise() -= reshaped_omega.colwise().mean();
  centered.colwise() -= centered.rowwise().mean().eval();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double leading = svd.singularValues()[0];
  if (leading < 1e-8 * reshaped_omega.norm())
    throw NumericError(
        "noise variance not identifiable: centered second-moment matrix is "
        "numerically rank deficient (diagonal factors proportional to 1)");

  Eigen::VectorXd u = svd.matrixU().col(0);
  Eigen::VectorXd v = svd.matrixV().col(0);
  Eigen::Index imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  if (u[imax] < 0) {
    u = -u;
    v = -v;
  }

  const Eigen::VectorXd ones_p = Eigen::VectorXd::Ones(p);
  const Eigen::VectorXd ones_q = Eigen::VectorXd::Ones(q);
  const double pq = static_cast<double>(p * q);
  const double one_omega_one = ones_p.dot(reshaped_omega * ones_q);
  const double u_omega_v = u.dot(reshaped_omega * v);
  const double one_omega_v = ones_p.dot(reshaped_omega * v);
  const double u_omega_one = u.dot(reshaped_omega * ones_q);

  NoiseEstimates est;
  est.reshaped_omega = reshaped_omega;
  est.u_hat = std::move(u);
  est.v_hat = std::move(v);
  est.sigma_beta2_hat =
      one_omega_one / pq - (one_omega_v * u_omega_one) / (pq * u_omega_v);
  return est;
}

NoiseEstimates estimate_sigma_beta(const MatrixDataset& hat_dataset) {
  const Eigen::Index p = hat_dataset.rows();
  const Eigen::Index q = hat_dataset.cols();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, q);
  for (Eigen::Index t = 0; t < hat_dataset.num_obs(); ++t)
    omega += hat_dataset.observation(t).array().square().matrix();
  omega /= static_cast<double>(hat_dataset.num_obs());
  return sigma_beta2_from_omega(omega);
}

SymmetricMatrix noise_normalization(const SymmetricMatrix& sigma_u0,
                                    double sigma_beta2, double one_v_quadform,
                                    Eigen::Index q) {
  const U0Summary u0 = summarize_u0(sigma_u0);
  const Eigen::Index p = sigma_u0.dim();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
  const Eigen::VectorXd r = u0.inv_sqrt * ones;  // Sigma_U0^{-1/2} 1
  const Eigen::VectorXd a = u0.sqrt * ones;      // Sigma_U0^{1/2} 1
  const double pq = static_cast<double>(p * q);

  Eigen::MatrixXd e0 = Eigen::MatrixXd::Identity(p, p);
  e0 += sigma_beta2 * u0.inv;
  e0 += (u0.one_quad * one_v_quadform - sigma_beta2) / pq * (r * r.transpose());
  e0 -= one_v_quadform / pq *
        (a * r.transpose() + r * a.transpose());
  return SymmetricMatrix(std::move(e0), 1e-8);
}

NoisedMoments noised_moments(Eigen::Index p, Eigen::Index q,
                             const SymmetricMatrix& sigma_v,
                             const SymmetricMatrix& sigma_u0, double nu4,
                             double nu4_noise, double sigma_beta2,
                             Eigen::Index T) {
  const U0Summary u0 = summarize_u0(sigma_u0);
  const double lambda_v2 =
      sigma_v.mat().squaredNorm() / static_cast<double>(q);
  const double diag_v2 =
      sigma_v.mat().diagonal().squaredNorm() / static_cast<double>(q);
  const double s2 = sigma_beta2;
  const double s4 = s2 * s2;

  NoisedMoments out;
  out.mu_tilde = (nu4 - 3.0) * diag_v2 +
                 (static_cast<double>(p) + 1.0) * lambda_v2 +
                 2.0 * (static_cast<double>(p) + 1.0) * s2 * u0.lambda_inv +
                 s4 * ((nu4_noise - 3.0) * u0.diag_inv2_mean + u0.lambda_inv2 +
                       static_cast<double>(p) * u0.lambda_inv * u0.lambda_inv);
  out.sigma_tilde2 =
      sigma_tilde2_display(lambda_v2, s2, u0.lambda_inv, u0.lambda_inv2);
  out.b0 = b0_display(T, q, s2, u0.lambda_inv, u0.lambda_inv2);
  return out;
}

void NoiseTestConfig::validate() const {
  if (alpha.empty()) throw ConfigError("at least one alpha level required");
  for (double a : alpha)
    if (!(a > 0 && a < 1))
      throw ConfigError("alpha levels must lie strictly in (0,1)");
  if (mode == NoiseMode::FG) {
    if (!sigma_v || !nu4 || !nu4_noise || !sigma_beta2)
      throw ConfigError(
          "FG mode needs sigma_v, nu4, nu4_noise and sigma_beta2");
  } else if (mode == NoiseMode::PG) {
    if (!sigma_beta2) throw ConfigError("PG mode needs sigma_beta2");
  }
}

TestReport run_noised_test(const MatrixDataset& dataset,
                           const SymmetricMatrix& sigma_u0,
                           const NoiseTestConfig& config) {
  config.validate();
  const Eigen::Index T = dataset.num_obs();
  const Eigen::Index p = dataset.rows();
  const Eigen::Index q = dataset.cols();
  if (sigma_u0.dim() != p)
    throw ConfigError("sigma_u0 dimension does not match data");

  auto [hat_ds, sigma_alpha2_hat] = remove_common_noise(dataset);
  const U0Summary u0 = summarize_u0(sigma_u0);

  TestReport report;
  report.method = "noised";
  report.alpha = config.alpha;
  report.T = T;
  report.p = p;
  report.q = q;
  report.diagnostics["sigma_alpha2_hat"] = sigma_alpha2_hat;
  report.diagnostics["mode"] = static_cast<double>(config.mode);

  // sigma_beta^2: true value (FG/PG) or estimated (FE), clamped at 0.
  double sigma_beta2;
  if (config.mode == NoiseMode::FE) {
    const NoiseEstimates est = estimate_sigma_beta(hat_ds);
    sigma_beta2 = est.sigma_beta2_hat;
    report.diagnostics["sigma_beta2_hat_raw"] = sigma_beta2;
    if (sigma_beta2 < 0) {
      sigma_beta2 = 0;
      report.diagnostics["sigma_beta2_clamped"] = 1.0;
    }
  } else {
    sigma_beta2 = *config.sigma_beta2;
  }
  report.diagnostics["sigma_beta2"] = sigma_beta2;

  // Whitened observations Y_t -> Sigma_U0^{-1/2} Y_hat_t.
  MatrixDataset ys(T, p, q);
  ys.stacked().noalias() = u0.inv_sqrt * hat_ds.stacked();

  double mu_tilde, sigma_tilde2, one_v_quadform;
  if (config.mode == NoiseMode::FG) {
    const SymmetricMatrix sigma_v = rescale_trace(*config.sigma_v);
    const Eigen::VectorXd ones_q = Eigen::VectorXd::Ones(q);
    one_v_quadform =
        ones_q.dot(sigma_v.mat() * ones_q) / static_cast<double>(q);
    const NoisedMoments nm =
        noised_moments(p, q, sigma_v, sigma_u0, *config.nu4,
                       *config.nu4_noise, sigma_beta2, T);
    mu_tilde = nm.mu_tilde;
    sigma_tilde2 = nm.sigma_tilde2;
  } else {
    // Plug-in chain: M_Y, the 1'Sigma_V 1 estimator, B0_hat, the
    // lambda_bar estimate and the mu estimator, in that order.
    Eigen::MatrixXd m_y = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index t = 0; t < T; ++t)
      m_y.selfadjointView<Eigen::Lower>().rankUpdate(
          ys.observation(t).transpose(), 1.0);
    m_y.triangularView<Eigen::StrictlyUpper>() =
        m_y.triangularView<Eigen::StrictlyLower>().transpose();
    m_y /= static_cast<double>(T * p);

    const Eigen::VectorXd ones_q = Eigen::VectorXd::Ones(q);
    const double dp = static_cast<double>(p);
    const double one_m_one = ones_q.dot(m_y * ones_q) / static_cast<double>(q);
    one_v_quadform = (one_m_one - sigma_beta2 * u0.lambda_inv +
                      sigma_beta2 * u0.one_quad_inv / (dp * dp)) /
                     (1.0 + u0.one_quad_inv / (dp * dp) * u0.one_quad -
                      2.0 / dp);
    report.diagnostics["one_v_quadform_hat"] = one_v_quadform;

    const double b0 =
        b0_display(T, q, sigma_beta2, u0.lambda_inv, u0.lambda_inv2);
    report.diagnostics["b0_hat"] = b0;
    const double s4 = sigma_beta2 * sigma_beta2;
    const double fro = m_y.squaredNorm();
    const double lambda_v2_hat =
        fro / static_cast<double>(q) - b0 / dp -
        (s4 * u0.lambda_inv * u0.lambda_inv +
         2.0 * sigma_beta2 * u0.lambda_inv);
    report.diagnostics["lambda_bar_hat"] = lambda_v2_hat;
    if (!(lambda_v2_hat > 0))
      throw NumericError("noised lambda_bar estimate non-positive");

    Eigen::VectorXd traces(T);
    for (Eigen::Index t = 0; t < T; ++t)
      traces[t] = ys.observation(t).squaredNorm();
    const double mean_trace = traces.mean();
    const double svar = (traces.array() - mean_trace).square().sum() /
                        (static_cast<double>(T * p) * static_cast<double>(q));

    mu_tilde = (dp - 1.0) / dp *
                   ((dp / static_cast<double>(q)) * fro - b0) +
               svar + s4 * u0.lambda_inv * u0.lambda_inv - s4 * u0.lambda_inv2;
    sigma_tilde2 = sigma_tilde2_display(lambda_v2_hat, sigma_beta2,
                                        u0.lambda_inv, u0.lambda_inv2);
  }
  report.diagnostics["mu_tilde"] = mu_tilde;
  report.diagnostics["sigma_tilde2"] = sigma_tilde2;
  if (!(sigma_tilde2 > 0))
    throw NumericError("noised variance must be positive");

  const SymmetricMatrix e0 =
      noise_normalization(sigma_u0, sigma_beta2, one_v_quadform, q);

  const double n = static_cast<double>(T * q);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(p, p);
  w.selfadjointView<Eigen::Lower>().rankUpdate(ys.stacked(), 1.0 / n);
  w.triangularView<Eigen::StrictlyUpper>() =
      w.triangularView<Eigen::StrictlyLower>().transpose();
  w -= e0.mat();
  const double tr_s2 = (n / static_cast<double>(p)) * w.squaredNorm();
  report.diagnostics["tr_s_bar2"] = tr_s2;

  report.mu = mu_tilde;
  report.sigma = std::sqrt(sigma_tilde2);
  report.statistic = (tr_s2 - mu_tilde) / report.sigma;
  report.p_value = pvalue_two_sided(report.statistic);
  for (double a : config.alpha) report.reject.push_back(*report.p_value < a);
  return report;
}

}  // namespace kroncov
