#include "kroncov/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "kroncov/dataset.hpp"
#include "kroncov/errors.hpp"

namespace kroncov {

using cd = std::complex<double>;

namespace {

struct GaussLegendre {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Newton iteration on the Legendre recurrence.
GaussLegendre gauss_legendre(int n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

// Per-z quantities shared by the correction formulas.
struct BiasWorkspace {
  cd m, s;
  std::vector<cd> eps;   // eps_k = 1/(z + a_k lambda s)
  cd sum_a2_eps2 = 0;    // p^{-1} sum a_k^2 eps_k^2
  cd sum_a2_eps3 = 0;    // p^{-1} sum a_k^2 eps_k^3
  cd sum_a3_eps3 = 0;    // p^{-1} sum a_k^3 eps_k^3
  cd script_a = 0;       // (nu4-3) diag + lambda + B_p(z)
};

BiasWorkspace make_workspace(const SpectralSystem& sys, cd z,
                             const StieltjesPoint& pt) {
  BiasWorkspace w;
  w.m = pt.m;
  w.s = pt.s;
  const double lambda = sys.lambda_bar_b2;
  const double p = static_cast<double>(sys.p);
  w.eps.resize(sys.p);
  cd a2e2 = 0, a2e3 = 0, a3e3 = 0;
  for (Eigen::Index k = 0; k < sys.p; ++k) {
    const double a = sys.a_spectrum[k];
    const cd e = 1.0 / (z + a * lambda * w.s);
    w.eps[k] = e;
    const cd e2 = e * e;
    a2e2 += a * a * e2;
    a2e3 += a * a * e2 * e;
    a3e3 += a * a * a * e2 * e;
  }
  w.sum_a2_eps2 = a2e2 / p;
  w.sum_a2_eps3 = a2e3 / p;
  w.sum_a3_eps3 = a3e3 / p;
  const cd b_p = lambda * lambda * w.sum_a2_eps2 /
                 (1.0 - lambda * w.sum_a2_eps2);
  w.script_a = (sys.nu4 - 3.0) * sys.diag_b2_mean + lambda + b_p;
  return w;
}

// D_{p2}(x, z) = p^{-1} sum_k a_k eps_k / (1 - x a_k eps_k)
cd d_p2(const SpectralSystem& sys, const BiasWorkspace& w, cd x) {
  cd acc = 0;
  for (Eigen::Index k = 0; k < sys.p; ++k) {
    const double a = sys.a_spectrum[k];
    acc += a * w.eps[k] / (1.0 - x * a * w.eps[k]);
  }
  return acc / static_cast<double>(sys.p);
}

cd yp_rhs(const SpectralSystem& sys, const BiasWorkspace& w, cd x) {
  const double lambda = sys.lambda_bar_b2;
  const double p = static_cast<double>(sys.p);
  const double root_pn =
      std::sqrt(p / static_cast<double>(sys.n));
  const cd d = d_p2(sys, w, x);
  cd b_term = 0;
  for (Eigen::Index j = 0; j < sys.b_spectrum.size(); ++j) {
    const double b = sys.b_spectrum[j];
    b_term += b * b * d / (1.0 - b * root_pn * d);
  }
  b_term /= static_cast<double>(sys.b_spectrum.size());
  return lambda * (-(w.script_a / p) * w.sum_a3_eps3 + w.s) + b_term;
}

cd solve_yp_from(const SpectralSystem& sys, const BiasWorkspace& w) {
  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 20000;
  const double omega = 0.5;
  cd x = 0;
  double resid = std::abs(x - yp_rhs(sys, w, x));
  for (int it = 0; it < kMaxIter && resid > kTol; ++it) {
    x = (1.0 - omega) * x + omega * yp_rhs(sys, w, x);
    if (std::abs(x) > 1.0)
      throw NumericError(
          "Y_p iterate escaped |x| > 1: the o(1) root is not isolable at "
          "these dimensions");
    resid = std::abs(x - yp_rhs(sys, w, x));
  }
  if (!(resid < 1e-10))
    throw NumericError("Y_p fixed point did not reach residual 1e-10");
  return x;
}

cd bias_from(const SpectralSystem& sys, const BiasWorkspace& w, cd yp) {
  const double p = static_cast<double>(sys.p);
  cd correction_sum = 0;
  for (Eigen::Index k = 0; k < sys.p; ++k) {
    const double a = sys.a_spectrum[k];
    const cd e = w.eps[k];
    correction_sum += a * e * e / (1.0 - yp * a * e);
  }
  correction_sum /= p;
  return -(w.script_a / p) * w.sum_a2_eps3 - yp * correction_sum;
}

}  // namespace

ContourSpec ContourSpec::standard(const SpectralSystem& system) {
  // The finite-size spectral edge sits beyond the limiting support 2 a1 b1
  // (for B = I it is exactly 2 + sqrt(p/n)), and the correction-term root
  // has a branch point near it, so the rectangle must clear the inflated
  // edge, not just the limit.
  const double inflation =
      1.0 + std::sqrt(static_cast<double>(system.p) /
                      static_cast<double>(system.n));
  ContourSpec c;
  c.u0 = system.support_radius() * inflation + 0.5;
  c.v0 = 1.0;
  c.nodes_per_edge = 64;
  return c;
}

MomentPair closed_form_moments(Eigen::Index p, Eigen::Index q,
                               const SymmetricMatrix& sigma_v, double nu4) {
  if (sigma_v.dim() != q)
    throw ConfigError("closed_form_moments: sigma_v must be q x q");
  const Eigen::MatrixXd* use = &sigma_v.mat();
  Eigen::MatrixXd rescaled;
  const double tr_mean = sigma_v.mat().trace() / static_cast<double>(q);
  if (std::abs(tr_mean - 1.0) > 1e-8) {
    rescaled = sigma_v.mat() / tr_mean;
    use = &rescaled;
  }
  const double lambda = use->squaredNorm() / static_cast<double>(q);
  const double diag2 = use->diagonal().squaredNorm() / static_cast<double>(q);
  MomentPair out;
  out.mu = (static_cast<double>(p) + 1.0) * lambda + (nu4 - 3.0) * diag2;
  out.sigma2 = 4.0 * lambda * lambda;
  return out;
}

cd solve_Yp(const SpectralSystem& system, cd z, const StieltjesPoint& pt) {
  const BiasWorkspace w = make_workspace(system, z, pt);
  return solve_yp_from(system, w);
}

cd stieltjes_bias(const SpectralSystem& system, cd z) {
  const StieltjesPoint pt = solve_stieltjes(system, z);
  const BiasWorkspace w = make_workspace(system, z, pt);
  const cd yp = solve_yp_from(system, w);
  return bias_from(system, w, yp);
}

double mean_correction(const SpectralSystem& system, const SpectralFunction& f,
                       const ContourSpec& contour) {
  const double support = system.support_radius();
  if (!(contour.u0 > support))
    throw ConfigError("contour does not enclose the support: u0 = " +
                      std::to_string(contour.u0) + " <= " +
                      std::to_string(support));
  if (!(contour.v0 > 0)) throw ConfigError("contour requires v0 > 0");
  f.require_analytic_on(contour.u0);

  const double u0 = contour.u0;
  const double v0 = contour.v0;
  // Counterclockwise: bottom, right, top, left. start + t * dir, t in (-1,1).
  const cd corners[4][2] = {
      {cd(0, -v0), cd(u0, 0)},   // bottom: -u0-iv0 -> u0-iv0
      {cd(u0, 0), cd(0, v0)},    // right:   u0-iv0 -> u0+iv0
      {cd(0, v0), cd(-u0, 0)},   // top:     u0+iv0 -> -u0+iv0
      {cd(-u0, 0), cd(0, -v0)},  // left:   -u0+iv0 -> -u0-iv0
  };

  auto integrate = [&](int nodes) {
    const GaussLegendre rule = gauss_legendre(nodes);
    cd acc = 0;
    for (const auto& edge : corners) {
      const cd center = edge[0];
      const cd half = edge[1];
      for (int i = 0; i < nodes; ++i) {
        const cd z = center + rule.nodes[i] * half;
        acc += rule.weights[i] * f(z) * stieltjes_bias(system, z) * half;
      }
    }
    return acc * static_cast<double>(system.p) / (2.0 * std::numbers::pi * cd(0, 1));
  };

  int nodes = std::max(8, contour.nodes_per_edge);
  // Even node counts keep Gauss-Legendre nodes off the real axis on the
  // vertical edges.
  if (nodes % 2) ++nodes;
  cd prev = integrate(nodes);
  for (nodes *= 2; nodes <= 4096; nodes *= 2) {
    const cd cur = integrate(nodes);
    if (std::abs(cur - prev) <= 1e-6 * std::max(1.0, std::abs(cur))) {
      if (!(std::abs(cur.imag()) <= 1e-8 * std::max(1.0, std::abs(cur.real()))))
        throw NumericError("mean_correction: imaginary residue " +
                           std::to_string(cur.imag()));
      return cur.real();
    }
    prev = cur;
  }
  throw NumericError("mean_correction quadrature did not converge");
}

double variance_general(const SpectralSystem& system,
                        const SpectralFunction& f) {
  if ((system.a_spectrum.array() - 1.0).abs().maxCoeff() > 1e-12)
    throw ConfigError("variance_general requires the whitened A = I case");
  const double lambda = system.lambda_bar_b2;
  const double radius = 2.0 * std::sqrt(lambda);

  // Separable (nu4 - 3) part: (1/4pi^2) c (int f'(t) sqrt(4l - t^2) dt)^2.
  auto sqrt_weighted = [&](int nodes) {
    double acc = 0;
    for (int i = 1; i <= nodes; ++i) {
      const double theta = std::numbers::pi * i / (nodes + 1);
      const double sin_t = std::sin(theta);
      acc += sin_t * sin_t * f.deriv(radius * std::cos(theta));
    }
    return acc * radius * radius * std::numbers::pi / (nodes + 1);
  };
  double j_int;
  if (f.polynomial_degree() >= 0) {
    j_int = sqrt_weighted(std::max(33, f.polynomial_degree() + 2));
  } else {
    j_int = sqrt_weighted(64);
    for (int nodes = 128; nodes <= 8192; nodes *= 2) {
      const double cur = sqrt_weighted(nodes);
      if (std::abs(cur - j_int) <= 1e-10 * std::max(1.0, std::abs(cur))) {
        j_int = cur;
        break;
      }
      j_int = cur;
    }
  }
  const double part1 = (system.nu4 - 3.0) * system.diag_b2_mean /
                       (lambda * lambda) * j_int * j_int /
                       (4.0 * std::numbers::pi * std::numbers::pi);

  // Log-kernel part via the sine expansion: with t = radius cos(theta),
  // 2 log|.| = 8 sum_k sin(k th1) sin(k th2)/k, so the double integral is
  // (2/pi^2) sum_k c_k^2 / k with c_k = int_0^pi g(th) sin(k th) dth and
  // g(th) = f'(radius cos th) radius sin th. The discrete sine transform
  // below is exact once g's sine series is resolved.
  auto log_part = [&](int m) {
    std::vector<double> g(m);
    for (int j = 1; j < m; ++j) {
      const double theta = std::numbers::pi * j / m;
      g[j] = f.deriv(radius * std::cos(theta)) * radius * std::sin(theta);
    }
    double acc = 0;
    for (int k = 1; k < m; ++k) {
      double ck = 0;
      for (int j = 1; j < m; ++j)
        ck += g[j] * std::sin(std::numbers::pi * k * j / m);
      ck *= std::numbers::pi / m;
      acc += ck * ck / k;
    }
    return acc * 2.0 / (std::numbers::pi * std::numbers::pi);
  };

  double part2;
  const int degree = f.polynomial_degree();
  if (degree >= 1) {
    part2 = log_part(std::max(degree + 2, 8));
  } else {
    part2 = log_part(128);
    const double refined = log_part(256);
    if (std::abs(refined - part2) > 1e-6 * std::max(1.0, std::abs(refined)))
      throw NumericError("variance_general sine series did not converge");
    part2 = refined;
  }
  return part1 + part2;
}

cd kernel_Lambda(const SpectralSystem& system, cd z1, cd z2) {
  const double h1 = 1e-4 * std::abs(z1.imag());
  const double h2 = 1e-4 * std::abs(z2.imag());
  if (!(h1 > 0) || !(h2 > 0))
    throw NumericError("kernel_Lambda difference step underflow (z on the "
                       "real axis)");

  const double lambda = system.lambda_bar_b2;
  const double p = static_cast<double>(system.p);
  const double extra = (system.nu4 - 3.0) * system.diag_b2_mean + 2.0 * lambda;

  auto theta_sum = [&](cd za, cd zb) {
    const StieltjesPoint pa = solve_stieltjes(system, za);
    const StieltjesPoint pb = solve_stieltjes(system, zb);
    cd prefix = 0;  // sum_{i<k} a_i^2 eps_i(z1) eps_i(z2)
    cd acc = 0;
    for (Eigen::Index k = 0; k < system.p; ++k) {
      const double a = system.a_spectrum[k];
      const cd ea = 1.0 / (za + a * lambda * pa.s);
      const cd eb = 1.0 / (zb + a * lambda * pb.s);
      const cd frac = (2.0 / p) * a * a * lambda * lambda * prefix /
                      (1.0 - (lambda / p) * prefix);
      acc += ea * eb * (frac + a * a * extra);
      prefix += a * a * ea * eb;
    }
    return acc / p;
  };

  const cd fpp = theta_sum(z1 + h1, z2 + h2);
  const cd fpm = theta_sum(z1 + h1, z2 - h2);
  const cd fmp = theta_sum(z1 - h1, z2 + h2);
  const cd fmm = theta_sum(z1 - h1, z2 - h2);
  return (fpp - fpm - fmp + fmm) / (4.0 * h1 * h2);
}

MomentPair general_moments(const SpectralSystem& system,
                           const SpectralFunction& f,
                           const ContourSpec& contour) {
  MomentPair out;
  out.mu = static_cast<double>(system.p) *
               semicircle_integral(f, system.lambda_bar_b2) -
           mean_correction(system, f, contour);
  out.sigma2 = variance_general(system, f);
  if (!(out.sigma2 > 0))
    throw NumericError("asymptotic variance came out non-positive");
  return out;
}

}  // namespace kroncov
