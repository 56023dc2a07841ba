#include "kroncov/spectral.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kroncov/errors.hpp"

namespace kroncov {

namespace {

std::vector<double> parse_coeff_list(const std::string& text) {
  std::vector<double> coeffs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad polynomial coefficient '" + item + "'");
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos])))
      ++pos;
    if (pos != item.size())
      throw ConfigError("bad polynomial coefficient '" + item + "'");
    coeffs.push_back(v);
  }
  if (coeffs.empty()) throw ConfigError("empty polynomial coefficient list");
  return coeffs;
}

template <typename Scalar>
Scalar horner(const std::vector<double>& coeffs, Scalar x) {
  Scalar acc = Scalar(0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = acc * x + Scalar(*it);
  return acc;
}

}  // namespace

SpectralFunction SpectralFunction::log_shifted(double shift) {
  if (!(shift > 0)) throw ConfigError("log_shifted requires shift > 0");
  SpectralFunction f(Kind::log_shifted);
  f.shift_ = shift;
  return f;
}

SpectralFunction SpectralFunction::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw ConfigError("polynomial needs coefficients");
  SpectralFunction f(Kind::polynomial);
  f.coeffs_ = std::move(coeffs);
  return f;
}

SpectralFunction SpectralFunction::parse(const std::string& text) {
  if (text == "x2") return square();
  if (text == "x3") return cube();
  if (text == "exp") return exponential();
  if (text.rfind("log:", 0) == 0) {
    try {
      return log_shifted(std::stod(text.substr(4)));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad log shift in '" + text + "'");
    }
  }
  if (text.rfind("poly:", 0) == 0)
    return polynomial(parse_coeff_list(text.substr(5)));
  throw ConfigError("unknown spectral function '" + text +
                    "' (expected x2, x3, exp, log:<shift>, poly:c0,c1,...)");
}

double SpectralFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::square: return x * x;
    case Kind::cube: return x * x * x;
    case Kind::exponential: return std::exp(x);
    case Kind::log_shifted: return std::log(shift_ + x);
    case Kind::polynomial: return horner(coeffs_, x);
  }
  return 0;
}

std::complex<double> SpectralFunction::operator()(std::complex<double> z) const {
  switch (kind_) {
    case Kind::square: return z * z;
    case Kind::cube: return z * z * z;
    case Kind::exponential: return std::exp(z);
    case Kind::log_shifted: return std::log(shift_ + z);
    case Kind::polynomial: return horner(coeffs_, z);
  }
  return 0;
}

double SpectralFunction::deriv(double x) const {
  switch (kind_) {
    case Kind::square: return 2 * x;
    case Kind::cube: return 3 * x * x;
    case Kind::exponential: return std::exp(x);
    case Kind::log_shifted: return 1.0 / (shift_ + x);
    case Kind::polynomial: {
      double acc = 0;
      for (std::size_t k = coeffs_.size(); k-- > 1;)
        acc = acc * x + coeffs_[k] * static_cast<double>(k);
      return acc;
    }
  }
  return 0;
}

int SpectralFunction::polynomial_degree() const {
  switch (kind_) {
    case Kind::square: return 2;
    case Kind::cube: return 3;
    case Kind::polynomial: {
      int deg = 0;
      for (std::size_t k = 0; k < coeffs_.size(); ++k)
        if (coeffs_[k] != 0.0) deg = static_cast<int>(k);
      return deg;
    }
    default: return -1;
  }
}

void SpectralFunction::require_analytic_on(double radius) const {
  if (kind_ == Kind::log_shifted && shift_ <= radius)
    throw ConfigError("log shift " + std::to_string(shift_) +
                      " does not cover spectral radius " +
                      std::to_string(radius));
}

std::string SpectralFunction::name() const {
  switch (kind_) {
    case Kind::square: return "x2";
    case Kind::cube: return "x3";
    case Kind::exponential: return "exp";
    case Kind::log_shifted: return "log:" + std::to_string(shift_);
    case Kind::polynomial: {
      std::string s = "poly:";
      for (std::size_t k = 0; k < coeffs_.size(); ++k) {
        if (k) s += ',';
        s += std::to_string(coeffs_[k]);
      }
      return s;
    }
  }
  return "?";
}

namespace {

Eigen::MatrixXd sym_power(const Eigen::MatrixXd& m, double rel_tol,
                          double exponent, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericError(std::string(what) + ": eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double lmax = vals.maxCoeff();
  if (!(lmax > 0))
    throw NumericError(std::string(what) + ": matrix is not positive definite");
  if (vals.minCoeff() < rel_tol * lmax)
    throw NumericError(std::string(what) +
                       ": matrix is numerically singular (min eigenvalue " +
                       std::to_string(vals.minCoeff()) + ")");
  Eigen::VectorXd powered =
      vals.array().pow(exponent).matrix();
  return eig.eigenvectors() * powered.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, double rel_tol) {
  return sym_power(m, rel_tol, 0.5, "sym_sqrt");
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m, double rel_tol) {
  return sym_power(m, rel_tol, -0.5, "sym_inv_sqrt");
}

MatrixDataset whiten(const MatrixDataset& dataset,
                     const SymmetricMatrix& sigma_u0) {
  if (sigma_u0.dim() != dataset.rows())
    throw ConfigError("whiten: sigma_u0 dimension " +
                      std::to_string(sigma_u0.dim()) +
                      " does not match row dimension " +
                      std::to_string(dataset.rows()));
  const Eigen::MatrixXd w = sym_inv_sqrt(sigma_u0.mat(), 1e-10);
  MatrixDataset out(dataset.num_obs(), dataset.rows(), dataset.cols());
  out.stacked().noalias() = w * dataset.stacked();
  return out;
}

SymmetricMatrix renormalized_cov(const MatrixDataset& dataset) {
  const Eigen::Index p = dataset.rows();
  const double n = static_cast<double>(dataset.num_obs() * dataset.cols());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  s.selfadjointView<Eigen::Lower>().rankUpdate(dataset.stacked(), 1.0 / n);
  s.triangularView<Eigen::StrictlyUpper>() =
      s.triangularView<Eigen::StrictlyLower>().transpose();
  s.diagonal().array() -= 1.0;
  s *= std::sqrt(n / static_cast<double>(p));
  return SymmetricMatrix(std::move(s));
}

double lss(const SymmetricMatrix& s, const SpectralFunction& f) {
  if (f.is_square()) return s.mat().squaredNorm();
  const Eigen::VectorXd vals = sym_eigenvalues(s);
  double acc = 0;
  for (Eigen::Index j = 0; j < vals.size(); ++j) acc += f(vals[j]);
  return acc;
}

Eigen::VectorXd sym_eigenvalues(const SymmetricMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.mat(),
                                                     Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericError("symmetric eigensolver failed");
  return eig.eigenvalues().reverse();
}

double semicircle_integral(const SpectralFunction& f, double lambda_bar) {
  if (!(lambda_bar > 0))
    throw ConfigError("semicircle_integral requires lambda_bar > 0");
  const double radius = 2.0 * std::sqrt(lambda_bar);

  // x = radius * u maps the support to [-1,1] with Chebyshev weight
  // sqrt(1-u^2); an N-node rule is exact for polynomial degree 2N-1.
  // Nodes are paired as +-x so an odd integrand cancels exactly.
  auto chebyshev = [&](int nodes) {
    double acc = 0;
    for (int i = 1; i <= nodes / 2; ++i) {
      const double theta = std::numbers::pi * i / (nodes + 1);
      const double sin_t = std::sin(theta);
      const double x = radius * std::cos(theta);
      acc += sin_t * sin_t * (f(x) + f(-x));
    }
    if (nodes % 2) acc += f(0.0);
    return acc * 2.0 / (nodes + 1);
  };

  const int degree = f.polynomial_degree();
  if (degree >= 0) return chebyshev(std::max(33, (degree + 2) / 2));

  double prev = chebyshev(64);
  for (int nodes = 128; nodes <= 8192; nodes *= 2) {
    const double cur = chebyshev(nodes);
    if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, std::abs(cur)))
      return cur;
    prev = cur;
  }
  throw NumericError("semicircle_integral did not converge");
}

double semicircle_cdf(double x, double lambda_bar) {
  const double radius = 2.0 * std::sqrt(lambda_bar);
  if (x <= -radius) return 0.0;
  if (x >= radius) return 1.0;
  const double u = x / radius;
  return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi;
}

}  // namespace kroncov
