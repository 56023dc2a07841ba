#pragma once

#include <filesystem>
#include <vector>

#include "kroncov/dataset.hpp"
#include "kroncov/rng.hpp"
#include "kroncov/test_engine.hpp"

namespace kroncov {

struct BootstrapResult {
  std::vector<double> replicates;  // ordered by replicate index
  // alpha -> (c*_{alpha/2}, c*_{1-alpha/2}), type-7 interpolated
  std::vector<double> alpha;
  std::vector<std::pair<double, double>> quantiles;
  int B = 0;
  double nu4_used = 3.0;
  double lambda_bar_used = 1.0;
};

/// i.i.d. draws with moments (0, 1, 0, nu4) from the Pearson system.
std::vector<double> pearson_variates(double nu4, std::size_t count,
                                     RngStream& rng);

struct BootstrapDims {
  Eigen::Index T, p, q;
};

/// B independent replicates of K* = sum_j f(lambda_j(S*)) - p int f hhat,
/// with S* = sqrt(Tq/p) { (Tq)^{-1} sum_t Z_t sigma_v_hat Z_t' - I } built
/// from fresh Pearson entries. sigma_v_hat is trace-rescaled on entry; its
/// symmetric square root is computed once. f = x^2 avoids the eigensolver.
BootstrapResult bootstrap_distribution(const SymmetricMatrix& sigma_v_hat,
                                       double nu4_hat, BootstrapDims dims,
                                       int B, const SpectralFunction& f,
                                       std::uint64_t seed,
                                       const std::vector<double>& alpha,
                                       int threads = 1);

/// Algorithm-2 test: computes K from the data, bootstraps the null
/// distribution with known (config.known) or estimated nuisance parameters,
/// and rejects outside (c*_{a/2}, c*_{1-a/2}).
TestReport run_bootstrap_test(const MatrixDataset& dataset,
                              const SymmetricMatrix& sigma_null,
                              const TestConfig& config, int B,
                              std::uint64_t seed, int threads = 1);

/// Single-column CSV dump of the replicate sequence.
void write_replicates_csv(const std::filesystem::path& path,
                          const BootstrapResult& result);

/// Type-7 quantile (linear interpolation of order statistics) of sorted
/// values.
double quantile_type7(const std::vector<double>& sorted, double prob);

}  // namespace kroncov
