#include "doctest.h"
#include "kroncov/bootstrap.hpp"
#include "kroncov/errors.hpp"
#include "kroncov/models.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>

using namespace kroncov;

TEST_CASE("pearson_variates basic contracts") {
  RngStream rng(61);
  const auto rade = pearson_variates(1.0, 10000, rng);
  double mean = 0;
  for (double v : rade) {
    REQUIRE((v == 1.0 || v == -1.0));
    mean += v;
  }
  CHECK(std::abs(mean / rade.size()) < 0.04);
  CHECK_THROWS_AS(pearson_variates(0.99, 10, rng), ConfigError);
}

TEST_CASE("quantile_type7 interpolates order statistics") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile_type7(x, 0.0) == 1.0);
  CHECK(quantile_type7(x, 1.0) == 4.0);
  CHECK(quantile_type7(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_type7(x, 1.0 / 3.0) == doctest::Approx(2.0));
}

TEST_CASE("bootstrap distribution determinism and shape") {
  const SymmetricMatrix sigma_v = sigma_block_pairs(12);
  const BootstrapDims dims{10, 16, 12};
  const std::vector<double> alpha{0.05, 0.10};
  const BootstrapResult a =
      bootstrap_distribution(sigma_v, 3.0, dims, 128, SpectralFunction::square(),
                             99, alpha);
  const BootstrapResult b =
      bootstrap_distribution(sigma_v, 3.0, dims, 128, SpectralFunction::square(),
                             99, alpha);
  CHECK(a.replicates == b.replicates);

  // quantile monotonicity c_lo <= c_hi
  for (std::size_t i = 0; i < alpha.size(); ++i)
    CHECK(a.quantiles[i].first <= a.quantiles[i].second);

  // thread count must not change the replicate sequence
  const BootstrapResult c =
      bootstrap_distribution(sigma_v, 3.0, dims, 128, SpectralFunction::square(),
                             99, alpha, 3);
  CHECK(a.replicates == c.replicates);

  CHECK_THROWS_AS(bootstrap_distribution(sigma_v, 3.0, dims, 50,
                                         SpectralFunction::square(), 1, alpha),
                  ConfigError);
}

TEST_CASE("bootstrap replicates center near the closed-form moments") {
  // Theorem-level sanity at small scale; the full-size version lives in the
  // properties suite.
  const Eigen::Index p = 40, q = 40, T = 40;
  const SymmetricMatrix sigma_v = SymmetricMatrix::identity(q);
  const BootstrapResult res =
      bootstrap_distribution(sigma_v, 3.0, {T, p, q}, 400,
                             SpectralFunction::square(), 7, {0.05});
  double mean = 0;
  for (double r : res.replicates) mean += r;
  mean /= res.replicates.size();
  // K* centers at mu - p lambda = (p+1) - p = 1 with sd near 2
  CHECK(std::abs(mean - 1.0) < 3.0 * 2.0 / std::sqrt(400.0) + 0.5);
}

TEST_CASE("non-psd sigma_v_hat is rejected") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(
      bootstrap_distribution(SymmetricMatrix(m), 3.0, {4, 4, 2}, 128,
                             SpectralFunction::square(), 1, {0.05}),
      NumericError);
}

TEST_CASE("run_bootstrap_test end to end on small null data") {
  RngStream design(63);
  const SymmetricMatrix sigma_u0 = sigma_haar_uniform(20, design);
  const SymmetricMatrix sigma_v = sigma_block_pairs(16);
  KroneckerModel model;
  model.u = sym_sqrt(sigma_u0.mat());
  model.v = sym_sqrt(sigma_v.mat());
  const MatrixDataset data = generate_dataset(model, 30, 2025);

  TestConfig tc;
  tc.alpha = {0.05};
  tc.known = KnownNuisance{sigma_v, 3.0};
  const TestReport r = run_bootstrap_test(data, sigma_u0, tc, 200, 11);
  CHECK(r.method == "bootstrap");
  CHECK_FALSE(r.p_value.has_value());
  CHECK(r.diagnostics.count("c_lo@0.050000") == 1);
  // the data statistic should fall inside a wide band of the bootstrap law
  CHECK(r.statistic > r.mu - 8 * r.sigma);
  CHECK(r.statistic < r.mu + 8 * r.sigma);

  // estimated-nuisance variant runs and flags the rate assumption
  TestConfig te;
  te.alpha = {0.05};
  const TestReport re = run_bootstrap_test(data, sigma_u0, te, 200, 11);
  CHECK(re.diagnostics.count("sigma_v_rate_assumed") == 1);
}

TEST_CASE("replicate CSV dump") {
  const SymmetricMatrix sigma_v = SymmetricMatrix::identity(4);
  const BootstrapResult res =
      bootstrap_distribution(sigma_v, 3.0, {6, 4, 4}, 100,
                             SpectralFunction::square(), 3, {0.05});
  const auto path =
      std::filesystem::temp_directory_path() / "kroncov_replicates.csv";
  write_replicates_csv(path, res);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "replicate");
  int count = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++count;
  CHECK(count == 100);
}
