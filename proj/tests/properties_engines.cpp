#include "doctest.h"
#include "kroncov/bootstrap.hpp"
#include "kroncov/models.hpp"
#include "kroncov/noise.hpp"
#include "kroncov/simulation.hpp"
#include "kroncov/test_engine.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <fstream>

using namespace kroncov;

namespace {

struct NullDraw {
  SymmetricMatrix sigma_u0;
  MatrixDataset data;
};

NullDraw paper_null_draw(Eigen::Index T, Eigen::Index p, Eigen::Index q,
                         EntryLaw law, std::uint64_t seed) {
  RngStream design(derive_seed(seed, {1}));
  SymmetricMatrix sigma_u0 = sigma_haar_uniform(p, design);
  KroneckerModel model;
  model.u = sym_sqrt(sigma_u0.mat());
  model.v = sym_sqrt(sigma_block_pairs(q).mat());
  model.entry_law = law;
  MatrixDataset data = generate_dataset(model, T, derive_seed(seed, {2}));
  return {std::move(sigma_u0), std::move(data)};
}

}  // namespace

TEST_CASE("null statistics look standard normal at moderate size") {
  const Eigen::Index d = 60;
  const int reps = 500;
  std::vector<double> stats(reps);
  const SymmetricMatrix sigma_v = sigma_block_pairs(d);
  for (int r = 0; r < reps; ++r) {
    const NullDraw draw = paper_null_draw(
        d, d, d, EntryLaw::gaussian(),
        derive_seed(606, {static_cast<std::uint64_t>(r)}));
    TestConfig tc;
    tc.known = KnownNuisance{sigma_v, 3.0};
    stats[r] = run_test(draw.data, draw.sigma_u0, tc).statistic;
  }
  CHECK(testutil::ks_distance(stats, testutil::normal_cdf) <
        testutil::ks_critical(reps, 0.01));
}

TEST_CASE("power is nondecreasing along the dimension grid") {
  const char* text =
      "scenario=HA2\n"
      "family=normal\n"
      "dims=20 20 20\n"
      "dims=60 60 60\n"
      "dims=100 100 100\n"
      "methods=FO\n"
      "alpha=0.05\n"
      "replications=200\n"
      "beta=0.1\n"
      "seed=42\n";
  const SizePowerTable t =
      run_simulation(SimulationConfig::parse_text(text), 1);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].rate <= t.rows[1].rate + 0.05);
  CHECK(t.rows[1].rate <= t.rows[2].rate + 0.05);
  CHECK(t.rows[2].rate >= 0.99);
}

TEST_CASE("harness statistic dump passes a KS check") {
  const auto prefix =
      (std::filesystem::temp_directory_path() / "kroncov_ks_dump").string();
  SimulationConfig cfg = SimulationConfig::parse_text(
      "scenario=null\nfamily=normal\ndims=60 60 60\nmethods=FO\n"
      "alpha=0.05\nreplications=500\nseed=17\n");
  cfg.dump_stats = prefix;
  run_simulation(cfg, 1);
  std::ifstream in(prefix + "_normal_FO_T60_p60_q60.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  std::vector<double> stats;
  double v;
  while (in >> v) stats.push_back(v);
  REQUIRE(stats.size() == 500);
  CHECK(testutil::ks_distance(stats, testutil::normal_cdf) <
        testutil::ks_critical(stats.size(), 0.01));
}

TEST_CASE("bootstrap and formula decisions agree on null data") {
  // both target the same gaussian limit; agreement >= 90% of 1000
  // replications at p = q = T = 100, B = 500, alpha = 0.05
  const Eigen::Index d = 100;
  const int reps = 1000;
  const SymmetricMatrix sigma_v = sigma_block_pairs(d);
  int agree = 0;
  for (int r = 0; r < reps; ++r) {
    const NullDraw draw = paper_null_draw(
        d, d, d, EntryLaw::gaussian(),
        derive_seed(707, {static_cast<std::uint64_t>(r)}));
    TestConfig tc;
    tc.alpha = {0.05};
    tc.known = KnownNuisance{sigma_v, 3.0};
    const bool formula = run_test(draw.data, draw.sigma_u0, tc).reject[0];
    const bool boot =
        run_bootstrap_test(draw.data, draw.sigma_u0, tc, 500,
                           derive_seed(708, {static_cast<std::uint64_t>(r)}))
            .reject[0];
    if (formula == boot) ++agree;
  }
  CHECK(agree >= reps * 9 / 10);
}

TEST_CASE("sigma_beta estimation error shrinks with the dimensions") {
  // quick version of the convergence study: c1 = c2 = 0.5, 100 replications
  const int reps = 100;
  double mean_err[2];
  int i = 0;
  for (Eigen::Index d : {40, 100}) {
    double acc = 0;
    for (int r = 0; r < reps; ++r) {
      RngStream design(derive_seed(909, {static_cast<std::uint64_t>(d),
                                         static_cast<std::uint64_t>(r), 1}));
      KroneckerModel model;
      model.u = diag_two_point(d, 0.5).mat().diagonal().cwiseSqrt().asDiagonal() *
                haar_orthogonal(d, design);
      model.v = diag_two_point(d, 0.5).mat().diagonal().cwiseSqrt().asDiagonal() *
                haar_orthogonal(d, design);
      model.sigma_alpha = 1.0;
      model.sigma_beta = 1.0;
      const MatrixDataset data = generate_dataset(
          model, d, derive_seed(909, {static_cast<std::uint64_t>(d),
                                      static_cast<std::uint64_t>(r), 2}));
      auto [hat_ds, sa2] = remove_common_noise(data);
      acc += std::abs(estimate_sigma_beta(hat_ds).sigma_beta2_hat - 1.0);
    }
    mean_err[i++] = acc / reps;
  }
  CHECK(mean_err[1] < mean_err[0]);
  CHECK(mean_err[1] < 0.06);
}

TEST_CASE("noised test has full power under the rank-one alternative") {
  const SizePowerTable t = run_simulation(
      SimulationConfig::parse_text(
          "scenario=noise-HA1\nfamily=normal\ndims=100 100 100\n"
          "methods=FG,FE\nalpha=0.05\nreplications=200\nbeta=0.1\n"
          "sigma_alpha=1\nsigma_beta=1\nc1=0.5\nc2=0.8\nseed=55\n"),
      1);
  for (const auto& row : t.rows) {
    CAPTURE(row.method);
    CHECK(row.rate >= 0.995);
  }
}

TEST_CASE("common-noise estimate is tiny when sigma_alpha = 0") {
  const Eigen::Index d = 100;
  const int reps = 200;
  double acc = 0;
  KroneckerModel model;
  model.u = Eigen::MatrixXd::Identity(d, d);
  model.v = Eigen::MatrixXd::Identity(d, d);
  for (int r = 0; r < reps; ++r) {
    const MatrixDataset ds = generate_dataset(
        model, d, derive_seed(111, {static_cast<std::uint64_t>(r)}));
    acc += remove_common_noise(ds).second;
  }
  CHECK(acc / reps < 0.01);
}

TEST_CASE("E0 matches the Monte Carlo expectation of the normalized data") {
  // sigma_beta = 0, Sigma_U0 = I, Sigma_V = I at p = q = 50, T = 2000
  const Eigen::Index p = 50, q = 50, T = 2000;
  KroneckerModel model;
  model.u = Eigen::MatrixXd::Identity(p, p);
  model.v = Eigen::MatrixXd::Identity(q, q);
  const MatrixDataset data = generate_dataset(model, T, 2222);
  auto [hat_ds, sa2] = remove_common_noise(data);
  Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(p, p);
  mc.selfadjointView<Eigen::Lower>().rankUpdate(
      hat_ds.stacked(), 1.0 / static_cast<double>(T * q));
  mc.triangularView<Eigen::StrictlyUpper>() =
      mc.triangularView<Eigen::StrictlyLower>().transpose();
  const SymmetricMatrix e0 =
      noise_normalization(SymmetricMatrix::identity(p), 0.0, 1.0, q);
  CHECK((mc - e0.mat()).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("noised statistic is near-normal under the null (quick)") {
  const Eigen::Index d = 60;
  const int reps = 400;
  std::vector<double> stats;
  stats.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    RngStream design(derive_seed(313, {static_cast<std::uint64_t>(r), 1}));
    const SymmetricMatrix d1_sq = diag_two_point(d, 0.5);
    const SymmetricMatrix d2_sq = diag_two_point(d, 0.8);
    KroneckerModel model;
    model.u = d1_sq.mat().diagonal().cwiseSqrt().asDiagonal() *
              haar_orthogonal(d, design);
    model.v = d2_sq.mat().diagonal().cwiseSqrt().asDiagonal() *
              haar_orthogonal(d, design);
    model.sigma_alpha = 1.0;
    model.sigma_beta = 1.0;
    const MatrixDataset data = generate_dataset(
        model, d, derive_seed(313, {static_cast<std::uint64_t>(r), 2}));
    NoiseTestConfig cfg;
    cfg.mode = NoiseMode::FG;
    cfg.sigma_v = d2_sq;
    cfg.nu4 = 3.0;
    cfg.nu4_noise = 3.0;
    cfg.sigma_beta2 = 1.0;
    stats.push_back(run_noised_test(data, d1_sq, cfg).statistic);
  }
  CHECK(testutil::ks_distance(stats, testutil::normal_cdf) <
        testutil::ks_critical(stats.size(), 0.01));
}
