// Microbenchmarks for the hot paths of the Monte Carlo harness.

#include <benchmark/benchmark.h>

#include "kroncov/asymptotics.hpp"
#include "kroncov/bootstrap.hpp"
#include "kroncov/models.hpp"
#include "kroncov/spectral.hpp"
#include "kroncov/stieltjes.hpp"

using namespace kroncov;

namespace {

KroneckerModel paper_model(Eigen::Index p, Eigen::Index q) {
  RngStream design(1);
  KroneckerModel model;
  model.u = sym_sqrt(sigma_haar_uniform(p, design).mat());
  model.v = sym_sqrt(sigma_block_pairs(q).mat());
  return model;
}

void BM_generate_dataset(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const KroneckerModel model = paper_model(d, d);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(generate_dataset(model, d, ++seed));
}
BENCHMARK(BM_generate_dataset)->Arg(50)->Arg(100);

void BM_whiten_and_renormalize(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  RngStream design(2);
  const SymmetricMatrix sigma_u0 = sigma_haar_uniform(d, design);
  KroneckerModel model;
  model.u = sym_sqrt(sigma_u0.mat());
  model.v = sym_sqrt(sigma_block_pairs(d).mat());
  const MatrixDataset data = generate_dataset(model, d, 3);
  for (auto _ : state) {
    const MatrixDataset w = whiten(data, sigma_u0);
    benchmark::DoNotOptimize(renormalized_cov(w).mat().squaredNorm());
  }
}
BENCHMARK(BM_whiten_and_renormalize)->Arg(50)->Arg(100);

void BM_normal_draws(benchmark::State& state) {
  RngStream rng(4);
  std::vector<double> buf(1 << 16);
  for (auto _ : state) {
    rng.fill_normal(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * buf.size());
}
BENCHMARK(BM_normal_draws);

void BM_pearson_draws(benchmark::State& state) {
  RngStream rng(5);
  std::vector<double> buf(1 << 16);
  const double nu4 = state.range(0) / 100.0;
  for (auto _ : state) {
    fill_pearson(rng, nu4, buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * buf.size());
}
BENCHMARK(BM_pearson_draws)->Arg(290)->Arg(310)->Arg(600);

void BM_bootstrap_distribution(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const SymmetricMatrix sigma_v = sigma_block_pairs(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bootstrap_distribution(sigma_v, 3.0, {d, d, d}, 100,
                               SpectralFunction::square(), 6, {0.05}));
  }
}
BENCHMARK(BM_bootstrap_distribution)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_stieltjes_solve(benchmark::State& state) {
  const SpectralSystem sys = SpectralSystem::matrix_variate(
      state.range(0), state.range(0), sigma_block_pairs(state.range(0)), 3.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_stieltjes(sys, {0.8, 1.0}));
}
BENCHMARK(BM_stieltjes_solve)->Arg(100)->Arg(1000);

void BM_mean_correction(benchmark::State& state) {
  const SpectralSystem sys = SpectralSystem::matrix_variate(
      100, 100, sigma_block_pairs(100), 3.0);
  const ContourSpec contour = ContourSpec::standard(sys);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mean_correction(sys, SpectralFunction::square(), contour));
  state.SetLabel("p=q=T=100");
}
BENCHMARK(BM_mean_correction)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
