#include <benchmark/benchmark.h>

#include "mtp2/matcore.hpp"
#include "mtp2/mmle.hpp"
#include "mtp2/sampling.hpp"

namespace {

mtp2::SymmetricMatrix sample_cov(std::size_t p, std::size_t n, mtp2::Seed seed) {
  return mtp2::sample_covariance(mtp2::sample_gaussian(mtp2::SymmetricMatrix::identity(p), n, seed));
}

void BM_Cholesky(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const mtp2::SymmetricMatrix s = sample_cov(p, 2 * p, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mtp2::cholesky(s));
}
BENCHMARK(BM_Cholesky)->Arg(50)->Arg(200)->Arg(400);

void BM_SymEigen(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const mtp2::SymmetricMatrix s = sample_cov(p, 2 * p, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mtp2::sym_eigen(s));
}
BENCHMARK(BM_SymEigen)->Arg(50)->Arg(200)->Arg(400);

// Arguments: p, n.
void BM_EstimateMle(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const mtp2::SymmetricMatrix s = sample_cov(p, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mtp2::estimate_mle(s));
}
BENCHMARK(BM_EstimateMle)->Args({50, 2})->Args({50, 200})->Args({200, 25})->Args({200, 200})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
