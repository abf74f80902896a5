#include <benchmark/benchmark.h>

#include <random>

#include "morse/integer_matrix.hpp"

using morse::algebra::IntMatrix;

static IntMatrix random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(-9, 9);
  IntMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = d(rng);
  return a;
}

static void BM_SmithNormalForm(benchmark::State& state) {
  const IntMatrix a = random_matrix(static_cast<int>(state.range(0)), 42);
  for (auto _ : state) benchmark::DoNotOptimize(morse::algebra::smith_normal_form(a));
}
BENCHMARK(BM_SmithNormalForm)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

static void BM_RankModP(benchmark::State& state) {
  const IntMatrix a = random_matrix(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(morse::algebra::rank_mod(a, 2));
}
BENCHMARK(BM_RankModP)->Arg(8)->Arg(32)->Arg(128);
