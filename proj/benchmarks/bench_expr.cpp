#include <benchmark/benchmark.h>

#include "morse/expr.hpp"

static void BM_EvalJet(benchmark::State& state) {
  const auto f = morse::expr::parse("cos(2*pi*x)*exp(0.3*y) + sin(x*y*z)^2 - sqrt(2 + z^2)", 3);
  const morse::Vec p = (morse::Vec(3) << 0.3, -0.2, 0.7).finished();
  for (auto _ : state) benchmark::DoNotOptimize(morse::expr::eval_jet(f, p));
}
BENCHMARK(BM_EvalJet);

static void BM_Evaluate(benchmark::State& state) {
  const auto f = morse::expr::parse("cos(2*pi*x)*exp(0.3*y) + sin(x*y*z)^2 - sqrt(2 + z^2)", 3);
  const morse::Vec p = (morse::Vec(3) << 0.3, -0.2, 0.7).finished();
  for (auto _ : state) benchmark::DoNotOptimize(morse::expr::evaluate(f, p));
}
BENCHMARK(BM_Evaluate);

static void BM_Parse(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(morse::expr::parse("cos(2*pi*x)*exp(0.3*y) + sin(x*y*z)^2 - sqrt(2 + z^2)", 3));
  }
}
BENCHMARK(BM_Parse);
