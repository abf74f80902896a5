#include <benchmark/benchmark.h>

#include "morse/critical.hpp"
#include "morse/flow.hpp"

static void BM_TrajectoryToMaximum(benchmark::State& state) {
  const auto m = morse::geometry::ManifoldBackend::unit_sphere(2);
  const auto f = morse::expr::parse("z^2 + 0.3*x", 3);
  const auto spec = morse::flow::FlowSpec::gradient(m, f);
  const auto cs = morse::critical::find_critical_points(m, f, {});
  const morse::Vec x0 = morse::geometry::retract(m, (morse::Vec(3) << 0.4, 0.5, 0.1).finished());
  for (auto _ : state) {
    benchmark::DoNotOptimize(morse::flow::integrate(spec, x0, morse::flow::Direction::Forward, &cs));
  }
}
BENCHMARK(BM_TrajectoryToMaximum)->Unit(benchmark::kMicrosecond);

static void BM_TorusTrajectory(benchmark::State& state) {
  const auto m = morse::geometry::ManifoldBackend::flat_torus(2);
  const auto f = morse::expr::parse("cos(2*pi*x) + cos(2*pi*y)", 2);
  const auto spec = morse::flow::FlowSpec::gradient(m, f);
  const auto cs = morse::critical::find_critical_points(m, f, {});
  const morse::Vec x0 = (morse::Vec(2) << 0.31, 0.77).finished();
  for (auto _ : state) {
    benchmark::DoNotOptimize(morse::flow::integrate(spec, x0, morse::flow::Direction::Forward, &cs));
  }
}
BENCHMARK(BM_TorusTrajectory)->Unit(benchmark::kMicrosecond);

static void BM_CriticalSearch(benchmark::State& state) {
  const auto m = morse::geometry::ManifoldBackend::unit_sphere(2);
  const auto f = morse::expr::parse("z^2 + 0.3*x", 3);
  for (auto _ : state) benchmark::DoNotOptimize(morse::critical::find_critical_points(m, f, {}));
}
BENCHMARK(BM_CriticalSearch)->Unit(benchmark::kMillisecond);
