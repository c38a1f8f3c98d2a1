// Serial reference vs OpenMP kernels on the two sweep workloads.
#include "eprbus/protocols.hpp"
#include "eprbus/sweep.hpp"

#include <benchmark/benchmark.h>

#include <array>

using namespace eprbus;

namespace {

std::vector<ProtocolParams> oracle_points(std::size_t n) {
  std::vector<ProtocolParams> points;
  for (std::size_t i = 0; i < n; ++i) {
    points.push_back(ProtocolParams::matched(0.25 + 0.1 * static_cast<double>(i), 30.0, 200.0));
  }
  return points;
}

PointResult feedback_point(std::size_t i, std::mt19937_64& rng) {
  const double n = static_cast<double>(i);
  const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical(), n, 0.0, 0.0},
                                      ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  const auto run = run_epr_generation(make_state(specs), ProtocolParams::matched(1.0, n),
                                      {FeedbackMode::FeedbackOptimal, 0.0}, &rng);
  return {predict_epr_variance(1.0, n), run.report.delta_epr, run.report.entangled, {}, {}};
}

void BM_OracleSweepSerial(benchmark::State& state) {
  const auto points = oracle_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(oracle_sweep_serial(points));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OracleSweepParallel(benchmark::State& state) {
  const auto points = oracle_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(oracle_sweep_parallel(points));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProtocolSweepSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(n, feedback_point, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProtocolSweepParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sweep_parallel(n, feedback_point, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_OracleSweepSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleSweepParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProtocolSweepSerial)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProtocolSweepParallel)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
