#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sohcast/backtest.hpp"
#include "sohcast/emd.hpp"
#include "sohcast/hilbert.hpp"
#include "sohcast/reframe.hpp"
#include "sohcast/timeseries.hpp"
#include "sohcast/trees.hpp"

namespace {

std::vector<double> noisy_series(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(100.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = noise(rng);
  return v;
}

// Two tones over a slow drift, lightly dithered: enough structure to drive a
// full sift cascade instead of an early flat-residue exit.
std::vector<double> modal_signal(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t);
    v[t] = std::sin(0.2 * x) + 0.6 * std::sin(0.05 * x) - 0.002 * x;
  }
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (auto& y : v) y += noise(rng);
  return v;
}

soh::SupervisedFrame training_frame(std::size_t rows, std::size_t window) {
  const std::size_t n = rows + window;  // horizon 1
  soh::DailySeries s;
  s.dates.resize(n);
  for (std::size_t t = 0; t < n; ++t) s.dates[t] = 18000 + static_cast<std::int64_t>(t);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> soh_ch(n), cycles(n), temp(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t);
    soh_ch[t] = 100.0 - 0.006 * x + 0.4 * std::sin(x / 9.0) + noise(rng);
    cycles[t] = 1.4 * x + noise(rng);
    temp[t] = 25.0 + 4.0 * std::sin(x / 30.0) + noise(rng);
  }
  s.channels["soh"] = std::move(soh_ch);
  s.channels["cycles"] = std::move(cycles);
  s.channels["temp"] = std::move(temp);
  return soh::make_frame(s, {"soh", "cycles", "temp"}, "soh", window, 1);
}

void bm_quartile_stats(benchmark::State& state) {
  const auto values = noisy_series(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(soh::quartile_stats(values));
}
BENCHMARK(bm_quartile_stats)->Arg(1000)->Arg(100000);

void bm_decompose_plain(benchmark::State& state) {
  const auto signal = modal_signal(static_cast<std::size_t>(state.range(0)));
  soh::DecomposeSpec spec;
  spec.ensemble_size = 0;
  for (auto _ : state) benchmark::DoNotOptimize(soh::decompose(signal, spec));
}
BENCHMARK(bm_decompose_plain)->Arg(365)->Arg(1095);

void bm_decompose_ensemble(benchmark::State& state) {
  const auto signal = modal_signal(365);
  soh::DecomposeSpec spec;
  spec.ensemble_size = static_cast<int>(state.range(0));
  spec.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(soh::decompose(signal, spec));
}
BENCHMARK(bm_decompose_ensemble)->Arg(8)->Arg(32);

void bm_instantaneous_frequency(benchmark::State& state) {
  soh::DecomposeSpec spec;
  spec.ensemble_size = 0;
  const soh::Decomposition d = soh::decompose(modal_signal(1095), spec);
  for (auto _ : state) benchmark::DoNotOptimize(soh::soh_inst_freq(d));
}
BENCHMARK(bm_instantaneous_frequency);

void bm_fit_boosted(benchmark::State& state) {
  const soh::SupervisedFrame frame = training_frame(1000, 14);
  soh::EnsembleSpec spec;
  spec.n_estimators = static_cast<int>(state.range(0));
  spec.learning_rate = 0.1;
  spec.tree.max_depth = static_cast<int>(state.range(1));
  spec.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(soh::fit(frame, spec));
}
BENCHMARK(bm_fit_boosted)->Args({50, 2})->Args({250, 6});

void bm_fit_forest(benchmark::State& state) {
  const soh::SupervisedFrame frame = training_frame(1000, 14);
  soh::EnsembleSpec spec;
  spec.method = soh::EnsembleMethod::random_forest;
  spec.n_estimators = 100;
  spec.tree.max_depth = 12;
  spec.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(soh::fit(frame, spec));
}
BENCHMARK(bm_fit_forest);

void bm_walk_forward(benchmark::State& state) {
  const soh::SupervisedFrame frame = training_frame(400, 14);
  soh::EnsembleSpec spec;
  spec.n_estimators = 50;
  spec.learning_rate = 0.1;
  spec.tree.max_depth = 2;
  spec.seed = 5;
  soh::WalkForwardSpec wf;
  wf.n_sample = 30;
  wf.n_roll = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(soh::walk_forward(frame, spec, wf));
}
BENCHMARK(bm_walk_forward)->Arg(1)->Arg(7);

}  // namespace

BENCHMARK_MAIN();
