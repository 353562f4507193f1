#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rotorvib/features.hpp"
#include "rotorvib/spectral.hpp"
#include "rotorvib/synth.hpp"
#include "rotorvib/time_domain.hpp"
#include "rotorvib/wavelet.hpp"

using namespace rotorvib;

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = d(rng);
  return out;
}

}  // namespace

static void BM_Stft(benchmark::State& state) {
  const auto series = noise(800);
  const StftParams params{static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0) / 2)};
  for (auto _ : state) benchmark::DoNotOptimize(stft(series, params));
}
BENCHMARK(BM_Stft)->Arg(64)->Arg(128)->Arg(256);

static void BM_WaveletPacket(benchmark::State& state) {
  const auto series = noise(800);
  for (auto _ : state) benchmark::DoNotOptimize(wavelet_packet_energies(series, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_WaveletPacket)->DenseRange(1, 4);

static void BM_Entropy(benchmark::State& state) {
  const auto series = noise(800);
  for (auto _ : state) benchmark::DoNotOptimize(shannon_entropy(series));
}
BENCHMARK(BM_Entropy);

static void BM_AxisFeatures(benchmark::State& state) {
  const auto series = noise(800);
  const FeatureParams params;
  for (auto _ : state) benchmark::DoNotOptimize(extract_axis_features(series, params));
}
BENCHMARK(BM_AxisFeatures);

static void BM_CorpusFeatures(benchmark::State& state) {
  const auto pairs = generate_paper_shaped_windows(42, SnrConfig{.duration_s = static_cast<double>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(extract_corpus_features(pairs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_CorpusFeatures)->Arg(5)->Unit(benchmark::kMillisecond);
