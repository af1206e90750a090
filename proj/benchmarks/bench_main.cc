#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

#include "pvits/features/pitch.h"
#include "pvits/features/spectrogram.h"
#include "pvits/model/config.h"
#include "pvits/model/decoder.h"
#include "pvits/model/excitation.h"

namespace {

// 150 Hz tone in light noise.
pvits::Waveform Signal(int64_t seconds) {
  torch::manual_seed(0);
  auto n = torch::arange(seconds * 24000, torch::kFloat);
  auto x = 0.3 * torch::sin(n * (2 * M_PI * 150.0 / 24000)) + torch::randn_like(n) * 0.01;
  pvits::Waveform w;
  w.samples.assign(x.data_ptr<float>(), x.data_ptr<float>() + x.numel());
  return w;
}

void BM_LogMel(benchmark::State& state) {
  const auto w = Signal(state.range(0));
  pvits::FeatureConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(pvits::LogMelSpectrogram(w, c));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.samples.size()));
}
BENCHMARK(BM_LogMel)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_ExtractPitch(benchmark::State& state) {
  const auto w = Signal(state.range(0));
  pvits::PitchConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(pvits::ExtractPitch(w, c));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.samples.size()));
}
BENCHMARK(BM_ExtractPitch)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Excitation(benchmark::State& state) {
  const int64_t t = state.range(0);
  auto lf = torch::full({1, t}, std::log(150.0));
  auto vuv = torch::ones({1, t});
  auto gen = at::make_generator<at::CPUGeneratorImpl>(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pvits::BuildExcitation(lf, vuv, pvits::ExcitationOptions{}, gen));
  }
  state.SetItemsProcessed(state.iterations() * t * 240);
}
BENCHMARK(BM_Excitation)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_DecoderForward(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  const auto config = pvits::AppConfig::Desk().model;
  pvits::Generator gen(config);
  gen->eval();
  const int64_t t = state.range(0);
  auto z = torch::randn({1, config.latent_channels, t});
  auto g = torch::zeros({1, config.condition_channels, 1});
  auto exc = pvits::BuildExcitation(torch::full({1, t}, std::log(150.0)), torch::ones({1, t}),
                                    pvits::ExcitationOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(gen(z, pvits::DecoderInputs{exc, {}}, g));
  state.SetItemsProcessed(state.iterations() * t * 240);
}
BENCHMARK(BM_DecoderForward)->Arg(32)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
