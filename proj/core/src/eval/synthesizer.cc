#include "pvits/eval/synthesizer.h"

#include <ATen/CPUGeneratorImpl.h>

#include <stdexcept>
#include <string>

#include "pvits/data/preprocess.h"
#include "pvits/train/trainer.h"

namespace pvits {

namespace {

torch::Tensor Row(const std::vector<int64_t>& v) {
  return torch::tensor(v, torch::kInt64).unsqueeze(0);
}

}  // namespace

Waveform TensorToWaveform(const torch::Tensor& samples, int sample_rate) {
  auto t = samples.detach().to(torch::kFloat32).contiguous();
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(t.data_ptr<float>(), t.data_ptr<float>() + t.numel());
  return w;
}

Synthesizer Synthesizer::FromCheckpoint(const std::filesystem::path& path) {
  auto config = ReadCheckpointConfig(path);
  PeriodVits model(config.model, config.features);
  LoadModelWeights(path, config, model);
  return Synthesizer(std::move(config), std::move(model));
}

Synthesizer::Synthesizer(AppConfig config, PeriodVits model)
    : config_(std::move(config)), model_(std::move(model)) {
  model_->eval();
}

void Synthesizer::CheckSpeaker(int64_t speaker, int64_t emotion) const {
  if (speaker < 0 || speaker >= config_.model.num_speakers) {
    throw std::invalid_argument("unknown speaker id " + std::to_string(speaker));
  }
  if (emotion < 0 || emotion >= config_.model.num_emotions) {
    throw std::invalid_argument("unknown emotion id " + std::to_string(emotion));
  }
}

SynthesisOutput Synthesizer::Synthesize(const std::vector<int64_t>& phonemes,
                                        const std::vector<int64_t>& accents, int64_t speaker,
                                        int64_t emotion, const SynthesisOptions& options,
                                        uint64_t seed) {
  if (phonemes.empty()) throw std::invalid_argument("empty phoneme sequence");
  if (phonemes.size() != accents.size()) {
    throw std::invalid_argument("phoneme and accent sequences differ in length");
  }
  for (auto p : phonemes) {
    if (p < 0 || p >= config_.model.num_phonemes) {
      throw std::invalid_argument("unknown phoneme id " + std::to_string(p));
    }
  }
  for (auto a : accents) {
    if (a < 0 || a >= config_.model.num_accents) {
      throw std::invalid_argument("unknown accent id " + std::to_string(a));
    }
  }
  CheckSpeaker(speaker, emotion);

  torch::NoGradGuard no_grad;
  model_->eval();
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto r = model_->Synthesize(Row(phonemes), Row(accents),
                              torch::tensor({static_cast<int64_t>(phonemes.size())}),
                              torch::tensor({speaker}), torch::tensor({emotion}), options, gen);
  SynthesisOutput out;
  const int64_t frames = r.frame_lengths[0].item<int64_t>();
  out.wave = TensorToWaveform(r.wave[0].narrow(0, 0, frames * config_.features.hop_samples),
                              config_.features.sample_rate);
  auto d = r.durations[0].contiguous();
  out.durations.assign(d.data_ptr<int64_t>(), d.data_ptr<int64_t>() + d.numel());
  auto lf = r.pitch.log_f0[0].narrow(0, 0, frames).contiguous();
  auto vv = r.vuv[0].narrow(0, 0, frames).contiguous();
  out.predicted.log_f0.assign(lf.data_ptr<float>(), lf.data_ptr<float>() + frames);
  out.predicted.vuv.assign(vv.data_ptr<float>(), vv.data_ptr<float>() + frames);
  return out;
}

Waveform Synthesizer::CopySynthesize(const Waveform& wave, int64_t speaker, int64_t emotion,
                                     uint64_t seed, bool zero_phase) {
  CheckSpeaker(speaker, emotion);
  const auto record = ExtractFeatures("copy", wave, config_);
  torch::NoGradGuard no_grad;
  model_->eval();
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto linear = record.linear_spec.transpose(0, 1).unsqueeze(0);
  auto log_f0 = torch::tensor(record.pitch.log_f0).unsqueeze(0);
  auto vuv = torch::tensor(record.pitch.vuv).unsqueeze(0);
  auto out = model_->CopySynthesize(linear, log_f0, vuv, torch::tensor({speaker}),
                                    torch::tensor({emotion}), zero_phase, gen);
  return TensorToWaveform(out[0], config_.features.sample_rate);
}

}  // namespace pvits
