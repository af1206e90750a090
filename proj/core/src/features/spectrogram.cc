#include "pvits/features/spectrogram.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvits {

void FeatureConfig::Validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (hop_samples <= 0) throw std::invalid_argument("hop_samples must be > 0");
  if (win_samples <= 0 || win_samples > fft_size) {
    throw std::invalid_argument("win_samples must be in (0, fft_size]");
  }
  if (fft_size < hop_samples) {
    throw std::invalid_argument("fft_size must be >= hop_samples");
  }
  if (num_mels <= 0) throw std::invalid_argument("num_mels must be > 0");
  const double top = fmax > 0 ? fmax : sample_rate / 2.0;
  if (fmin < 0 || fmin >= top || top > sample_rate / 2.0) {
    throw std::invalid_argument("mel band edges must satisfy 0 <= fmin < fmax <= sr/2");
  }
  if (log_floor <= 0) throw std::invalid_argument("log_floor must be > 0");
}

double HzToMel(double hz) {
  constexpr double kSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  const double min_log_mel = kMinLogHz / kSp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < kMinLogHz) return hz / kSp;
  return min_log_mel + std::log(hz / kMinLogHz) / logstep;
}

double MelToHz(double mel) {
  constexpr double kSp = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  const double min_log_mel = kMinLogHz / kSp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * kSp;
  return kMinLogHz * std::exp(logstep * (mel - min_log_mel));
}

torch::Tensor MakeMelBasis(const FeatureConfig& config) {
  const int bins = config.NumBins();
  const int mels = config.num_mels;
  const double top = config.fmax > 0 ? config.fmax : config.sample_rate / 2.0;
  const double mel_lo = HzToMel(config.fmin);
  const double mel_hi = HzToMel(top);
  std::vector<double> edges(mels + 2);
  for (int i = 0; i < mels + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (mels + 1));
  }
  auto basis = torch::zeros({mels, bins}, torch::kFloat32);
  auto acc = basis.accessor<float, 2>();
  for (int m = 0; m < mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * config.sample_rate / config.fft_size;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      const double w = std::max(0.0, std::min(rise, fall));
      acc[m][k] = static_cast<float>(w * enorm);
    }
  }
  return basis;
}

SpectrogramExtractor::SpectrogramExtractor(FeatureConfig config)
    : config_(config) {
  config_.Validate();
  window_ = torch::hann_window(config_.win_samples,
                               torch::TensorOptions().dtype(torch::kFloat32));
  mel_basis_ = MakeMelBasis(config_);
}

int64_t SpectrogramExtractor::NumFrames(int64_t num_samples) const {
  return num_samples / config_.hop_samples;
}

torch::Tensor SpectrogramExtractor::Linear(const torch::Tensor& wave) const {
  TORCH_CHECK(wave.dim() == 2, "expected wave [B, L], got ", wave.sizes());
  const int64_t length = wave.size(1);
  if (length < config_.win_samples) {
    throw std::invalid_argument("waveform of " + std::to_string(length) +
                                " samples is shorter than one analysis window (" +
                                std::to_string(config_.win_samples) + ")");
  }
  const int64_t total_pad = config_.fft_size - config_.hop_samples;
  const int64_t left = total_pad / 2;
  const int64_t right = total_pad - left;
  auto padded = torch::nn::functional::pad(
                    wave.unsqueeze(1),
                    torch::nn::functional::PadFuncOptions({left, right})
                        .mode(torch::kReflect))
                    .squeeze(1);
  auto spec = torch::stft(padded, config_.fft_size, config_.hop_samples,
                          config_.win_samples, window_.to(wave.dtype()),
                          /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  // Exactly floor(L / hop) frames.
  return torch::abs(spec).narrow(2, 0, NumFrames(length));
}

torch::Tensor SpectrogramExtractor::LinearToLogMel(const torch::Tensor& linear) const {
  auto mel = torch::matmul(mel_basis_.to(linear.dtype()), linear);
  return torch::log(torch::clamp_min(mel, config_.log_floor));
}

torch::Tensor SpectrogramExtractor::LogMel(const torch::Tensor& wave) const {
  return LinearToLogMel(Linear(wave));
}

torch::Tensor ToTensor(const Waveform& wave) {
  return torch::from_blob(const_cast<float*>(wave.samples.data()),
                          {static_cast<int64_t>(wave.samples.size())},
                          torch::kFloat32)
      .clone();
}

torch::Tensor LinearSpectrogram(const Waveform& wave, const FeatureConfig& config) {
  SpectrogramExtractor stft(config);
  torch::NoGradGuard no_grad;
  return stft.Linear(ToTensor(wave).unsqueeze(0)).squeeze(0).transpose(0, 1).contiguous();
}

torch::Tensor LogMelSpectrogram(const Waveform& wave, const FeatureConfig& config) {
  SpectrogramExtractor stft(config);
  torch::NoGradGuard no_grad;
  return stft.LogMel(ToTensor(wave).unsqueeze(0)).squeeze(0).transpose(0, 1).contiguous();
}

}  // namespace pvits
