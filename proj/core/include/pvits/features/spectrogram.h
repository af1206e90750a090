#ifndef PVITS_FEATURES_SPECTROGRAM_H_
#define PVITS_FEATURES_SPECTROGRAM_H_

#include <torch/torch.h>

#include "pvits/features/wav_io.h"

namespace pvits {

struct FeatureConfig {
  int sample_rate = 24000;
  int hop_samples = 240;  // 10 ms
  int win_samples = 960;  // 40 ms
  int fft_size = 1024;
  int num_mels = 80;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means Nyquist
  double log_floor = 1e-5;

  int NumBins() const { return fft_size / 2 + 1; }
  // Throws std::invalid_argument on inconsistent settings.
  void Validate() const;
};

// Short-time Fourier analysis shared by feature extraction and the
// mel reconstruction loss.
//
// Framing convention: the signal is reflect-padded by (fft - hop) / 2 on the
// left and the remainder on the right, then framed without centering. This
// yields exactly floor(num_samples / hop) frames, so frame t is centred on
// sample t * hop + hop / 2 and T frames correspond to T * hop samples.
// A Hann window of win_samples is zero-padded to fft_size.
class SpectrogramExtractor {
 public:
  explicit SpectrogramExtractor(FeatureConfig config);

  const FeatureConfig& config() const { return config_; }
  // [num_mels, num_bins], Slaney-normalised triangular filters.
  const torch::Tensor& mel_basis() const { return mel_basis_; }

  int64_t NumFrames(int64_t num_samples) const;

  // wave [B, L] -> magnitudes [B, num_bins, T]. Differentiable.
  torch::Tensor Linear(const torch::Tensor& wave) const;
  // wave [B, L] -> log(max(mel, floor)) [B, num_mels, T]. Differentiable.
  torch::Tensor LogMel(const torch::Tensor& wave) const;
  torch::Tensor LinearToLogMel(const torch::Tensor& linear) const;

 private:
  FeatureConfig config_;
  torch::Tensor window_;
  torch::Tensor mel_basis_;
};

// Slaney mel scale (linear below 1 kHz, logarithmic above).
double HzToMel(double hz);
double MelToHz(double mel);
torch::Tensor MakeMelBasis(const FeatureConfig& config);

// Single-utterance helpers returning [T x num_bins] / [T x num_mels].
// Throw std::invalid_argument when the waveform is shorter than one window.
torch::Tensor LinearSpectrogram(const Waveform& wave, const FeatureConfig& config);
torch::Tensor LogMelSpectrogram(const Waveform& wave, const FeatureConfig& config);

torch::Tensor ToTensor(const Waveform& wave);

}  // namespace pvits

#endif  // PVITS_FEATURES_SPECTROGRAM_H_
