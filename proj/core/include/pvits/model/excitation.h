#ifndef PVITS_MODEL_EXCITATION_H_
#define PVITS_MODEL_EXCITATION_H_

#include <torch/torch.h>

#include <optional>

#include "pvits/model/config.h"

namespace pvits {

struct SineConfig {
  int sample_rate = 24000;
  int hop_samples = 240;
  double amplitude = 0.1;
  double unvoiced_noise_std = 0.003;
};

// Sample-level sine source from frame-level pitch. F0 is repeated per
// sample (nearest neighbour); the phase is the running sum of f0 / fs over
// all samples up to and including n, plus an initial phase in cycles, so it
// stays continuous across frame and voicing boundaries. Voiced samples carry
// amplitude * sin(2 pi phase); unvoiced samples carry Gaussian noise.
//
// log_f0, vuv: [B, T]. initial_phase: [B] in cycles (zeros for inference).
// Returns [B, T * hop]. F0 at or above Nyquist is clamped with a warning.
torch::Tensor GenerateSine(const torch::Tensor& log_f0, const torch::Tensor& vuv,
                           const torch::Tensor& initial_phase, const SineConfig& config,
                           std::optional<at::Generator> generator = std::nullopt);

// Nearest-neighbour frame -> sample upsampling, [B, T] -> [B, T * hop].
torch::Tensor UpsampleVuv(const torch::Tensor& vuv, int hop_samples);

struct ExcitationOptions {
  ExcitationMode mode = ExcitationMode::kSineVuvNoise;
  SineConfig sine;
  double noise_std = 1.0;
  bool random_phase = true;  // uniform initial phase per utterance, else 0
};

ExcitationOptions MakeExcitationOptions(const ModelConfig& model, int sample_rate,
                                        int hop_samples, bool random_phase);

// Stacks [sine, vuv, noise] into [B, 3, T * hop]. With mode kSine the vuv and
// noise channels are zero. All randomness comes from |generator| when given.
torch::Tensor BuildExcitation(const torch::Tensor& log_f0, const torch::Tensor& vuv,
                              const ExcitationOptions& options,
                              std::optional<at::Generator> generator = std::nullopt);

}  // namespace pvits

#endif  // PVITS_MODEL_EXCITATION_H_
