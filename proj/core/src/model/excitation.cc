#include "pvits/model/excitation.h"

#include <glog/logging.h>

#include <cmath>

namespace pvits {

torch::Tensor UpsampleVuv(const torch::Tensor& vuv, int hop_samples) {
  return torch::repeat_interleave(vuv, hop_samples, /*dim=*/1);
}

torch::Tensor GenerateSine(const torch::Tensor& log_f0, const torch::Tensor& vuv,
                           const torch::Tensor& initial_phase, const SineConfig& config,
                           std::optional<at::Generator> generator) {
  TORCH_CHECK(log_f0.dim() == 2 && log_f0.sizes() == vuv.sizes(),
              "log_f0 and vuv must both be [B, T]");
  TORCH_CHECK(torch::isfinite(log_f0).all().item<bool>(), "log_f0 must be finite");
  torch::NoGradGuard no_grad;
  const double nyquist = config.sample_rate / 2.0;
  auto f0 = torch::exp(log_f0.to(torch::kFloat64));
  if ((f0 >= nyquist).any().item<bool>()) {
    LOG(WARNING) << "F0 at or above Nyquist (" << nyquist << " Hz) clamped";
    f0 = f0.clamp_max(std::nextafter(nyquist, 0.0));
  }
  auto f0_up = torch::repeat_interleave(f0, config.hop_samples, 1);
  auto phase = torch::cumsum(f0_up / config.sample_rate, 1) +
               initial_phase.to(torch::kFloat64).unsqueeze(1);
  phase = phase - torch::floor(phase);
  auto sine = (config.amplitude * torch::sin(2.0 * M_PI * phase)).to(torch::kFloat32);
  auto uv = UpsampleVuv(vuv.to(torch::kFloat32), config.hop_samples);
  auto noise = torch::randn(sine.sizes(), generator, torch::TensorOptions().dtype(torch::kFloat32)) *
               config.unvoiced_noise_std;
  return sine * uv + noise * (1.0 - uv);
}

ExcitationOptions MakeExcitationOptions(const ModelConfig& model, int sample_rate,
                                        int hop_samples, bool random_phase) {
  ExcitationOptions o;
  o.mode = model.excitation;
  o.sine.sample_rate = sample_rate;
  o.sine.hop_samples = hop_samples;
  o.sine.amplitude = model.sine_amplitude;
  o.sine.unvoiced_noise_std = model.unvoiced_noise_std;
  o.noise_std = model.excitation_noise_std;
  o.random_phase = random_phase;
  return o;
}

torch::Tensor BuildExcitation(const torch::Tensor& log_f0, const torch::Tensor& vuv,
                              const ExcitationOptions& options,
                              std::optional<at::Generator> generator) {
  torch::NoGradGuard no_grad;
  const int64_t b = log_f0.size(0);
  auto phase = options.random_phase
                   ? torch::rand({b}, generator, torch::TensorOptions().dtype(torch::kFloat64))
                   : torch::zeros({b}, torch::kFloat64);
  auto sine = GenerateSine(log_f0, vuv, phase, options.sine, generator);
  auto noise = torch::randn(sine.sizes(), generator, torch::TensorOptions().dtype(torch::kFloat32)) *
               options.noise_std;
  auto uv = UpsampleVuv(vuv.to(torch::kFloat32), options.sine.hop_samples);
  if (options.mode == ExcitationMode::kSine) {
    uv = torch::zeros_like(uv);
    noise = torch::zeros_like(noise);
  }
  return torch::stack({sine, uv, noise}, 1);
}

}  // namespace pvits
