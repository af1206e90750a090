#ifndef PVITS_MODEL_POSTERIOR_ENCODER_H_
#define PVITS_MODEL_POSTERIOR_ENCODER_H_

#include <torch/torch.h>

#include "pvits/model/config.h"
#include "pvits/model/layers.h"
#include "pvits/model/prior_encoder.h"

namespace pvits {

using PosteriorParams = GaussianParams;

// q(z|x): WaveNet-style gated convolutions over the linear spectrogram.
class PosteriorEncoderImpl : public torch::nn::Module {
 public:
  static constexpr double kMinLogSigma = -9.0;
  static constexpr double kMaxLogSigma = 2.0;

  PosteriorEncoderImpl(const ModelConfig& config, int64_t input_bins);
  // linear [B, F, T], mask [B, 1, T], g [B, G, 1]
  PosteriorParams forward(const torch::Tensor& linear, const torch::Tensor& mask,
                          const torch::Tensor& g);

 private:
  int64_t latent_;
  torch::nn::Conv1d pre_{nullptr}, proj_{nullptr};
  WaveNet enc_{nullptr};
};
TORCH_MODULE(PosteriorEncoder);

// Reparameterised draw z = mu + exp(log_sigma) * noise, masked.
torch::Tensor SampleLatent(const PosteriorParams& params, const torch::Tensor& noise,
                           const torch::Tensor& mask);

}  // namespace pvits

#endif  // PVITS_MODEL_POSTERIOR_ENCODER_H_
