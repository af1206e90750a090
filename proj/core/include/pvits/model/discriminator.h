#ifndef PVITS_MODEL_DISCRIMINATOR_H_
#define PVITS_MODEL_DISCRIMINATOR_H_

#include <torch/torch.h>

#include <vector>

#include "pvits/model/config.h"

namespace pvits {

/// Logits and intermediate feature maps of every sub-discriminator.
struct DiscriminatorOutput {
  std::vector<torch::Tensor> logits;
  std::vector<std::vector<torch::Tensor>> feature_maps;
};

// Folds the waveform into [B, 1, L / p, p] and applies (k, 1) convolutions.
class PeriodDiscriminatorImpl : public torch::nn::Module {
 public:
  PeriodDiscriminatorImpl(int64_t period, int64_t base_channels);
  torch::Tensor forward(const torch::Tensor& wave, std::vector<torch::Tensor>* fmaps);

 private:
  int64_t period_;
  torch::nn::ModuleList convs_{nullptr};
  torch::nn::Conv2d post_{nullptr};
};
TORCH_MODULE(PeriodDiscriminator);

// Strided and grouped 1-D convolutions over the raw waveform.
class ScaleDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit ScaleDiscriminatorImpl(int64_t base_channels);
  torch::Tensor forward(const torch::Tensor& wave, std::vector<torch::Tensor>* fmaps);

 private:
  torch::nn::ModuleList convs_{nullptr};
  torch::nn::Conv1d post_{nullptr};
};
TORCH_MODULE(ScaleDiscriminator);

class MultiDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiDiscriminatorImpl(const ModelConfig& config);
  // wave [B, L]
  DiscriminatorOutput forward(const torch::Tensor& wave);
  size_t num_discriminators() const { return periods_.size() + (scale_.is_empty() ? 0 : 1); }

 private:
  std::vector<PeriodDiscriminator> periods_;
  ScaleDiscriminator scale_{nullptr};
};
TORCH_MODULE(MultiDiscriminator);

}  // namespace pvits

#endif  // PVITS_MODEL_DISCRIMINATOR_H_
