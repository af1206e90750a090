#ifndef PVITS_MODEL_LAYERS_H_
#define PVITS_MODEL_LAYERS_H_

#include <torch/torch.h>

namespace pvits {

// LayerNorm over the channel axis of [B, C, T].
class ChannelLayerNormImpl : public torch::nn::Module {
 public:
  explicit ChannelLayerNormImpl(int64_t channels, double eps = 1e-5);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::Tensor gamma_, beta_;
  double eps_;
};
TORCH_MODULE(ChannelLayerNorm);

torch::nn::Conv1d MakeConv1d(int64_t in, int64_t out, int64_t kernel, int64_t dilation = 1,
                             int64_t stride = 1);

// Gated dilated convolution stack with residual and skip paths, optionally
// conditioned on a global vector g [B, G, 1].
class WaveNetImpl : public torch::nn::Module {
 public:
  WaveNetImpl(int64_t hidden, int64_t kernel, int64_t dilation_rate, int64_t layers,
              int64_t condition_channels, double dropout = 0.0);
  // x [B, H, T], mask [B, 1, T] -> skip sum [B, H, T] (masked).
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& mask, const torch::Tensor& g);

 private:
  int64_t hidden_;
  torch::nn::ModuleList in_layers_{nullptr};
  torch::nn::ModuleList res_skip_layers_{nullptr};
  torch::nn::Conv1d cond_layer_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(WaveNet);

// Multi-head self-attention over [B, C, T]; keys outside the mask receive no
// weight and masked query positions are zeroed.
class MaskedSelfAttentionImpl : public torch::nn::Module {
 public:
  MaskedSelfAttentionImpl(int64_t channels, int64_t heads, double dropout);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask);

 private:
  int64_t channels_, heads_;
  torch::nn::Conv1d q_{nullptr}, k_{nullptr}, v_{nullptr}, o_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(MaskedSelfAttention);

// Two masked convolutions with ReLU in between.
class ConvFeedForwardImpl : public torch::nn::Module {
 public:
  ConvFeedForwardImpl(int64_t channels, int64_t filter, int64_t kernel, double dropout);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask);

 private:
  torch::nn::Conv1d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(ConvFeedForward);

// Sinusoidal position table [1, C, T].
torch::Tensor SinusoidalPositions(int64_t length, int64_t channels);

}  // namespace pvits

#endif  // PVITS_MODEL_LAYERS_H_
