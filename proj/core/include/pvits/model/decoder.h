#ifndef PVITS_MODEL_DECODER_H_
#define PVITS_MODEL_DECODER_H_

#include <torch/torch.h>

#include <vector>

#include "pvits/model/config.h"

namespace pvits {

// Channel width of the decoder hidden after upsampling stage i (0-based).
int64_t DecoderChannels(const ModelConfig& config, size_t stage);

// Strides of the excitation branch, finest resolution first: a stride-1
// stage at sample rate, then the decoder's upsample rates (except the first)
// in reverse order. For [6,5,2,2,2] this is [1,2,2,2,5].
std::vector<int64_t> DownsampleStrides(const std::vector<int>& upsample_rates);

// Pre-convolution over the excitation followed by strided convolutions. The
// output list is ordered finest to coarsest; entry k matches the decoder
// hidden after upsampling stage (num_stages - 1 - k) in length and width.
// The pre-convolution output itself is never returned.
class DownsampleStackImpl : public torch::nn::Module {
 public:
  DownsampleStackImpl(const ModelConfig& config, int64_t input_channels = 3);
  std::vector<torch::Tensor> forward(const torch::Tensor& excitation);
  // Output lengths for an input of |samples| samples.
  std::vector<int64_t> OutputLengths(int64_t samples) const;

 private:
  std::vector<int64_t> strides_;
  torch::nn::Conv1d pre_{nullptr};
  torch::nn::ModuleList stages_{nullptr};
};
TORCH_MODULE(DownsampleStack);

// Multi-receptive-field residual block: per dilation, a dilated conv then a
// plain conv, both after leaky ReLU, with a residual connection.
class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int64_t channels, int64_t kernel, const std::vector<int>& dilations);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::ModuleList convs1_{nullptr}, convs2_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Inputs that shape the waveform besides z.
struct DecoderInputs {
  torch::Tensor excitation;   // [B, 3, T * hop]; required when fusion is on
  torch::Tensor frame_pitch;  // [B, 2, T]; required when concat_frame_pitch
};

// HiFi-GAN-style generator. After each transposed-conv upsampling, the
// matching-resolution excitation feature is added before the MRF blocks.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ModelConfig& config);
  // z [B, D_z, T], g [B, G, 1] -> waveform [B, T * hop]
  torch::Tensor forward(const torch::Tensor& z, const DecoderInputs& inputs,
                        const torch::Tensor& g);
  // Hidden lengths after each upsampling stage for T frames.
  std::vector<int64_t> HiddenLengths(int64_t frames) const;
  bool has_downsample() const { return !downsample_.is_empty(); }
  DownsampleStack& downsample() { return downsample_; }

 private:
  std::vector<int> rates_;
  int64_t hop_;
  size_t num_kernels_;
  bool concat_pitch_;
  torch::nn::Conv1d conv_pre_{nullptr}, cond_{nullptr}, conv_post_{nullptr};
  torch::nn::ModuleList ups_{nullptr}, resblocks_{nullptr};
  DownsampleStack downsample_{nullptr};
};
TORCH_MODULE(Generator);

}  // namespace pvits

#endif  // PVITS_MODEL_DECODER_H_
