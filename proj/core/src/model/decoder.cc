#include "pvits/model/decoder.h"

#include <stdexcept>
#include <string>

#include "pvits/model/layers.h"

namespace pvits {

namespace F = torch::nn::functional;

namespace {
constexpr double kLeakySlope = 0.1;

torch::Tensor Leaky(const torch::Tensor& x, double slope = kLeakySlope) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(slope));
}

void InitNormal(torch::nn::Module& m) {
  torch::NoGradGuard no_grad;
  for (auto& p : m.named_parameters(/*recurse=*/false)) {
    if (p.key() == "weight") p.value().normal_(0.0, 0.01);
  }
}
}  // namespace

int64_t DecoderChannels(const ModelConfig& config, size_t stage) {
  return config.upsample_initial_channels >> (stage + 1);
}

std::vector<int64_t> DownsampleStrides(const std::vector<int>& rates) {
  std::vector<int64_t> strides{1};
  for (size_t i = rates.size(); i-- > 1;) strides.push_back(rates[i]);
  return strides;
}

DownsampleStackImpl::DownsampleStackImpl(const ModelConfig& c, int64_t input_channels)
    : strides_(DownsampleStrides(c.upsample_rates)) {
  const size_t stages = c.upsample_rates.size();
  const int64_t finest = DecoderChannels(c, stages - 1);
  pre_ = register_module("pre", MakeConv1d(input_channels, finest, 7));
  stages_ = register_module("stages", torch::nn::ModuleList());
  int64_t in = finest;
  for (size_t k = 0; k < strides_.size(); ++k) {
    const int64_t out = DecoderChannels(c, stages - 1 - k);
    const int64_t s = strides_[k];
    // kernel 2s+1, padding s: exactly L / s outputs when s divides L.
    stages_->push_back(torch::nn::Conv1d(
        torch::nn::Conv1dOptions(in, out, 2 * s + 1).stride(s).padding(s)));
    in = out;
  }
}

std::vector<torch::Tensor> DownsampleStackImpl::forward(const torch::Tensor& excitation) {
  std::vector<torch::Tensor> outs;
  auto x = pre_(excitation);
  for (size_t k = 0; k < stages_->size(); ++k) {
    x = stages_[k]->as<torch::nn::Conv1d>()->forward(Leaky(x));
    outs.push_back(x);
  }
  return outs;
}

std::vector<int64_t> DownsampleStackImpl::OutputLengths(int64_t samples) const {
  std::vector<int64_t> lengths;
  int64_t l = samples;
  for (int64_t s : strides_) {
    l = (l + 2 * s - (2 * s + 1)) / s + 1;
    lengths.push_back(l);
  }
  return lengths;
}

ResBlockImpl::ResBlockImpl(int64_t channels, int64_t kernel, const std::vector<int>& dilations) {
  convs1_ = register_module("convs1", torch::nn::ModuleList());
  convs2_ = register_module("convs2", torch::nn::ModuleList());
  for (int d : dilations) {
    auto c1 = MakeConv1d(channels, channels, kernel, d);
    auto c2 = MakeConv1d(channels, channels, kernel, 1);
    InitNormal(*c1);
    InitNormal(*c2);
    convs1_->push_back(c1);
    convs2_->push_back(c2);
  }
}

torch::Tensor ResBlockImpl::forward(torch::Tensor x) {
  for (size_t i = 0; i < convs1_->size(); ++i) {
    auto y = convs1_[i]->as<torch::nn::Conv1d>()->forward(Leaky(x));
    y = convs2_[i]->as<torch::nn::Conv1d>()->forward(Leaky(y));
    x = x + y;
  }
  return x;
}

GeneratorImpl::GeneratorImpl(const ModelConfig& c)
    : rates_(c.upsample_rates),
      hop_(c.UpsampleProduct()),
      num_kernels_(c.resblock_kernels.size()),
      concat_pitch_(c.concat_frame_pitch) {
  const int64_t in = c.latent_channels + (concat_pitch_ ? 2 : 0);
  conv_pre_ = register_module("conv_pre", MakeConv1d(in, c.upsample_initial_channels, 7));
  cond_ = register_module("cond", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                      c.condition_channels, c.upsample_initial_channels, 1)));
  ups_ = register_module("ups", torch::nn::ModuleList());
  resblocks_ = register_module("resblocks", torch::nn::ModuleList());
  int64_t ch = c.upsample_initial_channels;
  for (size_t i = 0; i < rates_.size(); ++i) {
    const int64_t r = rates_[i];
    const int64_t out = DecoderChannels(c, i);
    // kernel 2r, padding r/2 (r even) or kernel 2r+1, padding (r+1)/2 (r odd):
    // both give exactly L * r outputs.
    const int64_t kernel = r % 2 == 0 ? 2 * r : 2 * r + 1;
    const int64_t pad = (kernel - r) / 2;
    auto up = torch::nn::ConvTranspose1d(
        torch::nn::ConvTranspose1dOptions(ch, out, kernel).stride(r).padding(pad));
    InitNormal(*up);
    ups_->push_back(up);
    for (size_t j = 0; j < num_kernels_; ++j) {
      resblocks_->push_back(ResBlock(out, c.resblock_kernels[j], c.resblock_dilations[j]));
    }
    ch = out;
  }
  // No bias: a learned offset shows up as DC in the waveform, which the mel
  // loss barely sees.
  conv_post_ = register_module(
      "conv_post", torch::nn::Conv1d(torch::nn::Conv1dOptions(ch, 1, 7).padding(3).bias(false)));
  InitNormal(*conv_post_);
  if (c.UsesExcitation()) downsample_ = register_module("downsample", DownsampleStack(c));
}

std::vector<int64_t> GeneratorImpl::HiddenLengths(int64_t frames) const {
  std::vector<int64_t> lengths;
  int64_t l = frames;
  for (size_t i = 0; i < rates_.size(); ++i) {
    const int64_t r = rates_[i];
    const int64_t kernel = r % 2 == 0 ? 2 * r : 2 * r + 1;
    const int64_t pad = (kernel - r) / 2;
    l = (l - 1) * r - 2 * pad + kernel;
    lengths.push_back(l);
  }
  return lengths;
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z, const DecoderInputs& inputs,
                                     const torch::Tensor& g) {
  const int64_t frames = z.size(2);
  auto x = z;
  if (concat_pitch_) {
    TORCH_CHECK(inputs.frame_pitch.defined() && inputs.frame_pitch.size(2) == frames,
                "decoder expects frame-level pitch [B, 2, T]");
    x = torch::cat({x, inputs.frame_pitch}, 1);
  }
  std::vector<torch::Tensor> branch;
  if (has_downsample()) {
    if (!inputs.excitation.defined() || inputs.excitation.size(2) != frames * hop_) {
      throw std::invalid_argument(
          "excitation length " +
          (inputs.excitation.defined() ? std::to_string(inputs.excitation.size(2)) : "none") +
          " does not match " + std::to_string(frames) + " frames x " + std::to_string(hop_));
    }
    branch = downsample_(inputs.excitation);
  }
  x = conv_pre_(x);
  if (g.defined()) x = x + cond_(g);
  const size_t stages = rates_.size();
  for (size_t i = 0; i < stages; ++i) {
    x = Leaky(x);
    x = ups_[i]->as<torch::nn::ConvTranspose1d>()->forward(x);
    if (!branch.empty()) x = x + branch[stages - 1 - i];
    torch::Tensor acc;
    for (size_t j = 0; j < num_kernels_; ++j) {
      auto y = resblocks_[i * num_kernels_ + j]->as<ResBlock>()->forward(x);
      acc = acc.defined() ? acc + y : y;
    }
    x = acc / static_cast<double>(num_kernels_);
  }
  x = conv_post_(Leaky(x, 0.01));
  return torch::tanh(x).squeeze(1);
}

}  // namespace pvits
