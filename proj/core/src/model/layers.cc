#include "pvits/model/layers.h"

#include <cmath>

namespace pvits {

namespace F = torch::nn::functional;

ChannelLayerNormImpl::ChannelLayerNormImpl(int64_t channels, double eps) : eps_(eps) {
  gamma_ = register_parameter("gamma", torch::ones({channels}));
  beta_ = register_parameter("beta", torch::zeros({channels}));
}

torch::Tensor ChannelLayerNormImpl::forward(const torch::Tensor& x) {
  auto y = torch::layer_norm(x.transpose(1, -1), {gamma_.size(0)}, gamma_, beta_, eps_);
  return y.transpose(1, -1);
}

torch::nn::Conv1d MakeConv1d(int64_t in, int64_t out, int64_t kernel, int64_t dilation,
                             int64_t stride) {
  return torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, kernel)
                               .dilation(dilation)
                               .stride(stride)
                               .padding(dilation * (kernel - 1) / 2));
}

WaveNetImpl::WaveNetImpl(int64_t hidden, int64_t kernel, int64_t dilation_rate, int64_t layers,
                         int64_t condition_channels, double dropout)
    : hidden_(hidden) {
  in_layers_ = register_module("in_layers", torch::nn::ModuleList());
  res_skip_layers_ = register_module("res_skip_layers", torch::nn::ModuleList());
  if (condition_channels > 0) {
    cond_layer_ = register_module("cond_layer",
                                  torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                      condition_channels, 2 * hidden * layers, 1)));
  }
  for (int64_t i = 0; i < layers; ++i) {
    const auto dilation = static_cast<int64_t>(std::pow(dilation_rate, i));
    in_layers_->push_back(MakeConv1d(hidden, 2 * hidden, kernel, dilation));
    const int64_t out = i + 1 < layers ? 2 * hidden : hidden;
    res_skip_layers_->push_back(torch::nn::Conv1d(torch::nn::Conv1dOptions(hidden, out, 1)));
  }
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor WaveNetImpl::forward(torch::Tensor x, const torch::Tensor& mask,
                                   const torch::Tensor& g) {
  auto output = torch::zeros_like(x);
  torch::Tensor cond;
  if (cond_layer_ && g.defined()) cond = cond_layer_(g);
  const auto n = static_cast<int64_t>(in_layers_->size());
  for (int64_t i = 0; i < n; ++i) {
    auto x_in = in_layers_[i]->as<torch::nn::Conv1d>()->forward(x);
    if (cond.defined()) x_in = x_in + cond.narrow(1, i * 2 * hidden_, 2 * hidden_);
    auto acts = torch::tanh(x_in.narrow(1, 0, hidden_)) *
                torch::sigmoid(x_in.narrow(1, hidden_, hidden_));
    acts = drop_(acts);
    auto rs = res_skip_layers_[i]->as<torch::nn::Conv1d>()->forward(acts);
    if (i + 1 < n) {
      x = (x + rs.narrow(1, 0, hidden_)) * mask;
      output = output + rs.narrow(1, hidden_, hidden_);
    } else {
      output = output + rs;
    }
  }
  return output * mask;
}

MaskedSelfAttentionImpl::MaskedSelfAttentionImpl(int64_t channels, int64_t heads, double dropout)
    : channels_(channels), heads_(heads) {
  auto conv = [&](const char* name) {
    return register_module(name, torch::nn::Conv1d(torch::nn::Conv1dOptions(channels, channels, 1)));
  };
  q_ = conv("q");
  k_ = conv("k");
  v_ = conv("v");
  o_ = conv("o");
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor MaskedSelfAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& mask) {
  const int64_t b = x.size(0), t = x.size(2), d = channels_ / heads_;
  auto split = [&](const torch::Tensor& y) { return y.view({b, heads_, d, t}).transpose(2, 3); };
  auto q = split(q_(x)), k = split(k_(x)), v = split(v_(x));
  auto scores = torch::matmul(q, k.transpose(2, 3)) / std::sqrt(static_cast<double>(d));
  auto key_mask = mask.unsqueeze(2);  // [B, 1, 1, T]
  scores = scores.masked_fill(key_mask == 0, -1e4);
  auto attn = drop_(torch::softmax(scores, -1));
  auto out = torch::matmul(attn, v).transpose(2, 3).reshape({b, channels_, t});
  return o_(out) * mask;
}

ConvFeedForwardImpl::ConvFeedForwardImpl(int64_t channels, int64_t filter, int64_t kernel,
                                         double dropout) {
  conv1_ = register_module("conv1", MakeConv1d(channels, filter, kernel));
  conv2_ = register_module("conv2", MakeConv1d(filter, channels, kernel));
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor ConvFeedForwardImpl::forward(const torch::Tensor& x, const torch::Tensor& mask) {
  auto y = torch::relu(conv1_(x * mask));
  y = drop_(y);
  return conv2_(y * mask) * mask;
}

torch::Tensor SinusoidalPositions(int64_t length, int64_t channels) {
  auto pos = torch::arange(length, torch::kFloat32).unsqueeze(0);             // [1, T]
  auto i = torch::arange(channels / 2, torch::kFloat32).unsqueeze(1);         // [C/2, 1]
  auto freq = torch::exp(-std::log(10000.0) * 2.0 * i / static_cast<double>(channels));
  auto angle = freq * pos;                                                    // [C/2, T]
  auto table = torch::cat({torch::sin(angle), torch::cos(angle)}, 0);
  if (table.size(0) < channels) table = torch::cat({table, torch::zeros({1, length})}, 0);
  return table.unsqueeze(0);
}

}  // namespace pvits
