#include "pvits/model/posterior_encoder.h"

#include <stdexcept>

namespace pvits {

PosteriorEncoderImpl::PosteriorEncoderImpl(const ModelConfig& c, int64_t input_bins)
    : latent_(c.latent_channels) {
  pre_ = register_module(
      "pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(input_bins, c.hidden_channels, 1)));
  enc_ = register_module("enc", WaveNet(c.hidden_channels, c.posterior_kernel, 1,
                                        c.posterior_layers, c.condition_channels));
  proj_ = register_module("proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                      c.hidden_channels, 2 * c.latent_channels, 1)));
}

PosteriorParams PosteriorEncoderImpl::forward(const torch::Tensor& linear,
                                              const torch::Tensor& mask, const torch::Tensor& g) {
  if (linear.size(2) == 0) throw std::invalid_argument("posterior encoder got zero frames");
  auto x = pre_(linear) * mask;
  x = enc_(x, mask, g);
  auto stats = proj_(x) * mask;
  auto log_sigma = torch::clamp(stats.narrow(1, latent_, latent_), kMinLogSigma, kMaxLogSigma);
  return {stats.narrow(1, 0, latent_), log_sigma * mask};
}

torch::Tensor SampleLatent(const PosteriorParams& params, const torch::Tensor& noise,
                           const torch::Tensor& mask) {
  return (params.mu + torch::exp(params.log_sigma) * noise) * mask;
}

}  // namespace pvits
