#include "pvits/model/prior_encoder.h"

#include <cmath>
#include <stdexcept>

namespace pvits {

TextEncoderImpl::TextEncoderImpl(const ModelConfig& c) : hidden_(c.hidden_channels) {
  phoneme_emb_ = register_module("phoneme_emb", torch::nn::Embedding(c.num_phonemes, hidden_));
  accent_emb_ = register_module("accent_emb", torch::nn::Embedding(c.num_accents, hidden_));
  torch::nn::init::normal_(phoneme_emb_->weight, 0.0, 1.0 / std::sqrt(hidden_));
  torch::nn::init::normal_(accent_emb_->weight, 0.0, 1.0 / std::sqrt(hidden_));
  cond_ = register_module(
      "cond", torch::nn::Conv1d(torch::nn::Conv1dOptions(c.condition_channels, hidden_, 1)));
  attn_ = register_module("attn", torch::nn::ModuleList());
  ffn_ = register_module("ffn", torch::nn::ModuleList());
  norm1_ = register_module("norm1", torch::nn::ModuleList());
  norm2_ = register_module("norm2", torch::nn::ModuleList());
  for (int i = 0; i < c.text_layers; ++i) {
    attn_->push_back(MaskedSelfAttention(hidden_, c.text_heads, c.dropout));
    ffn_->push_back(ConvFeedForward(hidden_, c.text_ffn_channels, c.text_ffn_kernel, c.dropout));
    norm1_->push_back(ChannelLayerNorm(hidden_));
    norm2_->push_back(ChannelLayerNorm(hidden_));
  }
  drop_ = register_module("drop", torch::nn::Dropout(c.dropout));
}

torch::Tensor TextEncoderImpl::forward(const torch::Tensor& phonemes, const torch::Tensor& accents,
                                       const torch::Tensor& mask, const torch::Tensor& g) {
  auto x = (phoneme_emb_(phonemes) + accent_emb_(accents)) * std::sqrt(hidden_);
  x = x.transpose(1, 2);  // [B, H, N]
  x = x + SinusoidalPositions(x.size(2), hidden_).to(x.device()) + cond_(g);
  x = x * mask;
  for (size_t i = 0; i < attn_->size(); ++i) {
    auto y = attn_[i]->as<MaskedSelfAttention>()->forward(x, mask);
    x = norm1_[i]->as<ChannelLayerNorm>()->forward(x + drop_(y));
    y = ffn_[i]->as<ConvFeedForward>()->forward(x, mask);
    x = norm2_[i]->as<ChannelLayerNorm>()->forward(x + drop_(y));
  }
  return x * mask;
}

DurationPredictorImpl::DurationPredictorImpl(const ModelConfig& c) {
  const int64_t h = c.hidden_channels, f = c.duration_channels;
  conv1_ = register_module("conv1", MakeConv1d(h, f, c.duration_kernel));
  norm1_ = register_module("norm1", ChannelLayerNorm(f));
  conv2_ = register_module("conv2", MakeConv1d(f, f, c.duration_kernel));
  norm2_ = register_module("norm2", ChannelLayerNorm(f));
  proj_ = register_module("proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(f, 1, 1)));
  cond_ = register_module(
      "cond", torch::nn::Conv1d(torch::nn::Conv1dOptions(c.condition_channels, h, 1)));
  drop_ = register_module("drop", torch::nn::Dropout(c.dropout));
}

torch::Tensor DurationPredictorImpl::forward(const torch::Tensor& hidden, const torch::Tensor& mask,
                                             const torch::Tensor& g) {
  auto x = hidden.detach() + cond_(g.detach());
  x = drop_(norm1_(torch::relu(conv1_(x * mask))));
  x = drop_(norm2_(torch::relu(conv2_(x * mask))));
  return (proj_(x * mask) * mask).squeeze(1);
}

torch::Tensor DurationTarget(const torch::Tensor& durations) {
  return torch::log1p(durations.to(torch::kFloat32));
}

torch::Tensor DurationsFromPrediction(const torch::Tensor& log_durations,
                                      const torch::Tensor& mask) {
  auto frames = torch::round(torch::exp(log_durations) - 1.0).clamp_min(1.0);
  return (frames * mask.squeeze(1)).to(torch::kInt64);
}

ExpandedFrames ExpandToFrames(const torch::Tensor& hidden, const torch::Tensor& durations) {
  const int64_t b = hidden.size(0), h = hidden.size(1);
  auto lengths = durations.sum(1).to(torch::kInt64);
  if ((lengths <= 0).any().item<bool>()) {
    throw std::invalid_argument("cannot expand an utterance with zero total duration");
  }
  const int64_t t_max = lengths.max().item<int64_t>();
  auto index = torch::zeros({b, t_max}, torch::kInt64);
  for (int64_t k = 0; k < b; ++k) {
    auto rep = torch::repeat_interleave(torch::arange(durations.size(1), torch::kInt64),
                                        durations[k].to(torch::kInt64));
    index[k].narrow(0, 0, rep.size(0)).copy_(rep);
  }
  auto frames = torch::gather(hidden, 2, index.unsqueeze(1).expand({b, h, t_max}).to(hidden.device()));
  auto mask = torch::arange(t_max).unsqueeze(0) < lengths.unsqueeze(1);
  frames = frames * mask.unsqueeze(1).to(frames.dtype());
  return {frames, lengths};
}

FramePriorNetworkImpl::FramePriorNetworkImpl(const ModelConfig& c)
    : latent_(c.latent_channels), tap_(c.pitch_tap_stack) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  norms_ = register_module("norms", torch::nn::ModuleList());
  for (int i = 0; i < c.frame_prior_stacks; ++i) {
    convs_->push_back(MakeConv1d(c.hidden_channels, c.hidden_channels, c.frame_prior_kernel));
    norms_->push_back(ChannelLayerNorm(c.hidden_channels));
  }
  proj_ = register_module("proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(
                                      c.hidden_channels, 2 * c.latent_channels, 1)));
  drop_ = register_module("drop", torch::nn::Dropout(c.dropout));
}

FramePriorOutput FramePriorNetworkImpl::forward(const torch::Tensor& frames,
                                                const torch::Tensor& mask) {
  auto x = frames * mask;
  torch::Tensor tap;
  for (size_t i = 0; i < convs_->size(); ++i) {
    auto y = convs_[i]->as<torch::nn::Conv1d>()->forward(x * mask);
    y = drop_(torch::relu(norms_[i]->as<ChannelLayerNorm>()->forward(y)));
    x = (x + y) * mask;
    if (static_cast<int>(i) + 1 == tap_) tap = x;
  }
  auto stats = proj_(x) * mask;
  return {{stats.narrow(1, 0, latent_), stats.narrow(1, latent_, latent_)}, tap};
}

PitchPredictorImpl::PitchPredictorImpl(const ModelConfig& c) {
  const int64_t h = c.hidden_channels;
  convs_ = register_module("convs", torch::nn::ModuleList());
  norms_ = register_module("norms", torch::nn::ModuleList());
  for (int i = 0; i < c.pitch_layers; ++i) {
    convs_->push_back(MakeConv1d(h, h, c.pitch_kernel));
    norms_->push_back(ChannelLayerNorm(h));
  }
  cond_ = register_module(
      "cond", torch::nn::Conv1d(torch::nn::Conv1dOptions(c.condition_channels, h, 1)));
  proj_ = register_module("proj", torch::nn::Conv1d(torch::nn::Conv1dOptions(h, 2, 1)));
  drop_ = register_module("drop", torch::nn::Dropout(c.pitch_dropout));
  log_f0_mean_ = register_buffer("log_f0_mean", torch::full({1}, std::log(150.0)));
  log_f0_std_ = register_buffer("log_f0_std", torch::ones({1}) * 0.25);
}

void PitchPredictorImpl::SetStats(double log_f0_mean, double log_f0_std) {
  torch::NoGradGuard no_grad;
  log_f0_mean_.fill_(log_f0_mean);
  log_f0_std_.fill_(std::max(log_f0_std, 1e-3));
}

PitchPrediction PitchPredictorImpl::forward(const torch::Tensor& features,
                                            const torch::Tensor& mask, const torch::Tensor& g) {
  auto x = (features + cond_(g)) * mask;
  for (size_t i = 0; i < convs_->size(); ++i) {
    x = convs_[i]->as<torch::nn::Conv1d>()->forward(x * mask);
    x = drop_(norms_[i]->as<ChannelLayerNorm>()->forward(torch::relu(x)));
  }
  auto out = proj_(x * mask);
  const auto m = mask.squeeze(1);
  auto log_f0 = (out.select(1, 0) * log_f0_std_ + log_f0_mean_) * m;
  auto vuv = torch::sigmoid(out.select(1, 1)) * m;
  return {log_f0, vuv};
}

AffineCouplingImpl::AffineCouplingImpl(int64_t channels, int64_t hidden, int64_t kernel,
                                       int64_t wn_layers, int64_t condition_channels)
    : half_(channels / 2) {
  pre_ = register_module("pre", torch::nn::Conv1d(torch::nn::Conv1dOptions(half_, hidden, 1)));
  enc_ = register_module("enc", WaveNet(hidden, kernel, 1, wn_layers, condition_channels));
  post_ = register_module("post",
                          torch::nn::Conv1d(torch::nn::Conv1dOptions(hidden, 2 * half_, 1)));
  torch::NoGradGuard no_grad;
  post_->weight.zero_();
  post_->bias.zero_();
}

std::pair<torch::Tensor, torch::Tensor> AffineCouplingImpl::Stats(const torch::Tensor& x0,
                                                                  const torch::Tensor& mask,
                                                                  const torch::Tensor& g) {
  auto h = pre_(x0) * mask;
  h = enc_(h, mask, g);
  auto stats = post_(h) * mask;
  return {stats.narrow(1, 0, half_), stats.narrow(1, half_, half_)};
}

FlowResult AffineCouplingImpl::forward(const torch::Tensor& x, const torch::Tensor& mask,
                                       const torch::Tensor& g) {
  auto x0 = x.narrow(1, 0, half_);
  auto x1 = x.narrow(1, half_, half_);
  auto [shift, log_scale] = Stats(x0, mask, g);
  x1 = (shift + x1 * torch::exp(log_scale)) * mask;
  auto y = torch::flip(torch::cat({x0, x1}, 1), {1});
  return {y, (log_scale * mask).sum({1, 2})};
}

torch::Tensor AffineCouplingImpl::inverse(const torch::Tensor& y, const torch::Tensor& mask,
                                          const torch::Tensor& g) {
  auto x = torch::flip(y, {1});
  auto x0 = x.narrow(1, 0, half_);
  auto x1 = x.narrow(1, half_, half_);
  auto [shift, log_scale] = Stats(x0, mask, g);
  x1 = (x1 - shift) * torch::exp(-log_scale) * mask;
  return torch::cat({x0, x1}, 1);
}

FlowStackImpl::FlowStackImpl(const ModelConfig& c) {
  for (int i = 0; i < c.flow_steps; ++i) {
    steps_.push_back(register_module(
        "step" + std::to_string(i),
        AffineCoupling(c.latent_channels, c.hidden_channels, c.flow_kernel, c.flow_wn_layers,
                       c.condition_channels)));
  }
}

FlowResult FlowStackImpl::forward(const torch::Tensor& z, const torch::Tensor& mask,
                                  const torch::Tensor& g) {
  if (!torch::isfinite(z).all().item<bool>()) {
    throw std::invalid_argument("flow input contains non-finite values");
  }
  auto x = z;
  auto log_det = torch::zeros({z.size(0)}, z.options());
  for (auto& step : steps_) {
    auto r = step->forward(x, mask, g);
    x = r.z;
    log_det = log_det + r.log_det;
  }
  return {x, log_det};
}

torch::Tensor FlowStackImpl::inverse(const torch::Tensor& u, const torch::Tensor& mask,
                                     const torch::Tensor& g) {
  if (!torch::isfinite(u).all().item<bool>()) {
    throw std::invalid_argument("flow input contains non-finite values");
  }
  auto x = u;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) x = (*it)->inverse(x, mask, g);
  return x;
}

torch::Tensor PriorKl(const torch::Tensor& flowed_z, const torch::Tensor& log_sigma_q,
                      const PriorParams& prior, const torch::Tensor& log_det,
                      const torch::Tensor& mask) {
  const auto count = mask.sum() * flowed_z.size(1);
  if (count.item<double>() <= 0) throw std::invalid_argument("KL mask selects no frames");
  auto kl = prior.log_sigma - log_sigma_q - 0.5 +
            0.5 * (flowed_z - prior.mu).pow(2) * torch::exp(-2.0 * prior.log_sigma);
  return ((kl * mask).sum() - log_det.sum()) / count;
}

torch::Tensor AnalyticGaussianKl(const GaussianParams& q, const GaussianParams& p,
                                 const torch::Tensor& mask) {
  const auto count = mask.sum() * q.mu.size(1);
  if (count.item<double>() <= 0) throw std::invalid_argument("KL mask selects no frames");
  auto kl = p.log_sigma - q.log_sigma +
            (torch::exp(2.0 * q.log_sigma) + (q.mu - p.mu).pow(2)) /
                (2.0 * torch::exp(2.0 * p.log_sigma)) -
            0.5;
  return (kl * mask).sum() / count;
}

}  // namespace pvits
