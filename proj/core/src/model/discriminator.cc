#include "pvits/model/discriminator.h"

namespace pvits {

namespace F = torch::nn::functional;

namespace {
torch::Tensor Leaky(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.1));
}
}  // namespace

PeriodDiscriminatorImpl::PeriodDiscriminatorImpl(int64_t period, int64_t base)
    : period_(period) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  const int64_t widths[] = {1, base, base * 2, base * 4, base * 4};
  for (int i = 0; i < 4; ++i) {
    const int64_t stride = i < 3 ? 3 : 1;
    convs_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[i], widths[i + 1], {5, 1})
                                            .stride({stride, 1})
                                            .padding({2, 0})));
  }
  post_ = register_module("post", torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[4], 1, {3, 1})
                                                        .padding({1, 0})));
}

torch::Tensor PeriodDiscriminatorImpl::forward(const torch::Tensor& wave,
                                               std::vector<torch::Tensor>* fmaps) {
  auto x = wave.unsqueeze(1);  // [B, 1, L]
  const int64_t length = x.size(2);
  if (length % period_ != 0) {
    const int64_t pad = period_ - length % period_;
    auto opts = F::PadFuncOptions({0, pad});
    if (pad < length) {
      opts.mode(torch::kReflect);
    } else {
      opts.mode(torch::kConstant);
    }
    x = F::pad(x, opts);
  }
  x = x.view({x.size(0), 1, x.size(2) / period_, period_});
  for (auto& m : *convs_) {
    x = Leaky(m->as<torch::nn::Conv2d>()->forward(x));
    fmaps->push_back(x);
  }
  x = post_(x);
  fmaps->push_back(x);
  return x.flatten(1);
}

ScaleDiscriminatorImpl::ScaleDiscriminatorImpl(int64_t base) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  convs_->push_back(torch::nn::Conv1d(torch::nn::Conv1dOptions(1, base, 15).padding(7)));
  convs_->push_back(torch::nn::Conv1d(
      torch::nn::Conv1dOptions(base, base * 2, 41).stride(4).groups(4).padding(20)));
  convs_->push_back(torch::nn::Conv1d(
      torch::nn::Conv1dOptions(base * 2, base * 4, 41).stride(4).groups(16).padding(20)));
  convs_->push_back(
      torch::nn::Conv1d(torch::nn::Conv1dOptions(base * 4, base * 4, 5).padding(2)));
  post_ = register_module("post",
                          torch::nn::Conv1d(torch::nn::Conv1dOptions(base * 4, 1, 3).padding(1)));
}

torch::Tensor ScaleDiscriminatorImpl::forward(const torch::Tensor& wave,
                                              std::vector<torch::Tensor>* fmaps) {
  auto x = wave.unsqueeze(1);
  for (auto& m : *convs_) {
    x = Leaky(m->as<torch::nn::Conv1d>()->forward(x));
    fmaps->push_back(x);
  }
  x = post_(x);
  fmaps->push_back(x);
  return x.flatten(1);
}

MultiDiscriminatorImpl::MultiDiscriminatorImpl(const ModelConfig& c) {
  for (int p : c.disc_periods) {
    periods_.push_back(register_module("period" + std::to_string(p),
                                       PeriodDiscriminator(p, c.disc_channels)));
  }
  if (c.disc_use_scale) scale_ = register_module("scale", ScaleDiscriminator(c.disc_channels));
}

DiscriminatorOutput MultiDiscriminatorImpl::forward(const torch::Tensor& wave) {
  DiscriminatorOutput out;
  auto run = [&](auto& d) {
    std::vector<torch::Tensor> fmaps;
    out.logits.push_back(d->forward(wave, &fmaps));
    out.feature_maps.push_back(std::move(fmaps));
  };
  if (!scale_.is_empty()) run(scale_);
  for (auto& d : periods_) run(d);
  return out;
}

}  // namespace pvits
