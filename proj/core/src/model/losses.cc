#include "pvits/model/losses.h"

#include <cmath>
#include <stdexcept>

namespace pvits {

torch::Tensor MelReconLoss(const SpectrogramExtractor& stft, const torch::Tensor& generated,
                           const torch::Tensor& target, const torch::Tensor& frame_mask) {
  if (generated.sizes() != target.sizes()) {
    throw std::invalid_argument("mel loss segments differ in shape");
  }
  auto diff = torch::abs(stft.LogMel(generated) - stft.LogMel(target));  // [B, M, T]
  if (!frame_mask.defined()) return diff.mean();
  auto m = frame_mask.unsqueeze(1).to(diff.dtype());
  const auto count = m.sum() * diff.size(1);
  if (count.item<double>() <= 0) throw std::invalid_argument("mel loss mask selects no frames");
  return (diff * m).sum() / count;
}

namespace {

torch::Tensor MaskedRms(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& mask) {
  const auto count = mask.sum();
  auto mse = ((a - b).pow(2) * mask).sum() / count;
  // sqrt has an infinite slope at 0; keep the exact-zero case at zero with a
  // zero gradient.
  return torch::where(mse > 0, torch::sqrt(mse.clamp_min(1e-20)), torch::zeros_like(mse));
}

}  // namespace

torch::Tensor PitchLoss(const PitchPrediction& pred, const torch::Tensor& log_f0,
                        const torch::Tensor& vuv, const torch::Tensor& mask) {
  if (mask.sum().item<double>() <= 0) throw std::invalid_argument("pitch loss mask selects no frames");
  const auto m = mask.to(pred.log_f0.dtype());
  return MaskedRms(pred.log_f0, log_f0, m) + MaskedRms(pred.vuv, vuv, m);
}

torch::Tensor DurationLoss(const torch::Tensor& log_durations, const torch::Tensor& durations,
                           const torch::Tensor& mask) {
  const auto count = mask.sum();
  if (count.item<double>() <= 0) throw std::invalid_argument("duration loss mask selects no phonemes");
  return ((log_durations - DurationTarget(durations)).pow(2) * mask).sum() / count;
}

torch::Tensor DiscriminatorLoss(const std::vector<torch::Tensor>& real_logits,
                                const std::vector<torch::Tensor>& fake_logits) {
  TORCH_CHECK(real_logits.size() == fake_logits.size(), "discriminator output count mismatch");
  auto loss = torch::zeros({});
  for (size_t i = 0; i < real_logits.size(); ++i) {
    loss = loss + (real_logits[i] - 1.0).pow(2).mean() + fake_logits[i].pow(2).mean();
  }
  return loss;
}

torch::Tensor GeneratorAdversarialLoss(const std::vector<torch::Tensor>& fake_logits) {
  auto loss = torch::zeros({});
  for (const auto& f : fake_logits) loss = loss + (f - 1.0).pow(2).mean();
  return loss;
}

torch::Tensor FeatureMatchingLoss(const std::vector<std::vector<torch::Tensor>>& real,
                                  const std::vector<std::vector<torch::Tensor>>& fake) {
  if (real.size() != fake.size()) {
    throw std::invalid_argument("feature-map lists differ in discriminator count");
  }
  auto loss = torch::zeros({});
  int64_t maps = 0;
  for (size_t d = 0; d < real.size(); ++d) {
    if (real[d].size() != fake[d].size()) {
      throw std::invalid_argument("feature-map lists differ in layer count for discriminator " +
                                  std::to_string(d));
    }
    for (size_t l = 0; l < real[d].size(); ++l) {
      if (real[d][l].sizes() != fake[d][l].sizes()) {
        throw std::invalid_argument("feature-map shapes differ");
      }
      loss = loss + torch::abs(real[d][l].detach() - fake[d][l]).mean();
      ++maps;
    }
  }
  if (maps == 0) throw std::invalid_argument("no feature maps to match");
  return loss;
}

torch::Tensor TotalLoss(const LossTerms& t, const LossWeights& w) {
  // Double precision so that the scalar report reproduces the sum bit for bit.
  auto d = [](const torch::Tensor& x) { return x.to(torch::kFloat64); };
  auto total = d(t.recon) * w.recon;
  total = total + d(t.kl) * w.kl;
  total = total + d(t.pitch) * w.pitch;
  total = total + d(t.dur) * w.dur;
  total = total + d(t.adv) * w.adv;
  total = total + d(t.fm) * w.fm;
  return total;
}

double TotalLoss(const LossReport& r, const LossWeights& w) {
  double total = r.recon * w.recon;
  total = total + r.kl * w.kl;
  total = total + r.pitch * w.pitch;
  total = total + r.dur * w.dur;
  total = total + r.adv * w.adv;
  total = total + r.fm * w.fm;
  return total;
}

void CheckFinite(const LossReport& r) {
  const std::pair<const char*, double> items[] = {{"recon", r.recon}, {"kl", r.kl},
                                                  {"pitch", r.pitch}, {"dur", r.dur},
                                                  {"adv", r.adv},     {"fm", r.fm},
                                                  {"disc", r.disc}};
  for (const auto& [name, v] : items) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string("non-finite ") + name + " loss (" + std::to_string(v) +
                               ")");
    }
  }
}

}  // namespace pvits
